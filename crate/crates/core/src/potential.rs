//! Mean-field and quasi-stationary effective potentials at fixed total density.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Geometry, InitialCondition, LatticeConfig, Simulation};
use crate::model::{Couplings, ModelParams};
use crate::output::{create_buffered, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub height: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCurve {
    pub rho_grid: Vec<f64>,
    /// NaN marks empty histogram bins.
    pub phi: Vec<f64>,
    /// Histogram counts; empty for the mean-field curve.
    pub counts: Vec<u64>,
    pub minima: Vec<(f64, f64)>,
    pub barrier: Option<Barrier>,
    /// Cell samples, including those above the histogram range.
    pub samples: u64,
    /// Cell samples above the histogram range.
    pub overflow: u64,
    pub insufficient_samples: bool,
}

/// `u2 rho^2/2 + u3 rho^3/3 + u4 rho^4/4 - tau n rho` on `rho_grid`, with minima
/// refined to roots of the drift and the highest barrier between adjacent minima.
pub fn mf_potential(n: f64, params: &ModelParams, rho_grid: &[f64]) -> Result<PotentialCurve> {
    check_grid(rho_grid)?;
    let c = Couplings::at(n, params)?;
    let seed = params.tau * n;
    let v = |r: f64| r * r * (c.u2 / 2.0 + r * (c.u3 / 3.0 + r * c.u4 / 4.0)) - seed * r;
    let dv = |r: f64| -c.reaction(r) - seed;
    let phi: Vec<f64> = rho_grid.iter().map(|&r| v(r)).collect();

    let refine = |k: usize, want_min: bool| -> f64 {
        let lo = rho_grid[k.saturating_sub(1)];
        let hi = rho_grid[(k + 1).min(rho_grid.len() - 1)];
        let (mut a, mut b) = (lo, hi);
        let sign = if want_min { 1.0 } else { -1.0 };
        if sign * dv(a) > 0.0 || sign * dv(b) < 0.0 {
            return rho_grid[k];
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if sign * dv(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        if dv(a).abs() <= dv(b).abs() {
            a
        } else {
            b
        }
    };

    let (min_idx, max_idx) = extrema(&phi);
    let minima: Vec<(f64, f64)> = min_idx.iter().map(|&k| refine(k, true)).map(|r| (r, v(r))).collect();
    let maxima: Vec<(f64, f64)> = max_idx.iter().map(|&k| refine(k, false)).map(|r| (r, v(r))).collect();
    let barrier = barrier_between(&minima, &maxima);
    Ok(PotentialCurve { rho_grid: rho_grid.to_vec(), phi, counts: Vec::new(), minima, barrier, samples: 0, overflow: 0, insufficient_samples: false })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(invalid("rho_grid", "need at least 3 points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid("rho_grid", "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Indices of strict local minima and maxima of the finite entries, treating the
/// ends as one-sided. Plateaus count once, at their first index.
fn extrema(y: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let idx: Vec<usize> = (0..y.len()).filter(|&k| y[k].is_finite()).collect();
    let mut mins = Vec::new();
    let mut maxs = Vec::new();
    if idx.len() < 2 {
        mins.extend(idx.first());
        return (mins, maxs);
    }
    // Collapse runs of equal values to their first index.
    let mut runs: Vec<usize> = vec![idx[0]];
    for &k in &idx[1..] {
        if y[k] != y[*runs.last().unwrap()] {
            runs.push(k);
        }
    }
    for (j, &k) in runs.iter().enumerate() {
        let below_left = j == 0 || y[k] < y[runs[j - 1]];
        let below_right = j + 1 == runs.len() || y[k] < y[runs[j + 1]];
        let above_left = j == 0 || y[k] > y[runs[j - 1]];
        let above_right = j + 1 == runs.len() || y[k] > y[runs[j + 1]];
        if below_left && below_right {
            mins.push(k);
        } else if above_left && above_right && j > 0 && j + 1 < runs.len() {
            maxs.push(k);
        }
    }
    (mins, maxs)
}

/// Highest `phi(max) - max(phi(min_left), phi(min_right))` over adjacent minima.
fn barrier_between(minima: &[(f64, f64)], maxima: &[(f64, f64)]) -> Option<Barrier> {
    let mut best: Option<Barrier> = None;
    for pair in minima.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let top = maxima
            .iter()
            .filter(|m| m.0 > a.0 && m.0 < b.0)
            .copied()
            .max_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((rho, phi_top)) = top {
            let height = phi_top - a.1.max(b.1);
            if best.is_none_or(|bb| height > bb.height) {
                best = Some(Barrier { height, rho });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QsOptions {
    /// Linear size of the coarse-graining cells.
    pub cell: usize,
    pub bin_width: f64,
    /// Upper edge of the histogram; larger cell averages are only counted as overflow.
    pub rho_max: f64,
    /// Standard deviation of the smoothing kernel, in bins.
    pub smoothing_bins: f64,
    pub t_burn: f64,
    pub t_sample: f64,
    pub sample_every: f64,
    pub min_samples: u64,
    /// Initial density of the active start; the absorbing start uses the lattice default.
    pub rho_active: f64,
    /// Minima shallower than this (relative to the lower neighbouring maximum) are merged.
    pub min_depth: f64,
    /// Minima whose smoothed bin count is below this are merged regardless of depth.
    pub min_well_count: f64,
}

impl Default for QsOptions {
    fn default() -> Self {
        Self {
            cell: 8,
            bin_width: 0.01,
            rho_max: 4.0,
            smoothing_bins: 3.0,
            t_burn: 200.0,
            t_sample: 1000.0,
            sample_every: 1.0,
            min_samples: 10_000,
            rho_active: 1.0,
            min_depth: 0.5,
            min_well_count: 10.0,
        }
    }
}

/// Effective potential `-ln P` of coarse-grained cell averages at fixed `n`,
/// pooled over a run started near the absorbing state and one started active.
pub fn quasistationary_potential(
    params: &ModelParams,
    n_fixed: f64,
    lattice: &LatticeConfig,
    opts: &QsOptions,
) -> Result<PotentialCurve> {
    if params.b != 0.0 || params.lambda != 0.0 {
        return Err(invalid("b", "the total density must be conserved (b = lambda = 0)"));
    }
    if !(n_fixed >= 0.0) || !n_fixed.is_finite() {
        return Err(invalid("n_fixed", format!("must be finite and non-negative, got {n_fixed}")));
    }
    if opts.cell == 0 || lattice.l % opts.cell != 0 {
        return Err(invalid("cell", format!("{} must divide L = {}", opts.cell, lattice.l)));
    }
    if !(opts.bin_width > 0.0) || !(opts.rho_max > opts.bin_width) {
        return Err(invalid("bin_width", "need 0 < bin_width < rho_max"));
    }
    let every = steps_of(opts.sample_every, lattice.dt, "sample_every")?.max(1);
    let burn = steps_of(opts.t_burn, lattice.dt, "t_burn")?;
    let sample = steps_of(opts.t_sample, lattice.dt, "t_sample")?;
    let n_bins = (opts.rho_max / opts.bin_width).round() as usize;

    let starts = [lattice.init.rho, opts.rho_active];
    let hists: Vec<Result<Vec<u64>>> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &rho0)| {
            let mut cfg = lattice.clone();
            cfg.init = InitialCondition { rho: rho0, n: n_fixed };
            cfg.seed = lattice.seed.wrapping_add(k as u64);
            cfg.snapshot_every = None;
            let mut sim = Simulation::new(cfg, *params)?;
            // The extra bin holds the overflow.
            let mut hist = vec![0u64; n_bins + 1];
            let cells = CellMap::new(sim.geometry(), opts.cell);
            let mut avg = vec![0.0; cells.count];
            for s in 1..=burn + sample {
                sim.step()?;
                if s > burn && (s - burn) % every == 0 {
                    cells.averages(&sim.state().rho, &mut avg);
                    for &a in &avg {
                        hist[((a / opts.bin_width) as usize).min(n_bins)] += 1;
                    }
                }
            }
            Ok(hist)
        })
        .collect();
    let mut counts = vec![0u64; n_bins + 1];
    for h in hists {
        for (c, x) in counts.iter_mut().zip(h?) {
            *c += x;
        }
    }
    let overflow = counts.pop().unwrap_or(0);
    let mut curve = curve_from_histogram(counts, opts);
    curve.overflow = overflow;
    curve.samples += overflow;
    curve.insufficient_samples = curve.samples < opts.min_samples;
    Ok(curve)
}

fn steps_of(t: f64, dt: f64, name: &'static str) -> Result<u64> {
    let s = t / dt;
    if !(s >= 0.0) || (s - s.round()).abs() > 1e-6 {
        return Err(invalid(name, format!("{t} is not a non-negative multiple of dt = {dt}")));
    }
    Ok(s.round() as u64)
}

/// Builds the potential from bin counts: raw `-ln P` for output, minima and barrier
/// from the Gaussian-smoothed histogram.
pub fn curve_from_histogram(counts: Vec<u64>, opts: &QsOptions) -> PotentialCurve {
    let samples: u64 = counts.iter().sum();
    let rho_grid: Vec<f64> = (0..counts.len()).map(|k| (k as f64 + 0.5) * opts.bin_width).collect();
    let neg_log = |c: f64| if c > 0.0 { -(c / samples as f64).ln() } else { f64::NAN };
    let mut phi: Vec<f64> = counts.iter().map(|&c| neg_log(c as f64)).collect();
    let smoothed_counts = gaussian_smooth(&counts, opts.smoothing_bins);
    let smooth: Vec<f64> = smoothed_counts.iter().copied().map(neg_log).collect();

    let shift = phi.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    let shift_s = smooth.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    if shift.is_finite() {
        phi.iter_mut().for_each(|x| *x -= shift);
    }
    let smooth: Vec<f64> = smooth.iter().map(|x| x - shift_s).collect();

    let (min_idx, max_idx) =
        significant_extrema(&smooth, opts.min_depth, |k| smoothed_counts[k] >= opts.min_well_count);
    let at = |k: usize| (rho_grid[k], smooth[k]);
    let minima: Vec<(f64, f64)> = min_idx.into_iter().map(at).collect();
    let maxima: Vec<(f64, f64)> = max_idx.into_iter().map(at).collect();
    let barrier = barrier_between(&minima, &maxima);
    PotentialCurve {
        rho_grid,
        phi,
        counts,
        minima,
        barrier,
        samples,
        overflow: 0,
        insufficient_samples: samples < opts.min_samples,
    }
}

fn gaussian_smooth(counts: &[u64], sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return counts.iter().map(|&c| c as f64).collect();
    }
    let half = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-half..=half).map(|j| (-0.5 * (j as f64 / sigma).powi(2)).exp()).collect();
    let n = counts.len() as isize;
    (0..n)
        .map(|i| {
            let (mut s, mut norm) = (0.0, 0.0);
            for (o, wj) in (-half..=half).zip(&w) {
                let k = i + o;
                if (0..n).contains(&k) {
                    s += wj * counts[k as usize] as f64;
                    norm += wj;
                }
            }
            s / norm
        })
        .collect()
}

/// Local minima whose well is at least `depth` deep on both sides, found by
/// repeatedly merging the shallowest well into its neighbour. Minima failing
/// `supported` are merged first.
fn significant_extrema(y: &[f64], depth: f64, supported: impl Fn(usize) -> bool) -> (Vec<usize>, Vec<usize>) {
    let (mut mins, mut maxs) = extrema(y);
    // Between consecutive minima there is exactly one maximum after filtering.
    loop {
        let mut inner: Vec<usize> = Vec::new();
        for pair in mins.windows(2) {
            let top = maxs
                .iter()
                .copied()
                .filter(|&m| m > pair[0] && m < pair[1])
                .max_by(|&a, &b| y[a].total_cmp(&y[b]));
            inner.extend(top);
        }
        maxs = inner;
        if mins.len() < 2 {
            break;
        }
        // Shallowest well: the minimum with the smallest drop from its lower bounding maximum.
        let well = |j: usize| -> f64 {
            let left = if j > 0 { y[maxs[j - 1]] } else { f64::INFINITY };
            let right = if j < maxs.len() { y[maxs[j]] } else { f64::INFINITY };
            if supported(mins[j]) {
                left.min(right) - y[mins[j]]
            } else {
                f64::NEG_INFINITY
            }
        };
        let (j, d) = (0..mins.len()).map(|j| (j, well(j))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if d >= depth {
            break;
        }
        // Drop the well and the lower of its bounding maxima.
        let left = (j > 0).then(|| j - 1);
        let right = (j < maxs.len()).then_some(j);
        let drop_max = match (left, right) {
            (Some(l), Some(r)) => if y[maxs[l]] <= y[maxs[r]] { l } else { r },
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => break,
        };
        mins.remove(j);
        maxs.remove(drop_max);
    }
    (mins, maxs)
}

/// Maps sites to cubic coarse-graining cells of side `cell`.
struct CellMap {
    cell_of: Vec<u32>,
    count: usize,
    per_cell: f64,
}

impl CellMap {
    fn new(geom: &Geometry, cell: usize) -> Self {
        let per_axis = geom.l() / cell;
        let d = geom.d();
        let cell_of = (0..geom.n_sites())
            .map(|s| {
                let c = geom.coords(s);
                let mut idx = 0;
                for axis in (0..d).rev() {
                    idx = idx * per_axis + c[axis] / cell;
                }
                idx as u32
            })
            .collect();
        Self { cell_of, count: per_axis.pow(d as u32), per_cell: cell.pow(d as u32) as f64 }
    }

    fn averages(&self, rho: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (r, &c) in rho.iter().zip(&self.cell_of) {
            out[c as usize] += r;
        }
        out.iter_mut().for_each(|x| *x /= self.per_cell);
    }
}

/// One row of the dimensionality summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub d: usize,
    pub n: f64,
    pub n_minima: usize,
    pub barrier_height: Option<f64>,
}

impl PhaseRow {
    pub fn from_curve(d: usize, n: f64, curve: &PotentialCurve) -> Self {
        Self { d, n, n_minima: curve.minima.len(), barrier_height: curve.barrier.map(|b| b.height) }
    }
}

/// `rho,phi,count`; empty bins leave `phi` blank.
pub fn write_potential_csv(path: &Path, curve: &PotentialCurve) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "rho,phi,count")?;
    for (k, (&r, &p)) in curve.rho_grid.iter().zip(&curve.phi).enumerate() {
        let phi = if p.is_finite() { fmt_f64(p) } else { String::new() };
        let count = curve.counts.get(k).map(|c| c.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{}", fmt_f64(r), phi, count)?;
    }
    w.flush()?;
    Ok(())
}

pub fn potential_file_name(d: usize, n: f64) -> String {
    format!("potential_{d}_{n}.csv")
}

pub fn write_phase_diagram_csv(path: &Path, rows: &[PhaseRow]) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "d,n,n_minima,barrier_height")?;
    for r in rows {
        let b = r.barrier_height.map(fmt_f64).unwrap_or_default();
        writeln!(w, "{},{},{},{}", r.d, fmt_f64(r.n), r.n_minima, b)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `quasistationary_potential` for every `n`, in parallel, in input order.
pub fn scan_n(
    params: &ModelParams,
    ns: &[f64],
    lattice: &LatticeConfig,
    opts: &QsOptions,
) -> Vec<Result<PotentialCurve>> {
    ns.par_iter().map(|&n| quasistationary_potential(params, n, lattice, opts)).collect()
}
