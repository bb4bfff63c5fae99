use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{dornic_unchecked, gaussian};
use super::Geometry;
use crate::error::{invalid, Error, Result};
use crate::model::{Couplings, ModelParams};
use crate::rng::{stream, SLOT_N, SLOT_RHO};

/// Sites per work unit. Fixed so that reductions do not depend on the thread count.
const CHUNK: usize = 4096;

/// Uniform initial fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub rho: f64,
    pub n: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self { rho: 1e-6, n: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub d: usize,
    pub l: usize,
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Interval between recorded spatial averages.
    pub record_every: f64,
    /// Interval between full-field snapshots, if any.
    pub snapshot_every: Option<f64>,
    pub seed: u64,
    pub init: InitialCondition,
    /// When false the noise is switched off and each step is a synchronous Euler
    /// update of the full drift.
    pub noise: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            d: 3,
            l: 16,
            dx: 1.0,
            dt: 0.05,
            t_max: 1000.0,
            record_every: 1.0,
            snapshot_every: None,
            seed: 1,
            init: InitialCondition::default(),
            noise: true,
        }
    }
}

/// Converts an interval to a whole number of steps.
fn steps_for(name: &'static str, interval: f64, dt: f64) -> Result<u64> {
    let k = (interval / dt).round();
    if !(k >= 1.0) || ((k * dt - interval).abs() > 1e-9 * interval.max(dt)) {
        return Err(invalid(name, format!("{interval} is not a positive multiple of dt = {dt}")));
    }
    Ok(k as u64)
}

impl LatticeConfig {
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.d, self.l)
    }

    /// Largest diffusion constant in play; the density-dependent part is bounded
    /// using `max(init.n, 5)`.
    pub fn max_diffusion(&self, params: &ModelParams) -> f64 {
        let n_ref = self.init.n.max(5.0);
        params.d_t.max(Couplings::at_unchecked(n_ref, params).d_rho)
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        self.geometry()?;
        if !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(invalid("dx", format!("must be positive, got {}", self.dx)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(invalid("t_max", format!("must be non-negative, got {}", self.t_max)));
        }
        let bound = self.dx * self.dx / (2.0 * self.d as f64 * self.max_diffusion(params));
        if self.dt > bound {
            return Err(invalid("dt", format!("{} exceeds the explicit diffusion bound {bound}", self.dt)));
        }
        steps_for("record_every", self.record_every, self.dt)?;
        if let Some(s) = self.snapshot_every {
            steps_for("snapshot_every", s, self.dt)?;
        }
        if !(self.init.rho >= 0.0 && self.init.n >= 0.0) {
            return Err(invalid("init", "initial densities must be non-negative"));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }

    pub fn record_steps(&self) -> u64 {
        steps_for("record_every", self.record_every, self.dt).unwrap_or(1)
    }

    pub fn snapshot_steps(&self) -> Option<u64> {
        self.snapshot_every.and_then(|s| steps_for("snapshot_every", s, self.dt).ok())
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig { dt: self.dt, dx: self.dx, seed: self.seed, noise: self.noise }
    }
}

/// Lattice fields and simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub n: Vec<f64>,
    pub t: f64,
    pub step_index: u64,
}

impl FieldState {
    pub fn uniform(geom: &Geometry, init: InitialCondition) -> Self {
        Self { rho: vec![init.rho; geom.n_sites()], n: vec![init.n; geom.n_sites()], t: 0.0, step_index: 0 }
    }

    /// Spatial averages `(rho_mean, n_mean)`, summed in a fixed order.
    pub fn means(&self) -> (f64, f64) {
        (ordered_mean(&self.rho), ordered_mean(&self.n))
    }
}

fn ordered_mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let partial: Vec<f64> = x.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum::<f64>() / x.len() as f64
}

/// Everything a single update needs besides the fields and parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub dx: f64,
    pub seed: u64,
    pub noise: bool,
}

#[inline]
fn update_site(
    i: usize,
    nb: &[usize],
    rho: &[f64],
    n: &[f64],
    p: &ModelParams,
    cfg: &StepConfig,
    step: u64,
) -> (f64, f64) {
    let inv_dx2 = 1.0 / (cfg.dx * cfg.dx);
    let dt = cfg.dt;
    let (r, m) = (rho[i], n[i]);
    let c = Couplings::at_unchecked(m, p);
    let count = nb.len();
    let (mut sum_r, mut sum_n) = (0.0, 0.0);
    for &j in nb {
        sum_r += rho[j];
        sum_n += n[j];
    }
    let lap_r = (sum_r - count as f64 * r) * inv_dx2;
    let lap_n = (sum_n - count as f64 * m) * inv_dx2;
    let n_drift = p.d_t * lap_n - p.b * r + p.loading();

    if !cfg.noise {
        let r_new = r + dt * (c.d_rho * lap_r + p.tau * m + c.reaction(r));
        let n_new = m + dt * n_drift;
        return (r_new.max(0.0), n_new.max(0.0));
    }

    let r_det = (r + dt * (c.d_rho * lap_r - r * r * (c.u3 + c.u4 * r))).max(0.0);
    let sigma2 = c.mu_coeff_lin + c.mu_coeff_quad * r;
    let mut rng = stream(cfg.seed, step, i as u64, SLOT_RHO);
    let r_new = dornic_unchecked(r_det, -c.u2, p.tau * m, sigma2, dt, &mut rng);

    let mut n_new = m + dt * n_drift;
    let var = p.b * r * dt;
    if var > 0.0 {
        n_new += var.sqrt() * gaussian(&mut stream(cfg.seed, step, i as u64, SLOT_N));
    }
    (r_new, n_new.max(0.0))
}

/// Synchronous update of every site into `rho_out`, `n_out`; reads only `state`.
fn step_into(
    state: &FieldState,
    geom: &Geometry,
    params: &ModelParams,
    cfg: &StepConfig,
    rho_out: &mut [f64],
    n_out: &mut [f64],
) -> Result<()> {
    let step = state.step_index;
    let bad: Option<usize> = rho_out
        .par_chunks_mut(CHUNK)
        .zip(n_out.par_chunks_mut(CHUNK))
        .enumerate()
        .map(|(ci, (ro, no))| {
            let base = ci * CHUNK;
            let mut bad = None;
            let mut coords = geom.coords(base);
            for (j, (r, m)) in ro.iter_mut().zip(no.iter_mut()).enumerate() {
                let (nb, count) = geom.neighbors_at(base + j, &coords);
                geom.advance_coords(&mut coords);
                let (nr, nm) = update_site(base + j, &nb[..count], &state.rho, &state.n, params, cfg, step);
                if bad.is_none() && !(nr.is_finite() && nm.is_finite()) {
                    bad = Some(base + j);
                }
                *r = nr;
                *m = nm;
            }
            bad
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    if let Some(site) = bad {
        return Err(Error::Numerical {
            site,
            t: state.t,
            reason: format!("non-finite density (rho = {}, n = {})", state.rho[site], state.n[site]),
        });
    }
    Ok(())
}

/// One full time step, returning the new state.
pub fn step(state: &FieldState, geom: &Geometry, params: &ModelParams, cfg: &StepConfig) -> Result<FieldState> {
    if state.rho.len() != geom.n_sites() || state.n.len() != geom.n_sites() {
        return Err(Error::Geometry("field length does not match the lattice".into()));
    }
    let mut rho = vec![0.0; geom.n_sites()];
    let mut n = vec![0.0; geom.n_sites()];
    step_into(state, geom, params, cfg, &mut rho, &mut n)?;
    let step_index = state.step_index + 1;
    Ok(FieldState { rho, n, t: step_index as f64 * cfg.dt, step_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub rho_mean: f64,
    pub n_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: u64,
    pub rho: Vec<f64>,
}

/// Receives recorded samples while a simulation advances.
pub trait Observer {
    fn sample(&mut self, point: SeriesPoint) -> Result<()>;

    fn snapshot(&mut self, _state: &FieldState, _geom: &Geometry) -> Result<()> {
        Ok(())
    }
}

/// Keeps everything in memory.
#[derive(Debug, Default)]
pub struct Recorder {
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<Snapshot>,
}

impl Observer for Recorder {
    fn sample(&mut self, point: SeriesPoint) -> Result<()> {
        self.series.push(point);
        Ok(())
    }

    fn snapshot(&mut self, state: &FieldState, _geom: &Geometry) -> Result<()> {
        self.snapshots.push(Snapshot { t: state.t, step: state.step_index, rho: state.rho.clone() });
        Ok(())
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn sample(&mut self, point: SeriesPoint) -> Result<()> {
        self.0.sample(point)?;
        self.1.sample(point)
    }

    fn snapshot(&mut self, state: &FieldState, geom: &Geometry) -> Result<()> {
        self.0.snapshot(state, geom)?;
        self.1.snapshot(state, geom)
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn sample(&mut self, point: SeriesPoint) -> Result<()> {
        (**self).sample(point)
    }

    fn snapshot(&mut self, state: &FieldState, geom: &Geometry) -> Result<()> {
        (**self).snapshot(state, geom)
    }
}

/// A lattice run in progress, with double buffers.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: LatticeConfig,
    params: ModelParams,
    geom: Geometry,
    state: FieldState,
    rho_buf: Vec<f64>,
    n_buf: Vec<f64>,
}

impl Simulation {
    pub fn new(config: LatticeConfig, params: ModelParams) -> Result<Self> {
        config.validate(&params)?;
        let geom = config.geometry()?;
        let state = FieldState::uniform(&geom, config.init);
        Self::from_state(config, params, state)
    }

    /// Continues from an existing state; the step index selects the random streams.
    pub fn from_state(config: LatticeConfig, params: ModelParams, state: FieldState) -> Result<Self> {
        config.validate(&params)?;
        let geom = config.geometry()?;
        if state.rho.len() != geom.n_sites() || state.n.len() != geom.n_sites() {
            return Err(Error::Geometry(format!(
                "state has {} sites, lattice {}^{} has {}",
                state.rho.len(),
                config.l,
                config.d,
                geom.n_sites()
            )));
        }
        if state.rho.iter().chain(&state.n).any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("state", "densities must be finite and non-negative"));
        }
        let n = geom.n_sites();
        Ok(Self { config, params, geom, state, rho_buf: vec![0.0; n], n_buf: vec![0.0; n] })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn into_state(self) -> FieldState {
        self.state
    }

    pub fn step(&mut self) -> Result<()> {
        let cfg = self.config.step_config();
        step_into(&self.state, &self.geom, &self.params, &cfg, &mut self.rho_buf, &mut self.n_buf)?;
        std::mem::swap(&mut self.state.rho, &mut self.rho_buf);
        std::mem::swap(&mut self.state.n, &mut self.n_buf);
        self.state.step_index += 1;
        self.state.t = self.state.step_index as f64 * self.config.dt;
        Ok(())
    }

    fn emit(&self, observer: &mut impl Observer, initial: bool) -> Result<()> {
        let k = self.state.step_index;
        if initial || k % self.config.record_steps() == 0 {
            let (rho_mean, n_mean) = self.state.means();
            observer.sample(SeriesPoint { t: self.state.t, rho_mean, n_mean })?;
        }
        if let Some(s) = self.config.snapshot_steps() {
            if initial || k % s == 0 {
                observer.snapshot(&self.state, &self.geom)?;
            }
        }
        Ok(())
    }

    /// Emits the samples due at the current step (used once at the start of a fresh run).
    pub fn emit_initial(&self, observer: &mut impl Observer) -> Result<()> {
        self.emit(observer, true)
    }

    /// Advances until the step index reaches `end_step`, emitting samples on schedule.
    pub fn advance_to(&mut self, end_step: u64, observer: &mut impl Observer) -> Result<()> {
        while self.state.step_index < end_step {
            self.step()?;
            self.emit(observer, false)?;
        }
        Ok(())
    }
}

/// Metadata describing a finished run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: LatticeConfig,
    pub params: ModelParams,
    pub version: String,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<Snapshot>,
    pub meta: RunMeta,
}

/// Runs a fresh simulation to `t_max`, keeping the series and snapshots in memory.
pub fn run(config: &LatticeConfig, params: &ModelParams) -> Result<RunOutput> {
    let mut rec = Recorder::default();
    let meta = run_with_observer(config, params, &mut rec)?;
    Ok(RunOutput { series: rec.series, snapshots: rec.snapshots, meta })
}

/// Runs a fresh simulation to `t_max`, streaming samples to `observer`.
pub fn run_with_observer(config: &LatticeConfig, params: &ModelParams, observer: &mut impl Observer) -> Result<RunMeta> {
    let start = std::time::Instant::now();
    let mut sim = Simulation::new(config.clone(), *params)?;
    sim.emit_initial(observer)?;
    sim.advance_to(config.total_steps(), observer)?;
    Ok(RunMeta {
        config: config.clone(),
        params: *params,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}
