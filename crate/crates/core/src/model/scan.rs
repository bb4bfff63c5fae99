use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mf_fixed_point_with, FixedPointOptions, ModelParams};
use crate::error::{invalid, Result};

/// Critical loading rate separating the stationary phase from the oscillating one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaC {
    /// Above `lambda_c` the fixed point is stable. If the unstable window also has a
    /// lower edge inside the scanned range it is reported as `lambda_c_low`.
    Transition { lambda_c: f64, lambda_c_low: Option<f64> },
    NoTransition,
}

impl LambdaC {
    pub fn value(&self) -> Option<f64> {
        match *self {
            LambdaC::Transition { lambda_c, .. } => Some(lambda_c),
            LambdaC::NoTransition => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaCOptions {
    /// Stationary active densities `lambda / b` spanned by the coarse scan.
    pub rho_min: f64,
    pub rho_max: f64,
    pub coarse_points: usize,
    /// Relative width at which bisection stops.
    pub rel_width: f64,
    pub fixed_point: FixedPointOptions,
}

impl Default for LambdaCOptions {
    fn default() -> Self {
        Self {
            rho_min: 1e-6,
            rho_max: 10.0,
            coarse_points: 120,
            rel_width: 1e-4,
            fixed_point: FixedPointOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Stable,
    Unstable,
    Unknown,
}

fn phase(params: &ModelParams, lambda: f64, opts: &LambdaCOptions) -> Phase {
    match mf_fixed_point_with(&params.with_lambda(lambda), &opts.fixed_point) {
        Ok(fp) if fp.classification.is_unstable() => Phase::Unstable,
        Ok(_) => Phase::Stable,
        Err(_) => Phase::Unknown,
    }
}

fn bisect(params: &ModelParams, mut stable: f64, mut unstable: f64, opts: &LambdaCOptions) -> f64 {
    while (stable - unstable).abs() > opts.rel_width * stable.min(unstable) {
        let mid = (stable * unstable).sqrt();
        match phase(params, mid, opts) {
            Phase::Unstable => unstable = mid,
            _ => stable = mid,
        }
    }
    0.5 * (stable + unstable)
}

/// Critical loading rate from linear stability of the fixed point.
pub fn lambda_c(params: &ModelParams, opts: &LambdaCOptions) -> Result<LambdaC> {
    params.validate()?;
    if !(params.b > 0.0) || !(params.n_p > 0.0) {
        return Err(invalid("b", "lambda_c needs b > 0 and n_p > 0"));
    }
    let scale = params.b / params.n_p;
    let ratio = (opts.rho_max / opts.rho_min).ln();
    let grid: Vec<f64> = (0..opts.coarse_points)
        .map(|i| scale * opts.rho_min * (ratio * i as f64 / (opts.coarse_points - 1) as f64).exp())
        .collect();
    let phases: Vec<Phase> = grid.iter().map(|&l| phase(params, l, opts)).collect();
    if phases.iter().all(|&ph| ph == Phase::Unknown) {
        // Surface the underlying fixed-point error.
        mf_fixed_point_with(&params.with_lambda(grid[grid.len() / 2]), &opts.fixed_point)?;
    }

    let Some(top) = phases.iter().rposition(|&ph| ph == Phase::Unstable) else {
        return Ok(LambdaC::NoTransition);
    };
    if top + 1 >= grid.len() || phases[top + 1] != Phase::Stable {
        return Ok(LambdaC::NoTransition);
    }
    let lambda_c = bisect(params, grid[top + 1], grid[top], opts);

    let bottom = phases.iter().position(|&ph| ph == Phase::Unstable).unwrap();
    let lambda_c_low = (bottom > 0 && phases[bottom - 1] == Phase::Stable)
        .then(|| bisect(params, grid[bottom - 1], grid[bottom], opts));
    Ok(LambdaC::Transition { lambda_c, lambda_c_low })
}

/// One cell of a two-parameter scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub x: f64,
    pub y: f64,
    pub result: std::result::Result<LambdaC, String>,
}

/// Maps `lambda_c` over a grid of two named parameters; failures stay local to their cell.
pub fn lambda_c_scan(
    base: &ModelParams,
    x_name: &str,
    xs: &[f64],
    y_name: &str,
    ys: &[f64],
    opts: &LambdaCOptions,
) -> Result<Vec<ScanCell>> {
    for name in [x_name, y_name] {
        if base.get(name).is_none() {
            return Err(invalid("axis", format!("unknown parameter `{name}`")));
        }
    }
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(x, y)| {
            let mut p = *base;
            let result = p
                .set(x_name, x)
                .and_then(|_| p.set(y_name, y))
                .and_then(|_| lambda_c(&p, opts))
                .map_err(|e| e.to_string());
            ScanCell { x, y, result }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mf_fixed_point;

    #[test]
    fn defaults_have_finite_lambda_c_above_ctc_point() {
        let lc = lambda_c(&ModelParams::default(), &LambdaCOptions::default()).unwrap();
        let l = lc.value().expect("transition");
        assert!(l > 3.2e-3 && l.is_finite(), "{l}");
        assert!(mf_fixed_point(&ModelParams::default().with_lambda(l * 1.01)).unwrap().classification.is_stable());
        assert!(mf_fixed_point(&ModelParams::default().with_lambda(l * 0.99)).unwrap().classification.is_unstable());
    }

    #[test]
    fn classical_without_coherent_drive_has_no_transition() {
        for kappa in [0.3, 0.6, 0.9] {
            let p = ModelParams { omega: 0.0, kappa, ..Default::default() };
            assert_eq!(lambda_c(&p, &LambdaCOptions::default()).unwrap(), LambdaC::NoTransition);
        }
    }

    #[test]
    fn eigenvalue_scan_confirms_classical_stability() {
        let p = ModelParams { omega: 0.0, kappa: 0.5, ..Default::default() };
        for i in 0..60 {
            let lambda = 1e-7 * 10f64.powf(i as f64 / 10.0);
            let fp = mf_fixed_point(&p.with_lambda(lambda)).unwrap();
            assert!(fp.eigenvalues.iter().all(|e| e.re < 0.0), "lambda={lambda}");
        }
    }

    #[test]
    fn scan_cells_are_independent() {
        let opts = LambdaCOptions { coarse_points: 40, ..Default::default() };
        let base = ModelParams::default();
        let coarse = lambda_c_scan(&base, "kappa", &[0.0, 0.2], "gamma", &[0.5, 2.0], &opts).unwrap();
        let fine = lambda_c_scan(&base, "kappa", &[0.0, 0.1, 0.2], "gamma", &[0.5, 1.5, 2.0], &opts).unwrap();
        for c in &coarse {
            let f = fine.iter().find(|f| f.x == c.x && f.y == c.y).unwrap();
            assert_eq!(c, f);
        }
        // gamma < 1 is invalid; the error stays in its cell.
        assert!(coarse[0].result.is_err());
        assert!(coarse[1].result.is_ok());
    }

    #[test]
    fn unknown_axis_rejected() {
        assert!(lambda_c_scan(&ModelParams::default(), "zeta", &[1.0], "omega", &[1.0], &Default::default()).is_err());
    }
}
