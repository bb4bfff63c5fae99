use serde::{Deserialize, Serialize};

use super::{drift_unchecked, Couplings, ModelParams};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfOptions {
    pub atol: f64,
    pub rtol: f64,
    /// `rho` level of the Poincaré section; upward crossings mark cycles.
    pub section: f64,
    /// Fraction of `t_max` discarded before period extraction.
    pub transient_fraction: f64,
    /// Number of trailing cycles whose periods must agree.
    pub cycles_checked: usize,
    /// Relative spread allowed among those periods.
    pub period_rtol: f64,
    /// Drift magnitude below which the end state counts as a fixed point.
    pub fixed_point_tol: f64,
}

impl Default for MfOptions {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-9,
            section: 0.2,
            transient_fraction: 0.2,
            cycles_checked: 5,
            period_rtol: 0.01,
            fixed_point_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MfOutcome {
    LimitCycle { period: f64, cycles: usize },
    FixedPoint { rho: f64, n: f64 },
    NotConverged { periods: Vec<f64> },
}

/// Uniformly sampled trajectory of the uniform noiseless dynamics.
#[derive(Debug, Clone)]
pub struct MfTrajectory {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub n: Vec<f64>,
    /// Times of upward section crossings, located on every accepted step.
    pub crossings: Vec<f64>,
    pub outcome: MfOutcome,
    pub steps_accepted: usize,
}

impl MfTrajectory {
    pub fn period(&self) -> Option<f64> {
        match self.outcome {
            MfOutcome::LimitCycle { period, .. } => Some(period),
            _ => None,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 2];

fn rhs(y: State, p: &ModelParams) -> State {
    let c = Couplings::at_unchecked(y[1].max(0.0), p);
    let (a, b) = drift_unchecked(y[0], y[1], &c, p);
    [a, b]
}

/// One Dormand-Prince step; returns the fifth-order solution, the error estimate
/// and the derivative at the new point (first-same-as-last).
fn dp_step(y: State, k1: State, h: f64, p: &ModelParams) -> (State, State, State) {
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut ys = y;
        for j in 0..s {
            for d in 0..2 {
                ys[d] += h * A[s][j] * k[j][d];
            }
        }
        debug_assert!(C[s] >= 0.0);
        k[s] = rhs(ys, p);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for d in 0..2 {
            y5[d] += h * B5[s] * k[s][d];
            err[d] += h * (B5[s] - B4[s]) * k[s][d];
        }
    }
    (y5, err, k[6])
}

/// Integrates the uniform noiseless equations from `init = (rho0, n0)` to `t_max`,
/// sampling the state every `dt` (which also caps the step size).
pub fn integrate_mf(
    params: &ModelParams,
    init: (f64, f64),
    t_max: f64,
    dt: f64,
    opts: &MfOptions,
) -> Result<MfTrajectory> {
    params.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("sampling interval must be positive, got {dt}")));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(invalid("t_max", format!("must be finite and non-negative, got {t_max}")));
    }
    if !(init.0 >= 0.0 && init.1 >= 0.0) {
        return Err(invalid("init", "initial densities must be non-negative"));
    }

    let samples = (t_max / dt + 1e-9).floor() as usize;
    let mut traj = MfTrajectory {
        t: Vec::with_capacity(samples + 1),
        rho: Vec::with_capacity(samples + 1),
        n: Vec::with_capacity(samples + 1),
        crossings: Vec::new(),
        outcome: MfOutcome::NotConverged { periods: Vec::new() },
        steps_accepted: 0,
    };
    let mut y: State = [init.0, init.1];
    let mut t = 0.0;
    traj.t.push(0.0);
    traj.rho.push(y[0]);
    traj.n.push(y[1]);

    let mut k1 = rhs(y, params);
    let mut h = (dt * 0.1).min(1e-2);
    for i in 1..=samples {
        let target = dt * i as f64;
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            let (y_new, err, k_new) = dp_step(y, k1, step, params);
            let mut norm: f64 = 0.0;
            for d in 0..2 {
                let scale = opts.atol + opts.rtol * y[d].abs().max(y_new[d].abs());
                norm = norm.max((err[d] / scale).abs());
            }
            if norm <= 1.0 || step < 1e-14 {
                if y[0] < opts.section && y_new[0] >= opts.section {
                    let frac = (opts.section - y[0]) / (y_new[0] - y[0]);
                    traj.crossings.push(t + frac * step);
                }
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k_new;
                traj.steps_accepted += 1;
            }
            if !y[0].is_finite() || !y[1].is_finite() {
                return Err(crate::Error::Numerical { site: 0, t, reason: "non-finite state".into() });
            }
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            // Do not let a clipped final step shrink the working step size.
            if !(last && norm <= 1.0) {
                h = (step * factor).min(dt);
            }
        }
        traj.t.push(target);
        traj.rho.push(y[0]);
        traj.n.push(y[1]);
    }

    traj.outcome = classify_outcome(&traj, params, t_max, opts);
    Ok(traj)
}

fn classify_outcome(traj: &MfTrajectory, p: &ModelParams, t_max: f64, opts: &MfOptions) -> MfOutcome {
    let t0 = opts.transient_fraction * t_max;
    let late: Vec<f64> = traj.crossings.iter().copied().filter(|&c| c >= t0).collect();
    let periods: Vec<f64> = late.windows(2).map(|w| w[1] - w[0]).collect();
    if periods.len() >= 2 {
        let tail = &periods[periods.len().saturating_sub(opts.cycles_checked)..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let (lo, hi) = tail.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        if (hi - lo) / mean < opts.period_rtol {
            return MfOutcome::LimitCycle { period: mean, cycles: periods.len() };
        }
        return MfOutcome::NotConverged { periods };
    }
    let (rho, n) = (*traj.rho.last().unwrap(), *traj.n.last().unwrap());
    let [dr, dn] = rhs([rho, n], p);
    if late.is_empty() && dr.abs() + dn.abs() < opts.fixed_point_tol {
        MfOutcome::FixedPoint { rho, n }
    } else {
        MfOutcome::NotConverged { periods }
    }
}
