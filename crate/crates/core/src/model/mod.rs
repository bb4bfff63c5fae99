//! Model parameters, coupling coefficients and the spatially uniform,
//! noiseless (mean-field) analysis: fixed points, spinodals, limit cycles and
//! the critical loading rate.

mod couplings;
mod export;
mod fixed_point;
mod ode;
mod params;
mod scan;
mod spinodal;

pub use couplings::{couplings, Couplings};
pub use export::{write_lambda_c_map, write_params_sidecar, write_trajectory};
pub use fixed_point::{mf_fixed_point, mf_fixed_point_with, FixedPoint, FixedPointOptions, Stability};
pub use ode::{integrate_mf, MfOptions, MfOutcome, MfTrajectory};
pub use params::ModelParams;
pub use scan::{lambda_c, lambda_c_scan, LambdaC, LambdaCOptions, ScanCell};
pub use spinodal::{spinodals, spinodals_with, Spinodals};

pub(crate) use couplings::coupling_derivatives;

use crate::error::{invalid, Result};

/// Uniform, noiseless drift `(d rho/dt, d n/dt)`.
pub fn mf_drift(rho: f64, n: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(rho >= 0.0) {
        return Err(invalid("rho", format!("active density must be non-negative, got {rho}")));
    }
    let c = Couplings::at(n, params)?;
    Ok(drift_unchecked(rho, n, &c, params))
}

#[inline]
pub(crate) fn drift_unchecked(rho: f64, n: f64, c: &Couplings, p: &ModelParams) -> (f64, f64) {
    (p.tau * n + c.reaction(rho), -p.b * rho + p.loading())
}
