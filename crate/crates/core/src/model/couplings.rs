use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{invalid, Result};

/// Density-dependent coefficients of the active-density Langevin equation.
///
/// The drift is `tau*n - u2*rho - u3*rho^2 - u4*rho^3` and the noise variance is
/// `mu(rho) + tau*n` with `mu(rho) = mu_coeff_lin*rho + mu_coeff_quad*rho^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    pub mu_coeff_lin: f64,
    pub mu_coeff_quad: f64,
    pub d_rho: f64,
}

impl Couplings {
    /// Evaluates the coefficients at total density `n`.
    pub fn at(n: f64, params: &ModelParams) -> Result<Self> {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(invalid("n", format!("total density must be finite and non-negative, got {n}")));
        }
        Ok(Self::at_unchecked(n, params))
    }

    /// Same as [`Couplings::at`] without the domain check; used in the lattice hot loop.
    #[inline]
    pub fn at_unchecked(n: f64, p: &ModelParams) -> Self {
        let s = n * p.kappa + p.gamma;
        let om2 = p.omega * p.omega;
        let om4 = om2 * om2;
        let s2 = s * s;
        let s7 = s2 * s2 * s2 * s;
        Self {
            u2: 1.0 - n * p.kappa - 256.0 * n * n * om4 / s7,
            u3: 2.0 * (p.kappa - 2.0 * n * om2 / s),
            u4: 8.0 * om2 / s,
            mu_coeff_lin: 1.0 + n * p.kappa,
            mu_coeff_quad: 4.0 * n * om2 / s2,
            d_rho: p.d_t + n * p.kappa * p.r_fac * p.r_fac / 2.0,
        }
    }

    /// Noise amplitude `mu(rho)` of the coarse-grained action.
    #[inline]
    pub fn mu(&self, rho: f64) -> f64 {
        self.mu_coeff_lin * rho + self.mu_coeff_quad * rho * rho
    }

    /// Reaction part of the active-density drift, without the seed term.
    #[inline]
    pub fn reaction(&self, rho: f64) -> f64 {
        -rho * (self.u2 + rho * (self.u3 + rho * self.u4))
    }

    /// Discriminant of `u2 + u3*rho + u4*rho^2`; positive when active roots exist.
    pub fn discriminant(&self) -> f64 {
        self.u3 * self.u3 - 4.0 * self.u2 * self.u4
    }
}

/// Derivatives of `(u2, u3, u4)` with respect to the total density.
pub(crate) fn coupling_derivatives(n: f64, p: &ModelParams) -> (f64, f64, f64) {
    let s = n * p.kappa + p.gamma;
    let om2 = p.omega * p.omega;
    let om4 = om2 * om2;
    let s7 = s.powi(7);
    let s8 = s7 * s;
    let du2 = -p.kappa - 256.0 * om4 * (2.0 * n / s7 - 7.0 * p.kappa * n * n / s8);
    let du3 = -4.0 * om2 * p.gamma / (s * s);
    let du4 = -8.0 * om2 * p.kappa / (s * s);
    (du2, du3, du4)
}

/// Free function form of [`Couplings::at`].
pub fn couplings(n: f64, params: &ModelParams) -> Result<Couplings> {
    Couplings::at(n, params)
}
