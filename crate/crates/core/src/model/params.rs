use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical constants of the coarse-grained field equations.
///
/// Rates are measured in units of the spontaneous decay rate, which is set to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Incoherent (classical) activation rate.
    pub kappa: f64,
    /// Coherent activation rate.
    pub omega: f64,
    /// Total dephasing rate, decay plus pure dephasing.
    pub gamma: f64,
    /// Fraction of decays that remove the emitter.
    pub b: f64,
    /// Loading rate of inactive emitters.
    pub lambda: f64,
    /// Seed driving that prevents permanent trapping in the absorbing state.
    pub tau: f64,
    /// Pump density; only the product `lambda * n_p` enters the dynamics.
    pub n_p: f64,
    /// Thermal diffusivity.
    pub d_t: f64,
    /// Facilitation radius.
    pub r_fac: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            omega: 0.5,
            gamma: 2.0,
            b: 0.01,
            lambda: 3.2e-3,
            tau: 1e-7,
            n_p: 1.0,
            d_t: 1.0,
            r_fac: 1.0,
        }
    }
}

impl ModelParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// Effective loading term of the total-density equation.
    pub fn loading(&self) -> f64 {
        self.lambda * self.n_p
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa", self.kappa),
            ("omega", self.omega),
            ("gamma", self.gamma),
            ("b", self.b),
            ("lambda", self.lambda),
            ("tau", self.tau),
            ("n_p", self.n_p),
            ("d_t", self.d_t),
            ("r_fac", self.r_fac),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, format!("{v} is not finite")));
            }
            if v < 0.0 {
                return Err(invalid(name, format!("{v} is negative")));
            }
        }
        if self.gamma < 1.0 {
            return Err(invalid("gamma", format!("{} < 1 (gamma includes the unit decay rate)", self.gamma)));
        }
        if self.b > 1.0 {
            return Err(invalid("b", format!("{} > 1", self.b)));
        }
        Ok(())
    }

    /// Looks up a field by name. Used by generic parameter scans.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "kappa" => self.kappa,
            "omega" => self.omega,
            "gamma" => self.gamma,
            "b" => self.b,
            "lambda" => self.lambda,
            "tau" => self.tau,
            "n_p" => self.n_p,
            "d_t" => self.d_t,
            "r_fac" => self.r_fac,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "kappa" => &mut self.kappa,
            "omega" => &mut self.omega,
            "gamma" => &mut self.gamma,
            "b" => &mut self.b,
            "lambda" => &mut self.lambda,
            "tau" => &mut self.tau,
            "n_p" => &mut self.n_p,
            "d_t" => &mut self.d_t,
            "r_fac" => &mut self.r_fac,
            _ => return Err(invalid("name", format!("unknown model parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}
