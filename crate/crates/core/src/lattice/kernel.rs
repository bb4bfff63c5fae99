//! Exact transition kernel of `d rho = (beta + a rho) dt + sqrt(sigma2 rho) dW`.
//!
//! Over one step the process is a Poisson mixture of Gamma variables:
//! `k ~ Poisson(lambda_k rho0 e^{a dt})`, `rho1 ~ Gamma(2 beta / sigma2 + k) / lambda_k`
//! with `lambda_k = 2a / (sigma2 (e^{a dt} - 1))`. The absorbing state `rho = 0` is
//! preserved exactly when `beta = 0`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{invalid, Result};

/// Samples the state after `dt` from `rho0`.
pub fn dornic_sample<R: Rng + ?Sized>(
    rho0: f64,
    a: f64,
    beta: f64,
    sigma2: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    for (name, v) in [("rho0", rho0), ("a", a), ("beta", beta), ("sigma2", sigma2), ("dt", dt)] {
        if !v.is_finite() {
            return Err(invalid(name, format!("{v} is not finite")));
        }
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2", format!("noise coefficient must be positive, got {sigma2}")));
    }
    if rho0 < 0.0 || beta < 0.0 || !(dt > 0.0) {
        return Err(invalid("rho0", "requires rho0 >= 0, beta >= 0 and dt > 0"));
    }
    Ok(dornic_unchecked(rho0, a, beta, sigma2, dt, rng))
}

/// Inverse scale of the Gamma stage.
#[inline]
pub fn kernel_rate(a: f64, sigma2: f64, dt: f64) -> f64 {
    let x = a * dt;
    if x.abs() < 1e-12 {
        2.0 / (sigma2 * dt)
    } else {
        2.0 * a / (sigma2 * x.exp_m1())
    }
}

#[inline]
pub(crate) fn dornic_unchecked<R: Rng + ?Sized>(rho0: f64, a: f64, beta: f64, sigma2: f64, dt: f64, rng: &mut R) -> f64 {
    let rate = kernel_rate(a, sigma2, dt);
    let mean_k = rate * rho0 * (a * dt).exp();
    let k = if mean_k > 0.0 {
        // `Poisson::new` only fails for non-finite or non-positive means.
        Poisson::new(mean_k).map(|d| d.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    };
    let shape = 2.0 * beta / sigma2 + k;
    if shape <= 0.0 {
        return 0.0;
    }
    if shape < 1.0 {
        // Gamma(s) = Gamma(1 + s) * U^(1/s). For the tiny shapes produced by the seed
        // term the power underflows for almost every U, so draw U first.
        let u: f64 = rng.sample(rand_distr::Open01);
        let log_pow = u.ln() / shape;
        if log_pow < -746.0 {
            return 0.0;
        }
        return match Gamma::new(1.0 + shape, 1.0 / rate) {
            Ok(g) => g.sample(rng) * log_pow.exp(),
            Err(_) => 0.0,
        };
    }
    match Gamma::new(shape, 1.0 / rate) {
        Ok(g) => g.sample(rng),
        Err(_) => 0.0,
    }
}

/// Standard normal deviate.
#[inline]
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Mean and variance of the exact linear process after `dt`.
pub fn linear_sde_moments(rho0: f64, a: f64, beta: f64, sigma2: f64, dt: f64) -> (f64, f64) {
    let x = a * dt;
    if x.abs() < 1e-12 {
        (rho0 + beta * dt, sigma2 * rho0 * dt + sigma2 * beta * dt * dt / 2.0)
    } else {
        let e = x.exp();
        let em1 = x.exp_m1();
        (rho0 * e + beta * em1 / a, sigma2 * rho0 * e * em1 / a + sigma2 * beta * em1 * em1 / (2.0 * a * a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::SeedableRng;

    #[test]
    fn absorbing_state_is_exact() {
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_eq!(dornic_sample(0.0, -0.7, 0.0, 1.3, 0.05, &mut rng).unwrap(), 0.0);
            assert_eq!(dornic_sample(0.0, 0.4, 0.0, 1.3, 0.05, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(1);
        assert!(dornic_sample(1.0, -1.0, 0.0, 0.0, 0.1, &mut rng).is_err());
        assert!(dornic_sample(1.0, -1.0, 0.0, -1.0, 0.1, &mut rng).is_err());
        assert!(dornic_sample(f64::NAN, -1.0, 0.0, 1.0, 0.1, &mut rng).is_err());
        assert!(dornic_sample(1.0, f64::INFINITY, 0.0, 1.0, 0.1, &mut rng).is_err());
        assert!(dornic_sample(-1.0, -1.0, 0.0, 1.0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn rate_is_continuous_at_zero_drift() {
        let r0 = kernel_rate(0.0, 1.5, 0.05);
        let r1 = kernel_rate(1e-9, 1.5, 0.05);
        assert!((r0 - r1).abs() / r0 < 1e-9);
    }

    #[test]
    fn reference_moments() {
        let (m, v) = linear_sde_moments(1.0, -1.0, 0.0, 1.0, 0.1);
        assert!((m - (-0.1f64).exp()).abs() < 1e-15);
        assert!((m - 0.904837).abs() < 1e-6);
        // sigma2 rho0 e^{a dt} (e^{a dt} - 1) / a
        assert!((v - 0.0861066).abs() < 1e-6, "{v}");
    }

    /// Mean and standard error of the sample mean and variance.
    fn sample_stats(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (mean, (m2 / n).sqrt(), m2, ((m4 - m2 * m2) / n).sqrt())
    }

    #[test]
    fn seeding_from_empty_state() {
        let (a, beta, sigma2, dt) = (0.0, 2.4e-7, 1.0, 0.05);
        let xs: Vec<f64> = (0..1_000_000u64)
            .map(|i| dornic_unchecked(0.0, a, beta, sigma2, dt, &mut stream(9, i, 0, 0)))
            .collect();
        let (mean, se, _, _) = sample_stats(&xs);
        assert!((mean - 1.2e-8).abs() < 4.0 * se.max(1e-12), "mean {mean} se {se}");
        assert!(xs.iter().any(|&x| x > 1e-3), "expected discrete seeding events");
    }

    #[test]
    fn moments_for_random_parameters() {
        let mut pick = rand_xoshiro::SplitMix64::seed_from_u64(77);
        for case in 0..20u64 {
            let rho0 = pick.random_range(0.0..2.0);
            let a = pick.random_range(-2.0..1.0);
            let beta = if case % 3 == 0 { 0.0 } else { pick.random_range(0.0..0.5) };
            let sigma2 = pick.random_range(0.2..2.0);
            let dt = pick.random_range(0.01..0.2);
            let xs: Vec<f64> = (0..1_000_000u64)
                .map(|i| dornic_unchecked(rho0, a, beta, sigma2, dt, &mut stream(case, i, 1, 0)))
                .collect();
            let (m_ref, v_ref) = linear_sde_moments(rho0, a, beta, sigma2, dt);
            let (mean, se_m, var, se_v) = sample_stats(&xs);
            assert!((mean - m_ref).abs() < 4.0 * se_m + 1e-12, "case {case}: mean {mean} vs {m_ref}");
            assert!((var - v_ref).abs() < 4.0 * se_v + 1e-12, "case {case}: var {var} vs {v_ref}");
            assert!(xs.iter().all(|&x| x >= 0.0));
        }
    }
}
