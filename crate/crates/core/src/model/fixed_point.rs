use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{coupling_derivatives, Couplings, ModelParams};
use crate::error::{invalid, Error, Result};

/// Linear-stability class of a planar fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    StableNode,
    StableSpiral,
    UnstableNode,
    UnstableSpiral,
    Saddle,
    Marginal,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableSpiral)
    }

    pub fn is_unstable(self) -> bool {
        matches!(self, Stability::UnstableNode | Stability::UnstableSpiral | Stability::Saddle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::StableNode => "stable-node",
            Stability::StableSpiral => "stable-spiral",
            Stability::UnstableNode => "unstable-node",
            Stability::UnstableSpiral => "unstable-spiral",
            Stability::Saddle => "saddle",
            Stability::Marginal => "marginal",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointOptions {
    /// Upper end of the bracket searched for the stationary total density.
    pub n_max: f64,
    /// Number of scan intervals used to locate sign changes.
    pub scan_points: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { n_max: 50.0, scan_points: 20_000 }
    }
}

/// Stationary state of the uniform dynamics with its linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub rho_star: f64,
    pub n_star: f64,
    /// Row-major Jacobian of `(d rho/dt, d n/dt)` with respect to `(rho, n)`.
    pub jacobian: [[f64; 2]; 2],
    #[serde(with = "complex_pair")]
    pub eigenvalues: [Complex64; 2],
    pub classification: Stability,
    /// Every root found in the bracket, ascending. More than one triggers a warning upstream.
    pub roots: Vec<f64>,
}

impl FixedPoint {
    pub fn trace(&self) -> f64 {
        self.jacobian[0][0] + self.jacobian[1][1]
    }

    pub fn determinant(&self) -> f64 {
        self.jacobian[0][0] * self.jacobian[1][1] - self.jacobian[0][1] * self.jacobian[1][0]
    }

    pub fn has_multiple_roots(&self) -> bool {
        self.roots.len() > 1
    }
}

pub fn mf_fixed_point(params: &ModelParams) -> Result<FixedPoint> {
    mf_fixed_point_with(params, &FixedPointOptions::default())
}

pub fn mf_fixed_point_with(params: &ModelParams, opts: &FixedPointOptions) -> Result<FixedPoint> {
    params.validate()?;
    if !(params.b > 0.0) {
        return Err(invalid("b", "a fixed point requires a positive loss fraction"));
    }
    let rho = params.loading() / params.b;
    let residual = |n: f64| {
        let c = Couplings::at_unchecked(n, params);
        params.tau * n + c.reaction(rho)
    };

    let roots = if rho == 0.0 {
        // Only the seed term survives; it vanishes at n = 0.
        vec![0.0]
    } else {
        find_roots(residual, 0.0, opts.n_max, opts.scan_points)
    };
    let n_star = *roots.first().ok_or(Error::NoRootInBracket { n_max: opts.n_max })?;

    let jacobian = jacobian(rho, n_star, params);
    let tr = jacobian[0][0] + jacobian[1][1];
    let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    let eigenvalues = [(tr + disc) / 2.0, (tr - disc) / 2.0];

    Ok(FixedPoint {
        rho_star: rho,
        n_star,
        jacobian,
        eigenvalues,
        classification: classify(tr, det),
        roots,
    })
}

pub(crate) fn jacobian(rho: f64, n: f64, p: &ModelParams) -> [[f64; 2]; 2] {
    let c = Couplings::at_unchecked(n, p);
    let (du2, du3, du4) = coupling_derivatives(n, p);
    let d_rho = -c.u2 - 2.0 * c.u3 * rho - 3.0 * c.u4 * rho * rho;
    let d_n = p.tau - du2 * rho - du3 * rho * rho - du4 * rho * rho * rho;
    [[d_rho, d_n], [-p.b, 0.0]]
}

fn classify(tr: f64, det: f64) -> Stability {
    const EPS: f64 = 1e-12;
    if det < -EPS {
        return Stability::Saddle;
    }
    if tr.abs() <= EPS || det.abs() <= EPS {
        return Stability::Marginal;
    }
    let spiral = tr * tr - 4.0 * det < 0.0;
    match (tr < 0.0, spiral) {
        (true, false) => Stability::StableNode,
        (true, true) => Stability::StableSpiral,
        (false, false) => Stability::UnstableNode,
        (false, true) => Stability::UnstableSpiral,
    }
}

/// All sign changes of `f` on `[lo, hi]`, refined by bisection and a Newton polish.
pub(crate) fn find_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scan_points: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (hi - lo) / scan_points as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..=scan_points {
        let x1 = lo + h * i as f64;
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            roots.push(refine_root(&f, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn refine_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) <= 4.0 * f64::EPSILON * m.abs().max(1.0) {
            return m;
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    // A few secant-free Newton steps with a numerical slope; stay inside the bracket.
    for _ in 0..3 {
        let h = 1e-7 * x.abs().max(1e-3);
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        if slope == 0.0 {
            break;
        }
        let next = x - f(x) / slope;
        if next < a || next > b || f(next).abs() >= f(x).abs() {
            break;
        }
        x = next;
    }
    x
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64; 2], s: S) -> Result<S::Ok, S::Error> {
        [[v[0].re, v[0].im], [v[1].re, v[1].im]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 2], D::Error> {
        let raw = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok([Complex64::new(raw[0][0], raw[0][1]), Complex64::new(raw[1][0], raw[1][1])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mf_drift;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ctc_regime_fixed_point_is_unstable_node() {
        let p = ModelParams::default().with_lambda(3.2e-3);
        let fp = mf_fixed_point(&p).unwrap();
        assert_eq!(fp.rho_star, 0.32);
        // Oracle: with tau -> 0 the stationarity condition at rho = 0.32 reduces to
        // 0.04 n^2 + 0.0512 n - 0.352768 = 0.
        let n_oracle = (-0.0512 + (0.0512f64.powi(2) + 4.0 * 0.04 * 0.352768).sqrt()) / 0.08;
        assert!((fp.n_star - n_oracle).abs() < 1e-5, "{} vs {}", fp.n_star, n_oracle);
        assert!((fp.n_star - 2.397894).abs() < 1e-4);
        assert!((fp.trace() - 0.17886).abs() < 1e-4, "trace {}", fp.trace());
        assert!((fp.determinant() - 2.4303e-3).abs() < 1e-6, "det {}", fp.determinant());
        assert_eq!(fp.classification, Stability::UnstableNode);
        let (dr, dn) = mf_drift(fp.rho_star, fp.n_star, &p).unwrap();
        assert!(dr.abs() < 1e-10 && dn.abs() < 1e-10);
    }

    #[test]
    fn zero_loading_gives_empty_fixed_point() {
        let fp = mf_fixed_point(&ModelParams::default().with_lambda(0.0)).unwrap();
        assert_eq!(fp.rho_star, 0.0);
        assert_eq!(fp.n_star, 0.0);
    }

    #[test]
    fn upper_branch_is_stable() {
        let fp = mf_fixed_point(&ModelParams::default().with_lambda(1e-2)).unwrap();
        assert!((fp.rho_star - 1.0).abs() < 1e-15);
        // n^2 + 4n - 16 = 0 with tau neglected.
        assert!((fp.n_star - (20f64.sqrt() - 2.0)).abs() < 1e-5);
        assert!(fp.trace() < 0.0);
        assert!(fp.classification.is_stable());
    }

    #[test]
    fn missing_root_is_an_error() {
        // Classical limit without incoherent activation: n* = rho/tau is far outside the bracket.
        let p = ModelParams { omega: 0.0, kappa: 0.0, ..Default::default() };
        assert!(matches!(mf_fixed_point(&p), Err(Error::NoRootInBracket { .. })));
        let p = ModelParams { b: 0.0, ..Default::default() };
        assert!(mf_fixed_point(&p).is_err());
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify(-1.0, 0.1), Stability::StableNode);
        assert_eq!(classify(-0.1, 1.0), Stability::StableSpiral);
        assert_eq!(classify(1.0, 0.1), Stability::UnstableNode);
        assert_eq!(classify(0.1, 1.0), Stability::UnstableSpiral);
        assert_eq!(classify(0.3, -1.0), Stability::Saddle);
        assert_eq!(classify(0.0, 1.0), Stability::Marginal);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..100 {
            let p = ModelParams {
                kappa: rng.random_range(0.0..1.5),
                omega: rng.random_range(0.05..1.5),
                gamma: rng.random_range(1.0..4.0),
                b: rng.random_range(0.001..0.5),
                lambda: rng.random_range(0.0..0.05),
                tau: rng.random_range(0.0..1e-3),
                ..Default::default()
            };
            let rho = rng.random_range(0.05..2.0);
            let n = rng.random_range(0.1..5.0);
            let jac = jacobian(rho, n, &p);
            let f = |r: f64, m: f64| mf_drift(r, m, &p).unwrap();
            let fd = [
                [(f(rho + h, n).0 - f(rho - h, n).0) / (2.0 * h), (f(rho, n + h).0 - f(rho, n - h).0) / (2.0 * h)],
                [(f(rho + h, n).1 - f(rho - h, n).1) / (2.0 * h), (f(rho, n + h).1 - f(rho, n - h).1) / (2.0 * h)],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    let (a, b) = (jac[i][j], fd[i][j]);
                    assert!((a - b).abs() <= 1e-4 * b.abs().max(1e-3), "entry ({i},{j}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn fixed_point_is_stationary_for_random_params() {
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..200 {
            let p = ModelParams {
                omega: rng.random_range(0.2..1.0),
                gamma: rng.random_range(1.0..3.0),
                lambda: rng.random_range(1e-4..2e-2),
                ..Default::default()
            };
            if let Ok(fp) = mf_fixed_point(&p) {
                let (dr, dn) = mf_drift(fp.rho_star, fp.n_star, &p).unwrap();
                assert!(dr.abs() < 1e-10 && dn.abs() < 1e-10, "{p:?}: {dr} {dn}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn json_roundtrip() {
        let fp = mf_fixed_point(&ModelParams::default()).unwrap();
        let s = serde_json::to_string(&fp).unwrap();
        let back: FixedPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fp);
    }
}
