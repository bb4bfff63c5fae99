use serde::{Deserialize, Serialize};

use super::{Couplings, ModelParams};

/// Bounds of the bistable window at conserved total density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinodals {
    /// The active branch first appears.
    pub n_low: f64,
    /// The absorbing branch loses linear stability.
    pub n_high: f64,
}

/// Spinodals searched on `[0, 50]`.
pub fn spinodals(params: &ModelParams) -> Option<Spinodals> {
    spinodals_with(params, 50.0)
}

/// Returns `None` when the transition is continuous (no bistable window).
pub fn spinodals_with(params: &ModelParams, n_max: f64) -> Option<Spinodals> {
    const SCAN: usize = 20_000;
    let c = |n: f64| Couplings::at_unchecked(n, params);
    let h = n_max / SCAN as f64;

    let mut n_high = None;
    for i in 1..=SCAN {
        let n = h * i as f64;
        if c(n).u2 <= 0.0 {
            n_high = Some(bisect(|x| c(x).u2 > 0.0, n - h, n));
            break;
        }
    }
    let n_high = n_high?;

    let active_exists = |n: f64| {
        let k = c(n);
        k.u3 < 0.0 && k.u4 > 0.0 && k.discriminant() >= 0.0
    };
    let steps = (n_high / h).ceil() as usize;
    let mut prev = 0.0;
    for i in 1..=steps {
        let n = (h * i as f64).min(n_high);
        if active_exists(n) {
            let n_low = if active_exists(prev) { prev } else { bisect(|x| !active_exists(x), prev, n) };
            return (n_low < n_high).then_some(Spinodals { n_low, n_high });
        }
        prev = n;
    }
    None
}

/// Boundary of a predicate that holds at `lo` and fails at `hi`.
fn bisect(holds: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-15 * hi.max(1.0) {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if holds(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}
