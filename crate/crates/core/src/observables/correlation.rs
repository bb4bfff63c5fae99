use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

/// Two-time correlation `G(k) = <x(t) x(t+k)>_t / <x(t)>_t^2` for lags `0..=max_lag`.
///
/// The normalization is by the squared time mean, not the variance, so a constant
/// series gives `G = 1` and oscillations show up as `1 + O(amplitude^2)`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let m = x.len();
    if m == 0 {
        return Err(Error::Degenerate("empty series".into()));
    }
    if max_lag >= m {
        return Err(invalid("max_lag", format!("{max_lag} must be below the series length {m}")));
    }
    let mean = x.iter().sum::<f64>() / m as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Degenerate(format!("time mean {mean} is not positive; normalization undefined")));
    }

    let size = (2 * m).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(size, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);

    let norm = mean * mean * size as f64;
    Ok((0..=max_lag).map(|k| buf[k].re / ((m - k) as f64 * norm)).collect())
}
