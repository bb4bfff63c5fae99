use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A spectral peak and the period it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub omega: f64,
    pub period: f64,
    pub magnitude: f64,
    pub prominence: f64,
}

/// One-sided Fourier magnitude spectrum of a uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Angular frequencies, starting at zero.
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Median magnitude over the non-zero frequencies.
    pub median: f64,
    /// Lowest-frequency peak whose prominence is at least `prominence_factor * median`.
    pub peak: Option<Peak>,
}

impl Spectrum {
    pub fn omega_m(&self) -> Option<f64> {
        self.peak.map(|p| p.omega)
    }

    pub fn period(&self) -> Option<f64> {
        self.peak.map(|p| p.period)
    }

    pub fn bin_width(&self) -> f64 {
        self.omega.get(1).copied().unwrap_or(0.0)
    }
}

/// Conditions a local maximum of the magnitude spectrum must meet to be the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakRule {
    /// Minimum prominence in units of the median magnitude.
    pub median_factor: f64,
    /// Minimum prominence as a fraction of the largest prominence in the spectrum.
    pub relative: f64,
}

impl Default for PeakRule {
    fn default() -> Self {
        Self { median_factor: 3.0, relative: 0.5 }
    }
}

/// Magnitude spectrum of `x` (mean removed) sampled every `dt`, with the default
/// relative rule and the given median factor.
pub fn spectrum(x: &[f64], dt: f64, prominence_factor: f64) -> Result<Spectrum> {
    spectrum_with(x, dt, &PeakRule { median_factor: prominence_factor, ..PeakRule::default() })
}

/// Magnitude spectrum of `x` (mean removed) sampled every `dt`, with the
/// lowest-frequency interior local maximum satisfying `rule`.
pub fn spectrum_with(x: &[f64], dt: f64, rule: &PeakRule) -> Result<Spectrum> {
    if x.len() < 4 {
        return Err(invalid("x", format!("need at least 4 samples, got {}", x.len())));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("sampling interval must be positive, got {dt}")));
    }
    let m = x.len();
    let mean = x.iter().sum::<f64>() / m as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let half = m / 2;
    let magnitude: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let omega: Vec<f64> = (0..=half).map(|k| 2.0 * std::f64::consts::PI * k as f64 / (m as f64 * dt)).collect();

    let mut sorted = magnitude[1..].to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };

    let peak = first_prominent_peak(&magnitude[1..], median, rule).map(|(i, prom)| {
        let index = i + 1;
        Peak {
            index,
            omega: omega[index],
            period: 2.0 * std::f64::consts::PI / omega[index],
            magnitude: magnitude[index],
            prominence: prom,
        }
    });
    Ok(Spectrum { omega, magnitude, median, peak })
}

/// Index and prominence of the first interior local maximum passing `rule`.
fn first_prominent_peak(y: &[f64], median: f64, rule: &PeakRule) -> Option<(usize, f64)> {
    let candidates: Vec<(usize, f64)> = (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
        .map(|k| (k, prominence(y, k)))
        .collect();
    let largest = candidates.iter().map(|c| c.1).fold(0.0, f64::max);
    let max_mag = y.iter().copied().fold(0.0, f64::max);
    // The floor keeps round-off ripples of on-bin signals from counting.
    let threshold = (rule.median_factor * median).max(rule.relative * largest).max(1e-9 * max_mag);
    candidates.into_iter().find(|&(_, p)| p >= threshold && p > 0.0)
}

/// Topographic prominence: height above the higher of the two bases, where each
/// base is the lowest point before the signal rises above the peak (or the edge).
fn prominence(y: &[f64], k: usize) -> f64 {
    let h = y[k];
    let mut left_min = h;
    for &v in y[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Largest magnitude near `harmonic * omega_m`, divided by the median magnitude.
/// The search window is the larger of two bins and 5% of the target frequency.
pub fn harmonic_ratio(spec: &Spectrum, harmonic: usize) -> Option<f64> {
    let peak = spec.peak?;
    let target = peak.omega * harmonic as f64;
    let bw = spec.bin_width();
    let half_width = (2.0 * bw).max(0.05 * target);
    let best = spec
        .omega
        .iter()
        .zip(&spec.magnitude)
        .skip(1)
        .filter(|(w, _)| (**w - target).abs() <= half_width)
        .map(|(_, m)| *m)
        .fold(f64::NAN, f64::max);
    (best.is_finite() && spec.median > 0.0).then(|| best / spec.median)
}
