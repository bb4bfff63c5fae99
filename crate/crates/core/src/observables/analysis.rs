use serde::{Deserialize, Serialize};

use super::{
    autocorrelation, coherence_time, detect_jumps, harmonic_ratio, spectrum_with, stationary_start, CoherenceReport,
    Direction, JumpEvent, JumpThresholds, PeakRule, Spectrum,
};
use crate::error::{invalid, Result};
use crate::lattice::SeriesPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub rho_up: f64,
    pub rho_down: f64,
    pub window: usize,
    pub median_factor: f64,
    pub relative_prominence: f64,
    /// Longest correlation lag as a fraction of the stationary segment.
    pub max_lag_fraction: f64,
    pub harmonics: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        let th = JumpThresholds::default();
        let rule = PeakRule::default();
        Self {
            rho_up: th.rho_up,
            rho_down: th.rho_down,
            window: th.window,
            median_factor: rule.median_factor,
            relative_prominence: rule.relative,
            max_lag_fraction: 0.5,
            harmonics: 3,
        }
    }
}

impl AnalysisOptions {
    pub fn thresholds(&self) -> JumpThresholds {
        JumpThresholds { rho_up: self.rho_up, rho_down: self.rho_down, window: self.window }
    }

    pub fn peak_rule(&self) -> PeakRule {
        PeakRule { median_factor: self.median_factor, relative: self.relative_prominence }
    }
}

/// Everything measured on one averaged time series.
#[derive(Debug, Clone)]
pub struct SeriesAnalysis {
    pub dt: f64,
    /// First sample of the stationary segment.
    pub start: usize,
    pub events: Vec<JumpEvent>,
    pub coherence: Option<CoherenceReport>,
    pub g_n: Vec<f64>,
    /// Absent when the active density averages to zero.
    pub g_rho: Option<Vec<f64>>,
    pub spectrum_n: Spectrum,
    /// `harmonic_ratios[h - 1]` for `h = 1..=harmonics`.
    pub harmonic_ratios: Vec<Option<f64>>,
    /// Total density at up events in the stationary segment.
    pub n_up: Vec<f64>,
}

impl SeriesAnalysis {
    pub fn period(&self) -> Option<f64> {
        self.spectrum_n.period()
    }

    pub fn n_up_iqr(&self) -> Option<f64> {
        iqr(&self.n_up)
    }

    pub fn stationary_events(&self) -> impl Iterator<Item = &JumpEvent> {
        let t0 = self.start as f64 * self.dt;
        self.events.iter().filter(move |e| e.t_event >= t0)
    }

    pub fn summary(&self) -> serde_json::Value {
        let peak = self.spectrum_n.peak;
        serde_json::json!({
            "dt": self.dt,
            "stationary_start_index": self.start,
            "events_total": self.events.len(),
            "up_events_stationary": self.n_up.len(),
            "coherence": self.coherence,
            "omega_m": peak.map(|p| p.omega),
            "period_spectral": peak.map(|p| p.period),
            "peak_prominence": peak.map(|p| p.prominence),
            "spectrum_median": self.spectrum_n.median,
            "harmonic_ratios": self.harmonic_ratios,
            "n_up_median": quantile(&self.n_up, 0.5),
            "n_up_iqr": self.n_up_iqr(),
        })
    }
}

pub fn analyze_series(series: &[SeriesPoint], opts: &AnalysisOptions) -> Result<SeriesAnalysis> {
    if series.len() < 8 {
        return Err(invalid("series", format!("need at least 8 samples, got {}", series.len())));
    }
    let dt = series[1].t - series[0].t;
    let uniform = series.windows(2).all(|w| ((w[1].t - w[0].t) - dt).abs() <= 1e-9 * dt.max(1.0));
    if !(dt > 0.0) || !uniform {
        return Err(invalid("series", "samples must be uniformly spaced in time"));
    }
    let events = detect_jumps(series, &opts.thresholds())?;
    let start = stationary_start(series, &events);
    let t0 = series[start.min(series.len() - 1)].t;
    let stationary: Vec<JumpEvent> = events.iter().copied().filter(|e| e.t_event >= t0).collect();
    let coherence = coherence_time(&stationary).ok();
    let n_up = stationary.iter().filter(|e| e.direction == Direction::Up).map(|e| e.n_at_event).collect();

    let seg = &series[start..];
    let n: Vec<f64> = seg.iter().map(|p| p.n_mean).collect();
    let rho: Vec<f64> = seg.iter().map(|p| p.rho_mean).collect();
    let max_lag = ((seg.len() as f64 * opts.max_lag_fraction) as usize).min(seg.len() - 1);
    let g_n = autocorrelation(&n, max_lag)?;
    let g_rho = autocorrelation(&rho, max_lag).ok();
    let spectrum_n = spectrum_with(&n, dt, &opts.peak_rule())?;
    let harmonic_ratios = (1..=opts.harmonics).map(|h| harmonic_ratio(&spectrum_n, h)).collect();
    Ok(SeriesAnalysis { dt, start, events, coherence, g_n, g_rho, spectrum_n, harmonic_ratios, n_up })
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn iqr(x: &[f64]) -> Option<f64> {
    Some(quantile(x, 0.75)? - quantile(x, 0.25)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quantiles() {
        let x = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&x, 0.5), Some(3.0));
        assert_eq!(iqr(&x), Some(2.0));
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), Some(1.25));
    }

    #[test]
    fn synthetic_relaxation_oscillator() {
        // Square pulses of rho every 250 time units with n ramping between jumps.
        let series: Vec<SeriesPoint> = (0..20000)
            .map(|i| {
                let t = i as f64 * 0.5;
                let phase = t % 250.0;
                let rho = if phase < 60.0 { 0.8 } else { 1e-6 };
                let n = 2.5 + 0.3 * (2.0 * PI * t / 250.0).cos();
                SeriesPoint { t, rho_mean: rho, n_mean: n }
            })
            .collect();
        let a = analyze_series(&series, &AnalysisOptions::default()).unwrap();
        assert!((a.period().unwrap() - 250.0).abs() < 250.0 * 0.02);
        let c = a.coherence.unwrap();
        assert!(c.infinite);
        assert!(c.cycles >= 20);
        assert!(a.n_up_iqr().unwrap() < 1e-9);
        assert!((a.g_n[0] - (1.0 + 0.045 / 6.25)).abs() < 1e-3);
    }

    #[test]
    fn irregular_spacing_rejected() {
        let mut series: Vec<SeriesPoint> =
            (0..20).map(|i| SeriesPoint { t: i as f64, rho_mean: 0.1, n_mean: 1.0 }).collect();
        series[10].t = 10.5;
        assert!(analyze_series(&series, &AnalysisOptions::default()).is_err());
    }
}
