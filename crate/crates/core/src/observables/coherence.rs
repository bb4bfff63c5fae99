use serde::{Deserialize, Serialize, Serializer};

use super::{Direction, JumpEvent};
use crate::error::{Error, Result};

/// Period statistics from the intervals between consecutive up jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub t_mean: f64,
    /// Population standard deviation of the intervals.
    pub t_std: f64,
    /// `t_mean / t_std`; infinite for perfectly regular events.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_inf")]
    pub tau_ctc: f64,
    /// Phase slip per cycle, `2 pi t_std / t_mean`.
    pub delta_theta: f64,
    /// Number of intervals.
    pub cycles: usize,
    pub low_statistics: bool,
    pub infinite: bool,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_inf<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

pub fn coherence_time(events: &[JumpEvent]) -> Result<CoherenceReport> {
    let ups: Vec<f64> = events.iter().filter(|e| e.direction == Direction::Up).map(|e| e.t_event).collect();
    if ups.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 up events, got {}", ups.len())));
    }
    let intervals: Vec<f64> = ups.windows(2).map(|w| w[1] - w[0]).collect();
    let k = intervals.len() as f64;
    let t_mean = intervals.iter().sum::<f64>() / k;
    let t_std = (intervals.iter().map(|x| (x - t_mean).powi(2)).sum::<f64>() / k).sqrt();
    // Round-off in interpolated event times leaves a residual spread.
    let infinite = t_std <= 1e-12 * t_mean.abs();
    Ok(CoherenceReport {
        t_mean,
        t_std,
        tau_ctc: if infinite { f64::INFINITY } else { t_mean / t_std },
        delta_theta: if infinite { 0.0 } else { 2.0 * std::f64::consts::PI * t_std / t_mean },
        cycles: intervals.len(),
        low_statistics: intervals.len() < 10,
        infinite,
    })
}
