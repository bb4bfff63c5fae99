use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::SeriesPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// A collective transition of the spatially averaged active density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub direction: Direction,
    pub t_event: f64,
    /// Average total density at the (interpolated) crossing time.
    pub n_at_event: f64,
    pub rho_before: f64,
    pub rho_after: f64,
}

/// Hysteresis thresholds on the averaged active density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpThresholds {
    pub rho_up: f64,
    pub rho_down: f64,
    /// Samples averaged on each side of a crossing for `rho_before` / `rho_after`.
    pub window: usize,
}

impl Default for JumpThresholds {
    fn default() -> Self {
        Self { rho_up: 0.2, rho_down: 0.05, window: 5 }
    }
}

/// Two-threshold detector: an up event fires when the average crosses `rho_up` from
/// below after having been below `rho_down`; down events are symmetric. Events
/// therefore alternate.
pub fn detect_jumps(series: &[SeriesPoint], th: &JumpThresholds) -> Result<Vec<JumpEvent>> {
    if !(th.rho_down < th.rho_up) {
        return Err(invalid("rho_down", format!("{} must be below rho_up = {}", th.rho_down, th.rho_up)));
    }
    let mut events = Vec::new();
    let Some(first) = series.first() else { return Ok(events) };
    // Which crossing is armed, and the sample index where the current phase began.
    let mut armed = if first.rho_mean < th.rho_down {
        Some(Direction::Up)
    } else if first.rho_mean > th.rho_up {
        Some(Direction::Down)
    } else {
        None
    };
    let mut phase_start = 0;
    let w = th.window.max(1);

    for i in 1..series.len() {
        let (a, b) = (series[i - 1], series[i]);
        let crossing = match armed {
            Some(Direction::Up) if a.rho_mean < th.rho_up && b.rho_mean >= th.rho_up => Some((Direction::Up, th.rho_up)),
            Some(Direction::Down) if a.rho_mean > th.rho_down && b.rho_mean <= th.rho_down => {
                Some((Direction::Down, th.rho_down))
            }
            _ => None,
        };
        if let Some((direction, level)) = crossing {
            let frac = (level - a.rho_mean) / (b.rho_mean - a.rho_mean);
            let t_event = a.t + frac * (b.t - a.t);
            let n_at_event = a.n_mean + frac * (b.n_mean - a.n_mean);
            let before = &series[i.saturating_sub(w).max(phase_start)..i];
            let after = &series[i..(i + w).min(series.len())];
            let mean = |s: &[SeriesPoint]| s.iter().map(|p| p.rho_mean).sum::<f64>() / s.len() as f64;
            events.push(JumpEvent {
                direction,
                t_event,
                n_at_event,
                rho_before: mean(before),
                rho_after: mean(after),
            });
            armed = Some(match direction {
                Direction::Up => Direction::Down,
                Direction::Down => Direction::Up,
            });
            phase_start = i;
            continue;
        }
        if armed.is_none() {
            if b.rho_mean < th.rho_down {
                armed = Some(Direction::Up);
                phase_start = i;
            } else if b.rho_mean > th.rho_up {
                armed = Some(Direction::Down);
                phase_start = i;
            }
        }
    }
    Ok(events)
}

/// First sample index of the stationary segment: the later of the 10th up event
/// and 20% of the series. With fewer than 10 up events only the 20% rule applies.
pub fn stationary_start(series: &[SeriesPoint], events: &[JumpEvent]) -> usize {
    let by_fraction = series.len() / 5;
    let tenth_up = events.iter().filter(|e| e.direction == Direction::Up).nth(9).map(|e| e.t_event);
    match tenth_up {
        Some(t) => series.iter().position(|p| p.t >= t).unwrap_or(series.len()).max(by_fraction),
        None => by_fraction,
    }
}
