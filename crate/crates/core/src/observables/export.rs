use std::io::Write;
use std::path::Path;

use super::{JumpEvent, SeriesAnalysis, Spectrum};
use crate::error::Result;
use crate::output::{create_buffered, fmt_f64};

/// `lag,G` with lags in time units.
pub fn write_correlation_csv(path: &Path, g: &[f64], dt: f64) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "lag,G")?;
    for (k, v) in g.iter().enumerate() {
        writeln!(w, "{},{}", fmt_f64(k as f64 * dt), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, s: &Spectrum) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "omega,magnitude")?;
    for (o, m) in s.omega.iter().zip(&s.magnitude) {
        writeln!(w, "{},{}", fmt_f64(*o), fmt_f64(*m))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv(path: &Path, events: &[JumpEvent]) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "direction,t,n_at_event,rho_before,rho_after")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.direction.as_str(),
            fmt_f64(e.t_event),
            fmt_f64(e.n_at_event),
            fmt_f64(e.rho_before),
            fmt_f64(e.rho_after)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Summary of a series analysis merged with caller-supplied metadata.
pub fn write_analysis_json(path: &Path, analysis: &SeriesAnalysis, extra: serde_json::Value) -> Result<()> {
    let doc = serde_json::json!({ "analysis": analysis.summary(), "info": extra });
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
