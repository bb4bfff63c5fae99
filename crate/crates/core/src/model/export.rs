use std::io::Write;
use std::path::Path;

use super::{LambdaC, MfTrajectory, ModelParams, ScanCell};
use crate::error::Result;
use crate::output::{create_buffered, fmt_f64};

/// Writes `t,rho,n` rows.
pub fn write_trajectory(path: &Path, traj: &MfTrajectory) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "t,rho,n")?;
    for i in 0..traj.t.len() {
        writeln!(w, "{},{},{}", fmt_f64(traj.t[i]), fmt_f64(traj.rho[i]), fmt_f64(traj.n[i]))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per scan cell: `<x>,<y>,lambda_c,lambda_c_low,status`.
pub fn write_lambda_c_map(path: &Path, x_name: &str, y_name: &str, cells: &[ScanCell]) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "{x_name},{y_name},lambda_c,lambda_c_low,status")?;
    for c in cells {
        let (lc, low, status) = match &c.result {
            Ok(LambdaC::Transition { lambda_c, lambda_c_low }) => {
                (fmt_f64(*lambda_c), lambda_c_low.map(fmt_f64).unwrap_or_default(), "transition".to_string())
            }
            Ok(LambdaC::NoTransition) => (String::new(), String::new(), "no-transition".to_string()),
            Err(e) => (String::new(), String::new(), format!("error: {}", e.replace(',', ";"))),
        };
        writeln!(w, "{},{},{lc},{low},{status}", fmt_f64(c.x), fmt_f64(c.y))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar recording the full parameter set next to a CSV output.
pub fn write_params_sidecar(path: &Path, params: &ModelParams, extra: serde_json::Value) -> Result<()> {
    let doc = serde_json::json!({ "params": params, "info": extra });
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
