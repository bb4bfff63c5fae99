pub mod analyze;
pub mod avalanche;
pub mod mf;
pub mod potential;
pub mod sim;
pub mod sweep;

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Creates `out` and writes the effective configuration into it.
pub fn prepare_output(out: &Path, cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let mut effective = cfg.clone();
    effective.output = Some(out.to_path_buf());
    std::fs::write(out.join("config.toml"), effective.to_toml()?)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
