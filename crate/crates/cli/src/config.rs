use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sobtc_core::avalanche::AvalancheOptions;
use sobtc_core::model::LambdaCOptions;
use sobtc_core::observables::AnalysisOptions;
use sobtc_core::potential::QsOptions;
use sobtc_core::{LatticeConfig, ModelParams};

use crate::error::CliError;

/// Environment variable holding the root for relative output directories.
pub const OUTPUT_ROOT_VAR: &str = "SOBTC_OUTPUT_ROOT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output: Option<PathBuf>,
    pub model: ModelParams,
    pub lattice: LatticeConfig,
    pub sim: SimSection,
    pub mf: MfSection,
    pub analysis: AnalysisOptions,
    pub avalanche: AvalancheOptions,
    pub potential: PotentialSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Time between checkpoints; one is always written at the end.
    pub checkpoint_every: Option<f64>,
    pub write_snapshots: bool,
    /// Label avalanches while the run advances instead of from a snapshot file.
    pub inline_avalanches: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { checkpoint_every: None, write_snapshots: true, inline_avalanches: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfSection {
    pub t_max: f64,
    pub dt: f64,
    pub rho0: f64,
    pub n0: f64,
    pub lambda_c: LambdaCOptions,
    pub scan: Option<ScanSection>,
}

impl Default for MfSection {
    fn default() -> Self {
        Self { t_max: 10_000.0, dt: 0.5, rho0: 1e-6, n0: 1.0, lambda_c: LambdaCOptions::default(), scan: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub x: String,
    pub x_values: Vec<f64>,
    pub y: String,
    pub y_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub n_values: Vec<f64>,
    pub qs: QsOptions,
    pub mf_rho_max: f64,
    pub mf_points: usize,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { n_values: vec![2.4, 2.6, 2.8], qs: QsOptions::default(), mf_rho_max: 2.0, mf_points: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Any key accepted by `--set`, e.g. `lattice.l` or `model.lambda`.
    pub axis: String,
    pub values: Vec<f64>,
    pub analyze: bool,
    pub avalanches: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { axis: "lattice.l".into(), values: vec![16.0, 24.0, 32.0], analyze: true, avalanches: true }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Sets a dotted key from its textual value. Short aliases such as `L`,
    /// `lambda` or `t_max` resolve to their full paths.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = resolve_alias(key);
        let mut doc = toml::Value::try_from(&*self).map_err(|e| CliError::Config(e.to_string()))?;
        let parsed = parse_value(value);
        let mut slot = &mut doc;
        let parts: Vec<&str> = path.split('.').collect();
        for (k, part) in parts.iter().enumerate() {
            let table = slot
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("`{path}`: `{part}` is not inside a table")))?;
            if k + 1 == parts.len() {
                table.insert(part.to_string(), parsed.clone());
                break;
            }
            slot = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        }
        *self = doc.try_into().map_err(|e| CliError::Config(format!("`{key} = {value}`: {e}")))?;
        Ok(())
    }
}

fn resolve_alias(key: &str) -> String {
    let lattice = ["d", "l", "dx", "dt", "t_max", "record_every", "snapshot_every", "seed", "noise"];
    let model = ["kappa", "omega", "gamma", "b", "lambda", "tau", "n_p", "d_t", "r_fac"];
    let k = key.replace('-', "_");
    match k.as_str() {
        "L" => "lattice.l".into(),
        _ if lattice.contains(&k.as_str()) => format!("lattice.{k}"),
        _ if model.contains(&k.as_str()) => format!("model.{k}"),
        _ => k,
    }
}

/// Integers, floats and booleans are typed; anything else stays a string.
fn parse_value(s: &str) -> toml::Value {
    let s = s.trim();
    if let Ok(i) = s.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        // Whole numbers become integers so they fit integer fields such as `L`.
        if x.fract() == 0.0 && x.abs() < 9.0e15 && !s.contains(['e', 'E', '.']) {
            return toml::Value::Integer(x as i64);
        }
        return toml::Value::Float(x);
    }
    match s {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => toml::Value::String(s.to_string()),
    }
}

/// Textual form of a sweep value suitable for [`ExperimentConfig::set`].
pub fn sweep_value_text(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Resolves the output directory: flag, then config, then `default`, placed
/// under the root variable when relative.
pub fn resolve_output(flag: Option<&Path>, cfg: &ExperimentConfig, default: &str) -> PathBuf {
    let p = flag.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(default));
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if p.is_relative() => PathBuf::from(root).join(p),
        _ => p,
    }
}
