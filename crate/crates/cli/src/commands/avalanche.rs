use std::path::PathBuf;

use clap::Args;
use sobtc_core::avalanche::{king_probability, label_snapshot_file, write_avalanches_csv, write_king_json};

use super::prepare_output;
use crate::config::resolve_output;
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct AvalancheArgs {
    #[command(flatten)]
    pub common: Common,
    /// Snapshot file; defaults to `snapshots.bin` in the output directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub fn run(args: AvalancheArgs) -> Result<(), CliError> {
    let mut cfg = args.common.load()?;
    if let Some(t) = args.threshold {
        cfg.avalanche.threshold = t;
    }
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/sim");
    let input = args.input.unwrap_or_else(|| out.join("snapshots.bin"));
    if !input.exists() {
        return Err(CliError::MissingInput(format!("{} not found", input.display())));
    }
    std::fs::create_dir_all(&out)?;
    if !out.join("config.toml").exists() {
        prepare_output(&out, &cfg)?;
    }
    let stats = label_snapshot_file(&input, cfg.avalanche).map_err(CliError::input)?;
    write_avalanches_csv(&out.join("avalanches.csv"), &stats)?;
    write_king_json(&out.join("king.json"), &stats, &cfg.avalanche)?;
    match king_probability(&stats) {
        Some(p) => println!("{} clusters, {} counted, king probability {p:.4}", stats.clusters.len(), stats.total_count),
        None => println!("{} clusters, king probability undefined", stats.clusters.len()),
    }
    Ok(())
}
