use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;
use sobtc_core::lattice::read_series_csv;
use sobtc_core::observables::{
    analyze_series, write_analysis_json, write_correlation_csv, write_events_csv, write_spectrum_csv, AnalysisOptions,
    SeriesAnalysis,
};

use super::prepare_output;
use crate::config::resolve_output;
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Series CSV; defaults to `series.csv` in the output directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.common.load()?;
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/sim");
    let input = args.input.unwrap_or_else(|| out.join("series.csv"));
    std::fs::create_dir_all(&out)?;
    if input.parent() != Some(out.as_path()) || !out.join("config.toml").exists() {
        prepare_output(&out, &cfg)?;
    }
    let a = analyze_to(&input, &out, &cfg.analysis)?;
    match a.period() {
        Some(t) => println!("period (spectral) = {t:.3}"),
        None => println!("no spectral peak"),
    }
    match &a.coherence {
        Some(c) => println!(
            "coherence: {} cycles, t_mean = {:.3}, t_std = {:.3}, tau_ctc = {}",
            c.cycles,
            c.t_mean,
            c.t_std,
            if c.infinite { "inf".to_string() } else { format!("{:.4}", c.tau_ctc) }
        ),
        None => println!("coherence: fewer than 2 up jumps"),
    }
    Ok(())
}

/// Reads `input`, writes every analysis product into `out`.
pub fn analyze_to(input: &Path, out: &Path, opts: &AnalysisOptions) -> Result<SeriesAnalysis, CliError> {
    if !input.exists() {
        return Err(CliError::MissingInput(format!("{} not found", input.display())));
    }
    let series = read_series_csv(input)?;
    let a = analyze_series(&series, opts)?;
    write_correlation_csv(&out.join("correlation_n.csv"), &a.g_n, a.dt)?;
    if let Some(g) = &a.g_rho {
        write_correlation_csv(&out.join("correlation_rho.csv"), g, a.dt)?;
    }
    write_spectrum_csv(&out.join("spectrum.csv"), &a.spectrum_n)?;
    write_events_csv(&out.join("events.csv"), &a.events)?;
    write_analysis_json(
        &out.join("coherence.json"),
        &a,
        json!({ "input": input.display().to_string(), "samples": series.len(), "options": opts }),
    )?;
    Ok(a)
}
