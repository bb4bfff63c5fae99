use std::io::Write;

use clap::Args;
use rayon::prelude::*;
use sobtc_core::avalanche::king_probability;
use sobtc_core::output::fmt_f64;

use super::analyze::analyze_to;
use super::prepare_output;
use super::sim::run_fresh;
use crate::config::{resolve_output, sweep_value_text, ExperimentConfig};
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Configuration key to vary, e.g. `L` or `model.lambda`.
    #[arg(long)]
    pub axis: Option<String>,
    /// Values of the axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Default)]
struct Row {
    value: f64,
    n_sites: Option<usize>,
    cycles: Option<usize>,
    t_mean: Option<f64>,
    t_std: Option<f64>,
    tau_ctc: Option<f64>,
    period: Option<f64>,
    king: Option<f64>,
    status: String,
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let mut cfg = args.common.load()?;
    if let Some(a) = &args.axis {
        cfg.sweep.axis = a.clone();
    }
    if !args.values.is_empty() {
        cfg.sweep.values = args.values.clone();
    }
    if cfg.sweep.avalanches {
        if cfg.lattice.snapshot_every.is_none() {
            cfg.lattice.snapshot_every = Some(1.0);
        }
        cfg.sim.inline_avalanches = true;
        cfg.sim.write_snapshots = false;
    }
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/sweep");
    prepare_output(&out, &cfg)?;
    // Check every point before running any of them.
    let points: Vec<(f64, ExperimentConfig)> = cfg
        .sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.set(&cfg.sweep.axis, &sweep_value_text(v))?;
            Ok((v, c))
        })
        .collect::<Result<_, CliError>>()?;

    let rows: Vec<Row> = points
        .into_par_iter()
        .map(|(v, c)| {
            let dir = out.join(format!("{}_{}", cfg.sweep.axis.replace('.', "_"), sweep_value_text(v)));
            run_point(v, &c, &dir, args.force).unwrap_or_else(|e| {
                eprintln!("sweep point {v}: {e}");
                Row { value: v, status: format!("failed: {e}").replace(',', ";"), ..Row::default() }
            })
        })
        .collect();

    let mut w = std::io::BufWriter::new(std::fs::File::create(out.join("scaling.csv"))?);
    writeln!(w, "value,n_sites,cycles,t_mean,t_std,tau_ctc,period,king_probability,status")?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.value),
            r.n_sites.map(|n| n.to_string()).unwrap_or_default(),
            r.cycles.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.t_mean),
            opt(r.t_std),
            opt(r.tau_ctc.filter(|x| x.is_finite())),
            opt(r.period),
            opt(r.king),
            r.status
        )?;
        println!("{} = {}: tau_ctc {:?}, period {:?}, king {:?} [{}]", cfg.sweep.axis, r.value, r.tau_ctc, r.period, r.king, r.status);
    }
    w.flush()?;
    Ok(())
}

fn run_point(value: f64, cfg: &ExperimentConfig, dir: &std::path::Path, force: bool) -> Result<Row, CliError> {
    let sim = run_fresh(cfg, dir, force)?;
    let mut row = Row { value, n_sites: Some(cfg.lattice.l.pow(cfg.lattice.d as u32)), status: "ok".into(), ..Row::default() };
    row.king = sim.avalanches.as_ref().and_then(king_probability);
    if cfg.sweep.analyze {
        let a = analyze_to(&dir.join("series.csv"), dir, &cfg.analysis)?;
        row.period = a.period();
        if let Some(c) = a.coherence {
            row.cycles = Some(c.cycles);
            row.t_mean = Some(c.t_mean);
            row.t_std = Some(c.t_std);
            row.tau_ctc = Some(c.tau_ctc);
            if c.low_statistics {
                row.status = "low-statistics".into();
            }
        }
    }
    Ok(row)
}
