use std::path::Path;
use std::time::Instant;

use clap::Args;
use serde_json::json;
use sobtc_core::avalanche::{write_avalanches_csv, write_king_json, AvalancheLabeler, AvalancheStats};
use sobtc_core::lattice::{
    read_checkpoint, write_checkpoint, FieldState, Observer, SeriesWriter, Simulation, SnapshotWriter,
};
use sobtc_core::{Geometry, SeriesPoint};

use super::{prepare_output, write_json};
use crate::config::{resolve_output, ExperimentConfig};
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Continue from the checkpoint in the output directory.
    #[arg(long, conflicts_with = "force")]
    pub resume: bool,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
    /// Label avalanches during the run (requires a snapshot interval).
    #[arg(long)]
    pub avalanches: bool,
}

pub fn run(args: SimArgs) -> Result<(), CliError> {
    let mut cfg = args.common.load()?;
    if args.avalanches {
        cfg.sim.inline_avalanches = true;
    }
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/sim");
    let summary = if args.resume { resume(&out, &args.common)? } else { run_fresh(&cfg, &out, args.force)? };
    println!("{summary}");
    Ok(())
}

/// Outputs that exist only after a run.
const PRODUCTS: [&str; 5] = ["series.csv", "snapshots.bin", "snapshots_index.csv", "checkpoint.json", "checkpoint.bin"];

struct Sinks {
    series: SeriesWriter,
    snapshots: Option<SnapshotWriter>,
    avalanches: Option<AvalancheLabeler>,
}

impl Observer for Sinks {
    fn sample(&mut self, point: SeriesPoint) -> sobtc_core::Result<()> {
        self.series.sample(point)
    }

    fn snapshot(&mut self, state: &FieldState, geom: &Geometry) -> sobtc_core::Result<()> {
        if let Some(s) = &mut self.snapshots {
            s.snapshot(state, geom)?;
        }
        if let Some(a) = &mut self.avalanches {
            a.snapshot(state, geom)?;
        }
        Ok(())
    }
}

impl Sinks {
    fn flush(&mut self) -> Result<(), CliError> {
        self.series.flush()?;
        if let Some(s) = &mut self.snapshots {
            s.flush()?;
        }
        Ok(())
    }
}

/// Summary of a completed run.
pub struct SimOutcome {
    pub avalanches: Option<AvalancheStats>,
    pub steps: u64,
    pub wall_clock_s: f64,
}

impl std::fmt::Display for SimOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sim finished: {} steps in {:.1} s", self.steps, self.wall_clock_s)?;
        if let Some(a) = &self.avalanches {
            write!(f, ", {} avalanches ({} counted, {} king)", a.clusters.len(), a.total_count, a.king_count)?;
        }
        Ok(())
    }
}

pub fn run_fresh(cfg: &ExperimentConfig, out: &Path, force: bool) -> Result<SimOutcome, CliError> {
    cfg.model.validate()?;
    cfg.lattice.validate(&cfg.model)?;
    if cfg.sim.inline_avalanches && cfg.lattice.snapshot_every.is_none() {
        return Err(CliError::Config("inline avalanches need lattice.snapshot_every".into()));
    }
    if !force {
        if let Some(p) = PRODUCTS.iter().map(|f| out.join(f)).find(|p| p.exists()) {
            return Err(CliError::Config(format!("{} exists; pass --force to overwrite or --resume", p.display())));
        }
    }
    prepare_output(out, cfg)?;
    for f in PRODUCTS {
        let p = out.join(f);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    let sim = Simulation::new(cfg.lattice.clone(), cfg.model)?;
    let mut sinks = Sinks {
        series: SeriesWriter::create(&out.join("series.csv"))?,
        snapshots: match (cfg.lattice.snapshot_every, cfg.sim.write_snapshots) {
            (Some(_), true) => Some(SnapshotWriter::create(&out.join("snapshots.bin"), &out.join("snapshots_index.csv"))?),
            _ => None,
        },
        avalanches: if cfg.sim.inline_avalanches {
            Some(AvalancheLabeler::new(*sim.geometry(), cfg.avalanche)?)
        } else {
            None
        },
    };
    sim.emit_initial(&mut sinks)?;
    advance(sim, sinks, cfg, out)
}

fn resume(out: &Path, common: &Common) -> Result<SimOutcome, CliError> {
    let cfg_path = out.join("config.toml");
    let mut cfg = ExperimentConfig::load(Some(&cfg_path))?;
    // Only the horizon may change on resume.
    if let Some(t) = common.t_max {
        cfg.lattice.t_max = t;
    }
    if cfg.sim.inline_avalanches {
        return Err(CliError::Config("runs with inline avalanches cannot be resumed".into()));
    }
    let (meta, state) = read_checkpoint(out).map_err(CliError::input)?;
    let mut lattice = meta.config.clone();
    lattice.t_max = cfg.lattice.t_max;
    if lattice.total_steps() < meta.step_index {
        return Err(CliError::Config(format!("t_max {} is before the checkpoint at t = {}", lattice.t_max, meta.t)));
    }
    cfg.lattice = lattice.clone();
    cfg.model = meta.params;
    prepare_output(out, &cfg)?;
    let sim = Simulation::from_state(lattice, meta.params, state)?;
    let sinks = Sinks {
        series: SeriesWriter::resume(&out.join("series.csv"), meta.t).map_err(CliError::input)?,
        snapshots: match (cfg.lattice.snapshot_every, cfg.sim.write_snapshots) {
            (Some(_), true) => Some(
                SnapshotWriter::resume(&out.join("snapshots.bin"), &out.join("snapshots_index.csv"), meta.step_index)
                    .map_err(CliError::input)?,
            ),
            _ => None,
        },
        avalanches: None,
    };
    advance(sim, sinks, &cfg, out)
}

fn advance(mut sim: Simulation, mut sinks: Sinks, cfg: &ExperimentConfig, out: &Path) -> Result<SimOutcome, CliError> {
    let start = Instant::now();
    let first = sim.state().step_index;
    let total = cfg.lattice.total_steps();
    let every = match cfg.sim.checkpoint_every {
        Some(t) if t > 0.0 => ((t / cfg.lattice.dt).round() as u64).max(1),
        _ => u64::MAX,
    };
    while sim.state().step_index < total {
        let next = sim.state().step_index.saturating_add(every - sim.state().step_index % every).min(total);
        sim.advance_to(next, &mut sinks)?;
        sinks.flush()?;
        write_checkpoint(out, &sim)?;
    }
    if sim.state().step_index == first {
        sinks.flush()?;
        write_checkpoint(out, &sim)?;
    }
    let wall = start.elapsed().as_secs_f64();
    let Sinks { series, snapshots, avalanches } = sinks;
    series.finish()?;
    if let Some(s) = snapshots {
        s.finish()?;
    }
    let stats = avalanches.map(|a| a.finish());
    if let Some(st) = &stats {
        write_avalanches_csv(&out.join("avalanches.csv"), st)?;
        write_king_json(&out.join("king.json"), st, &cfg.avalanche)?;
    }
    // Kept apart from the data files so those stay byte-identical between runs.
    write_json(&out.join("timing.json"), &json!({ "wall_clock_s": wall, "steps": total - first }))?;
    Ok(SimOutcome { avalanches: stats, steps: total - first, wall_clock_s: wall })
}
