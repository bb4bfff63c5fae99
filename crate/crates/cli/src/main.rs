mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "sobtc", version, about = "Self-organized bistable time crystal simulator")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean-field fixed point, spinodals, critical loading rate and trajectory.
    Mf(commands::mf::MfArgs),
    /// Lattice simulation.
    Sim(commands::sim::SimArgs),
    /// Correlations, spectrum, jumps and coherence time of a recorded series.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Space-time avalanches and king probability from a snapshot file.
    Avalanche(commands::avalanche::AvalancheArgs),
    /// Mean-field or quasi-stationary effective potentials at fixed total density.
    Potential(commands::potential::PotentialArgs),
    /// Repeats sim and analyze over one configuration axis.
    Sweep(commands::sweep::SweepArgs),
}

/// Options shared by every subcommand. Flags override the config file, which
/// overrides the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, relative to $SOBTC_OUTPUT_ROOT when that is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Arbitrary override, `key=value` with a dotted or short key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub record_every: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<f64>,
}

impl Common {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        let m = &mut cfg.model;
        let l = &mut cfg.lattice;
        macro_rules! apply {
            ($($src:ident => $dst:expr),* $(,)?) => { $(if let Some(v) = self.$src { $dst = v; })* };
        }
        apply!(lambda => m.lambda, kappa => m.kappa, omega => m.omega, gamma => m.gamma, tau => m.tau, b => m.b,
               d => l.d, l => l.l, dt => l.dt, t_max => l.t_max, seed => l.seed, record_every => l.record_every);
        if self.snapshot_every.is_some() {
            l.snapshot_every = self.snapshot_every;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", CliError::Config(format!("--threads: {e}")));
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Mf(a) => commands::mf::run(a),
        Command::Sim(a) => commands::sim::run(a),
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Avalanche(a) => commands::avalanche::run(a),
        Command::Potential(a) => commands::potential::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
