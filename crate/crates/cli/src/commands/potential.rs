use clap::Args;
use sobtc_core::potential::{
    mf_potential, potential_file_name, scan_n, write_phase_diagram_csv, write_potential_csv, PhaseRow,
};

use super::prepare_output;
use crate::config::resolve_output;
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub common: Common,
    /// Total densities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<f64>,
    /// Mean-field curves instead of lattice statistics.
    #[arg(long)]
    pub mf: bool,
}

pub fn run(args: PotentialArgs) -> Result<(), CliError> {
    let mut cfg = args.common.load()?;
    if !args.n.is_empty() {
        cfg.potential.n_values = args.n.clone();
    }
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/potential");
    let ns = cfg.potential.n_values.clone();

    if args.mf {
        cfg.model.validate()?;
        prepare_output(&out, &cfg)?;
        let pts = cfg.potential.mf_points.max(3);
        let grid: Vec<f64> = (0..pts).map(|k| cfg.potential.mf_rho_max * k as f64 / (pts - 1) as f64).collect();
        for &n in &ns {
            let c = mf_potential(n, &cfg.model, &grid)?;
            write_potential_csv(&out.join(format!("potential_mf_{n}.csv")), &c)?;
            println!("n = {n}: {} minima, barrier {:?}", c.minima.len(), c.barrier.map(|b| b.height));
        }
        return Ok(());
    }

    // The total density is held fixed.
    cfg.model.b = 0.0;
    cfg.model.lambda = 0.0;
    cfg.model.validate()?;
    prepare_output(&out, &cfg)?;
    let d = cfg.lattice.d;
    let mut rows = Vec::new();
    for (n, res) in ns.iter().zip(scan_n(&cfg.model, &ns, &cfg.lattice, &cfg.potential.qs)) {
        let c = res?;
        write_potential_csv(&out.join(potential_file_name(d, *n)), &c)?;
        if c.insufficient_samples {
            eprintln!("warning: n = {n}: only {} cell samples", c.samples);
        }
        if c.overflow > 0 {
            eprintln!("warning: n = {n}: {} of {} cell samples above rho_max", c.overflow, c.samples);
        }
        let row = PhaseRow::from_curve(d, *n, &c);
        println!("d = {d} n = {n}: {} minima, barrier {:?}", row.n_minima, row.barrier_height);
        rows.push(row);
    }
    write_phase_diagram_csv(&out.join("phase_diagram.csv"), &rows)?;
    Ok(())
}
