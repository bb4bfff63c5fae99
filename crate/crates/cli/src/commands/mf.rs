use clap::Args;
use serde_json::json;
use sobtc_core::model::{
    integrate_mf, lambda_c, lambda_c_scan, mf_fixed_point, spinodals, write_lambda_c_map, write_trajectory, LambdaC,
    MfOptions,
};

use super::{prepare_output, write_json};
use crate::config::resolve_output;
use crate::error::CliError;
use crate::Common;

#[derive(Args, Debug)]
pub struct MfArgs {
    #[command(flatten)]
    pub common: Common,
    /// Only report the spinodals.
    #[arg(long)]
    pub spinodals: bool,
    /// Skip the trajectory integration.
    #[arg(long)]
    pub no_trajectory: bool,
}

pub fn run(args: MfArgs) -> Result<(), CliError> {
    let mut cfg = args.common.load()?;
    // The lattice horizon flag doubles as the trajectory horizon here.
    if let Some(t) = args.common.t_max {
        cfg.mf.t_max = t;
    }
    cfg.model.validate()?;
    let out = resolve_output(args.common.out.as_deref(), &cfg, "runs/mf");
    prepare_output(&out, &cfg)?;
    let p = cfg.model;

    let sp = spinodals(&p);
    match sp {
        Some(s) => println!("spinodals n_low = {:.6} n_high = {:.6}", s.n_low, s.n_high),
        None => println!("spinodals none (no bistable window)"),
    }
    if args.spinodals {
        write_json(&out.join("spinodals.json"), &json!({ "params": p, "spinodals": sp }))?;
        return Ok(());
    }

    let fp = mf_fixed_point(&p)?;
    println!(
        "fixed point rho* = {:.6} n* = {:.6} {} (trace {:.4e}, det {:.4e})",
        fp.rho_star,
        fp.n_star,
        fp.classification,
        fp.trace(),
        fp.determinant()
    );
    if fp.has_multiple_roots() {
        eprintln!("warning: several fixed points in the bracket: {:?}", fp.roots);
    }
    let lc = lambda_c(&p, &cfg.mf.lambda_c)?;
    match lc {
        LambdaC::Transition { lambda_c, .. } => println!("lambda_c = {lambda_c:.6e}"),
        LambdaC::NoTransition => println!("lambda_c none (stationary for every loading rate)"),
    }
    let mut doc = json!({
        "params": p,
        "fixed_point": fp,
        "stable": fp.classification.is_stable(),
        "spinodals": sp,
        "lambda_c": lc,
    });

    if !args.no_trajectory && cfg.mf.t_max > 0.0 {
        let traj = integrate_mf(&p, (cfg.mf.rho0, cfg.mf.n0), cfg.mf.t_max, cfg.mf.dt, &MfOptions::default())?;
        write_trajectory(&out.join("trajectory.csv"), &traj)?;
        match traj.period() {
            Some(t) => println!("limit cycle period = {t:.4}"),
            None => println!("no limit cycle ({:?})", traj.outcome),
        }
        doc["trajectory"] = json!({
            "outcome": traj.outcome,
            "period": traj.period(),
            "crossings": traj.crossings.len(),
            "steps_accepted": traj.steps_accepted,
        });
    }

    if let Some(scan) = &cfg.mf.scan {
        let cells = lambda_c_scan(&p, &scan.x, &scan.x_values, &scan.y, &scan.y_values, &cfg.mf.lambda_c)?;
        write_lambda_c_map(&out.join("lambda_c_map.csv"), &scan.x, &scan.y, &cells)?;
        let failed = cells.iter().filter(|c| c.result.is_err()).count();
        println!("lambda_c map: {} cells, {failed} failed", cells.len());
    }
    write_json(&out.join("fixed_point.json"), &doc)?;
    Ok(())
}
