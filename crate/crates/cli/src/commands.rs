//! `simulate`, `validate` and `nonuniform`. Each writes a manifest of the
//! resolved configuration before any work starts.

use std::fs;
use std::path::{Path, PathBuf};

use boussinesq_core::dump;
use boussinesq_core::experiments::{run_nonuniform, RecordStatus};
use boussinesq_core::lagrangian::solve;
use boussinesq_core::validation::run_validation;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Gap retention required of the non-uniformity experiment.
pub const GAP_RETENTION_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Validate,
    Nonuniform,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Command,
    version: &'a str,
    threads: usize,
    config: &'a RunConfig,
}

/// Creates `out` and writes `manifest.json` into it.
pub fn write_manifest(out: &Path, command: Command, threads: usize, config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        threads,
        config,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&out.join("manifest.json"), &text)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(path, &text)
}

/// Solves to `solver.T` and writes `trajectory.csv`, the final fields and,
/// with `dump_states`, every saved state under `states/`.
pub fn simulate(config: &RunConfig, base_dir: &Path, out: &Path) -> Result<(), CliError> {
    let grid = config.grid()?;
    let params = config.solver_params()?;
    let (u0, theta0) = config.datum.build(grid, base_dir)?;
    let traj = solve(&u0, &theta0, &params)?;
    dump::write_diagnostics_csv(&out.join("trajectory.csv"), &traj.diagnostics)?;
    dump::write_vector(&out.join("final_u"), &traj.final_velocity)?;
    dump::write_scalar(&out.join("final_theta"), &traj.final_theta)?;
    dump::write_diffeo(&out.join("final_phi"), traj.final_phi())?;
    if config.solver.dump_states {
        let dir = out.join("states");
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        for (k, state) in traj.states.iter().enumerate() {
            dump::write_diffeo(&dir.join(format!("phi_{k:04}")), &state.phi)?;
            dump::write_vector(&dir.join(format!("v_{k:04}")), &state.v)?;
        }
    }
    let last = traj.diagnostics.last();
    println!(
        "simulated to t = {} in {} saves; min det {:.12}, div/u {:.3e}",
        traj.times.last().copied().unwrap_or(0.0),
        traj.diagnostics.len(),
        last.map_or(1.0, |d| d.min_det),
        last.map_or(0.0, |d| if d.u_l2 > 0.0 { d.div_l2 / d.u_l2 } else { 0.0 }),
    );
    Ok(())
}

/// Runs the check suite and writes `validation.json`.
pub fn validate(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let vc = config.validation_config()?;
    let report = run_validation(&vc);
    for check in &report.checks {
        println!("{}", check.line());
    }
    write_json(&out.join("validation.json"), &report)?;
    if let Some(e) = &report.solver_error {
        return Err(CliError::Solver(e.clone()));
    }
    if !report.passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::Property(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

/// Runs the shrinking-bump experiment and writes `experiment.csv` and
/// `experiment.json`.
pub fn nonuniform(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ec = config.experiment_config()?;
    let report = run_nonuniform(&ec)?;
    dump::write_experiment_csv(&out.join("experiment.csv"), &report.records)?;
    write_json(&out.join("experiment.json"), &report)?;
    for r in &report.records {
        match r.status {
            RecordStatus::Ok => println!(
                "n = {}: r_n {:.4e}, input gap {:.4e}, output gap {:.4e}",
                r.n,
                r.r_n,
                r.input_gap.unwrap_or(f64::NAN),
                r.output_gap.unwrap_or(f64::NAN)
            ),
            _ => eprintln!(
                "warning: n = {} skipped: {}",
                r.n,
                r.message.as_deref().unwrap_or("no detail")
            ),
        }
    }
    let s = &report.summary;
    println!("m = {:.4e}, L = {:.4}, R = {:.4e}", s.m, s.lipschitz, s.radius);
    match s.gap_retention {
        Some(g) if g >= GAP_RETENTION_FLOOR => {
            println!("gap retention {g:.4}");
            Ok(())
        }
        Some(g) => Err(CliError::Property(format!(
            "gap retention {g:.4} below {GAP_RETENTION_FLOOR}"
        ))),
        None => Err(CliError::Property(format!(
            "gap retention undefined: {} of {} n resolvable",
            s.resolvable_n.len(),
            report.records.len()
        ))),
    }
}

/// `--out` wins over `output`, which defaults to `out`.
pub fn output_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
