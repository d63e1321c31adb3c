//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::commands::{self, Command};
use crate::config::{self, DatumSection, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "boussinesq", version, about = "Lagrangian pseudo-spectral 2D Boussinesq solver")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration; every field defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Datum preset, overriding `datum` in the config.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Solve to `solver.T` and dump the trajectory.
    Simulate,
    /// Run the invariant check suite.
    Validate,
    /// Run the shrinking-bump non-uniformity experiment.
    Nonuniform,
}

/// Parses `args` (program name first) and runs the subcommand on a pool of
/// `--threads` workers.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Config(e.to_string().trim_end().to_string())),
    };
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (mut cfg, base_dir) = match &cli.config {
        Some(path) => (
            config::load(path)?,
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(name) = &cli.preset {
        cfg.datum = DatumSection::from_name(name)?;
    }
    let out = commands::output_dir(cli.out.clone(), &cfg);
    cfg.output = Some(out.clone());
    let command = match cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::Validate => Command::Validate,
        Sub::Nonuniform => Command::Nonuniform,
    };
    // reject invalid sections before writing anything
    match command {
        Command::Simulate => {
            cfg.grid()?;
            cfg.solver_params()?;
        }
        Command::Validate => {
            cfg.validation_config()?;
        }
        Command::Nonuniform => {
            cfg.experiment_config()?;
        }
    }
    commands::write_manifest(&out, command, cli.threads, &cfg)?;
    match command {
        Command::Simulate => commands::simulate(&cfg, &base_dir, &out),
        Command::Validate => commands::validate(&cfg, &out),
        Command::Nonuniform => commands::nonuniform(&cfg, &out),
    }
}
