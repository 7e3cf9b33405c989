use cbs_cli::{config, scenario, CliError, OUT_DIR_ENV};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo scattering-rate and backscattering-cone simulator.
#[derive(Parser)]
#[command(name = "cbs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV results plus a manifest.
    Run {
        /// Path to the TOML scenario.
        config: PathBuf,
        /// Output directory (overrides the scenario and CBS_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the number of paths.
        #[arg(long)]
        paths: Option<u64>,
    },
}

fn run(cmd: Command) -> Result<(), CliError> {
    let Command::Run { config: config_path, out, seed, workers, paths } = cmd;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg: config::ScenarioConfig = toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", config_path.display())))?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(w) = workers {
        cfg.run.workers = w;
    }
    if let Some(p) = paths {
        cfg.run.paths = p;
    }
    let validated = cfg.validate()?;
    for w in &validated.warnings {
        eprintln!("warning: {w}");
    }

    let out_dir = out
        .or_else(|| cfg.output.directory.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let (manifest, files) = scenario::run_scenario(&validated, &text, &out_dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    println!(
        "done: {} target(s), {} path(s), {:.2}s",
        manifest.targets.len(),
        manifest.paths,
        manifest.elapsed_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
