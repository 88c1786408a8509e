use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use dfs_sensing::scenario::{self, Command, ScenarioConfig};
use dfs_sensing::Error;

/// Seeded simulations of distributed sensing in correlated noise.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON scenario file; keys override the preset it names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario used when no config file is given.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for campaigns and restarts.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Leave the generation time out of the JSON summary.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Enumerate decoherence-free subspaces and their spectral ranges.
    Dfs,
    /// RMSE limits of the entangled and separable protocols.
    Bounds,
    /// Monte Carlo estimation campaigns and shot scaling.
    Simulate,
    /// Maximize the separable-protocol Fisher information.
    Optimize,
    /// Simulated Pauli tomography with bootstrap error bars.
    Tomography,
    /// AC-Stark field calibration, echo schedule and dressed sensitivities.
    Calibrate,
    /// Product-state penalty versus the number of sensors.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Dfs => Command::Dfs,
            Cmd::Bounds => Command::Bounds,
            Cmd::Simulate => Command::Simulate,
            Cmd::Optimize => Command::Optimize,
            Cmd::Tomography => Command::Tomography,
            Cmd::Calibrate => Command::Calibrate,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn resolve(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("--config and --preset are exclusive; name the preset inside the file".into())),
        (Some(path), None) => scenario::load_config(path)?,
        (None, Some(name)) => scenario::preset(name)?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let config = resolve(cli)?;
    let report = scenario::run(cli.command.into(), &config)?;
    let timestamp = (!cli.no_timestamp).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let written = scenario::write_report(&report, &config, &config.output, timestamp)?;
    print!("{}", scenario::render_lines(&report));
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
