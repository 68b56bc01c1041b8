use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergolab::config::{ConfigError, ExperimentConfig, Task};
use ergolab::output::write_outputs;
use ergolab::run::run_experiment;
use ergolab_core::systems::SystemSpec;

const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Name complexity, mean equicontinuity and orbit geometry experiments")]
struct Cli {
    /// Master seed; overrides `params.seed` of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the catalog systems.
    Systems,
    /// Print α-names of the configured points.
    Name,
    /// Name complexity curve with bootstrap intervals.
    Complexity,
    /// Search for a mean-equicontinuity partition.
    Meanequi,
    /// Mean expansivity estimate.
    Expansivity,
    /// Koopman orbit geometry and almost-periodicity verdict.
    Spectral,
    /// Rotation versus Bernoulli shift report (default config when none is given).
    Report,
}

impl Command {
    fn task(&self) -> Option<Task> {
        match self {
            Command::Systems => None,
            Command::Name => Some(Task::Name),
            Command::Complexity => Some(Task::Complexity),
            Command::Meanequi => Some(Task::Meanequi),
            Command::Expansivity => Some(Task::Expansivity),
            Command::Spectral => Some(Task::Spectral),
            Command::Report => Some(Task::DichotomyReport),
        }
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("ERGOLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("ERGOLAB_THREADS = {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(e.to_string()))
}

fn load_config(cli: &Cli, task: Task) -> Result<ExperimentConfig, ConfigError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None if task == Task::DichotomyReport => ExperimentConfig::dichotomy(0),
        None => return Err(ConfigError(format!("`{}` needs --config", task.as_str()))),
    };
    match config.task {
        Some(t) if t != task => {
            return Err(ConfigError(format!(
                "config task `{}` does not match subcommand `{}`",
                t.as_str(),
                task.as_str()
            )))
        }
        _ => config.task = Some(task),
    }
    if let Some(seed) = cli.seed {
        config.params.seed = Some(seed);
    }
    config.validate()?;
    Ok(config)
}

fn list_systems() {
    for spec in SystemSpec::catalog() {
        let json = serde_json::to_string(&spec).expect("spec serializes");
        println!("{json}\t{}", spec.describe());
    }
}

fn fail(err: &dyn std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("ergolab: {err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(&e, EXIT_INVALID);
    }
    let Some(task) = cli.command.task() else {
        list_systems();
        return ExitCode::SUCCESS;
    };
    let config = match load_config(&cli, task) {
        Ok(c) => c,
        Err(e) => return fail(&e, EXIT_INVALID),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("ergolab-out"));
    let result = run_experiment(&config).and_then(|bundle| {
        write_outputs(&bundle, &config, &out)?;
        Ok(bundle)
    });
    match result {
        Ok(bundle) if bundle.budget_exceeded => {
            eprintln!("ergolab: time budget exceeded; partial results in {}", out.display());
            ExitCode::from(EXIT_BUDGET)
        }
        Ok(_) => {
            println!("{}", out.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            fail(&e, u8::try_from(code).unwrap_or(1))
        }
    }
}

