use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcflow::ExecPolicy;
use pcflow_cli::error::EXIT_SUCCESS;
use pcflow_cli::{parse_config, run_scenario, scenarios, CliError, Scenario};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "pcflow", version, about = "Pseudo-Calabi flow scenario runner")]
struct Cli {
    /// Worker threads for the data-parallel loops and batches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled scenario, a config file or a batch file.
    Run {
        /// Name of a bundled scenario.
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (a parent directory for batches).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// File listing config paths or bundled names, one per line.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// List the bundled scenarios.
    List,
    /// Describe a bundled scenario and echo its configuration.
    Describe { name: String },
    /// Parse and validate a scenario without running it.
    Validate {
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(name: Option<&str>, config: Option<&Path>) -> Result<Scenario, CliError> {
    match (name, config) {
        (Some(n), None) => scenarios::load(n),
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_config(&text)
        }
        _ => Err(CliError::config("", "give exactly one of a scenario name or --config")),
    }
}

/// Entries of a batch file; relative paths resolve against the file's directory.
fn load_batch(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|entry| {
            if entry.ends_with(".toml") {
                load(None, Some(&base.join(entry)))
            } else {
                scenarios::load(entry)
            }
        })
        .collect()
}

fn execute(scenario: &Scenario, out: &Path) -> i32 {
    match run_scenario(scenario, out, ExecPolicy::Parallel) {
        Ok(outcome) => {
            let s = &outcome.summary;
            println!(
                "{}: {:?} after {} steps at t = {} -> {}",
                s.name,
                s.termination,
                s.steps,
                s.t_final,
                outcome.out_dir.display()
            );
            for (name, e) in &s.analysis_errors {
                eprintln!("{}: analysis {name} failed: {e}", s.name);
            }
            let code = outcome.exit_code();
            if code != EXIT_SUCCESS {
                let reason = format!("{:?}: {}", s.termination, s.detail.as_deref().unwrap_or("no detail"));
                eprintln!("{}", CliError::Runtime(reason).to_json());
            }
            code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    match cli.command {
        Command::List => {
            for b in scenarios::CATALOG {
                println!("{}", b.name);
            }
            Ok(EXIT_SUCCESS)
        }
        Command::Describe { name } => {
            print!("{}", scenarios::describe(&name)?);
            Ok(EXIT_SUCCESS)
        }
        Command::Validate { scenario, config } => {
            let s = load(scenario.as_deref(), config.as_deref())?;
            s.flow.initial_state().map_err(|e| CliError::config("initial", e.to_string()))?;
            println!("# {} is valid\n{}", s.name, s.to_toml());
            Ok(EXIT_SUCCESS)
        }
        Command::Run { scenario, config, out, seed, batch } => {
            if let Some(batch) = batch {
                if scenario.is_some() || config.is_some() {
                    return Err(CliError::config("--batch", "cannot be combined with a scenario or --config"));
                }
                let mut list = load_batch(&batch)?;
                if let Some(seed) = seed {
                    list.iter_mut().for_each(|s| s.flow.seed = seed);
                }
                let root = out.unwrap_or_else(|| PathBuf::from("runs"));
                let codes: Vec<i32> = list.par_iter().map(|s| execute(s, &root.join(&s.name))).collect();
                return Ok(codes.into_iter().max().unwrap_or(EXIT_SUCCESS));
            }
            let mut s = load(scenario.as_deref(), config.as_deref())?;
            if let Some(seed) = seed {
                s.flow.seed = seed;
            }
            let dir = out.unwrap_or_else(|| s.out_dir());
            Ok(execute(&s, &dir))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = dispatch(cli).unwrap_or_else(|e| {
        eprintln!("{}", e.to_json());
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
