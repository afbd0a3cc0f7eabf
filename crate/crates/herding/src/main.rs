//! Thin CLI over the scenario layer; the library's `examples/` directory is
//! the richer entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use herding::scenario::{
    builtin_toml, feasibility_json, load_config, nearest_builtin, run_scenario, ScenarioFile,
    BUILTINS,
};
use herding::Error;

/// Environment variable holding the default output directory root.
const OUT_ENV: &str = "HERDING_OUT";

#[derive(Parser)]
#[command(name = "herding", about = "Leader-follower density control scenarios", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a TOML config file.
    Run {
        /// Built-in scenario name or path to a config file.
        scenario: String,
        /// Output directory (default: $HERDING_OUT/<name> or out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override for ensemble scenarios.
        #[arg(long)]
        seed: Option<u64>,
        /// Step-count override.
        #[arg(long)]
        steps: Option<usize>,
        /// Config overrides as dotted key=value pairs.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the built-in scenarios.
    List {
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Analyze the feasibility of a scenario's target and print the report.
    Feasibility {
        /// Built-in scenario name or path to a config file.
        config: String,
    },
}

fn load_source(source: &str, overrides: &[String]) -> Result<(String, ScenarioFile), Error> {
    if let Some(toml) = builtin_toml(source) {
        return Ok((source.to_string(), load_config(toml, overrides)?));
    }
    let path = Path::new(source);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        return Ok((name, load_config(&text, overrides)?));
    }
    Err(Error::UnknownScenario {
        name: source.to_string(),
        suggestion: nearest_builtin(source),
    })
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ConfigParse(_) => "config_parse",
        Error::UnknownScenario { .. } => "unknown_scenario",
        Error::Infeasible { .. } | Error::Infeasible2D { .. } => "infeasible",
        Error::NumericalBlowup { .. } => "numerical_blowup",
        Error::Io(_) => "io",
        _ => "invalid_input",
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            steps,
            mut overrides,
        } => {
            if let Some(seed) = seed {
                overrides.push(format!("ensemble.master_seed={seed}"));
            }
            if let Some(steps) = steps {
                overrides.push(format!("sim.n_steps={steps}"));
            }
            let (name, file) = load_source(&scenario, &overrides)?;
            let out = out.unwrap_or_else(|| {
                let root = std::env::var(OUT_ENV).unwrap_or_else(|_| "out".into());
                Path::new(&root).join(&name)
            });
            run_scenario(&file, &out)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::List { json } => {
            if json {
                let list: Vec<_> = BUILTINS
                    .iter()
                    .map(|(name, description)| {
                        serde_json::json!({ "name": name, "description": description })
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&list).unwrap());
            } else {
                for (name, description) in BUILTINS {
                    println!("{name:24} {description}");
                }
            }
            Ok(())
        }
        Command::Feasibility { config } => {
            let (_, file) = load_source(&config, &[])?;
            println!("{}", feasibility_json(&file)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = serde_json::json!({ "kind": error_kind(&e), "error": e.to_string() });
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}
