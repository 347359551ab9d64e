use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use illuminate::Algorithm;
use illuminate_cli::{
    compare, load_config, retarget, run_experiment, summaries_csv, validate, verify_run, CliError,
};

#[derive(Parser)]
#[command(name = "illuminate", version, about = "Quality-diversity search runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the configuration's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run several configurations over several seeds and tabulate the
    /// results with per-configuration medians.
    Compare {
        /// Repeat for each configuration.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Comma-separated algorithm names, e.g. ME,CME,GA; each is applied
        /// to every configuration.
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long)]
        budget: Option<u64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate a run directory's archive and print its report summary.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("ILLUMINATE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn parse_algorithm(name: &str) -> Result<Algorithm, CliError> {
    serde_json::from_value(serde_json::Value::String(name.trim().to_string())).map_err(|_| {
        let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.label()).collect();
        CliError::Config(vec![format!(
            "algorithms: unknown algorithm {name:?} (expected one of {})",
            known.join(", ")
        )])
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            budget,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = budget {
                cfg.engine.budget = b;
            }
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                return Err(CliError::Config(vec![
                    "output: no output directory (set `output` or pass --out)".into(),
                ]));
            };
            validate(&cfg)?;
            let summary = run_experiment(&cfg, Some(&out))?;
            println!("{}", serde_json::to_string(&summary).expect("serializable"));
        }
        Command::Compare {
            config,
            algorithms,
            seeds,
            budget,
            out,
        } => {
            let mut configs = Vec::new();
            let algorithms = algorithms
                .iter()
                .map(|a| parse_algorithm(a))
                .collect::<Result<Vec<_>, _>>()?;
            for path in &config {
                let mut cfg = load_config(path)?;
                if let Some(b) = budget {
                    cfg.engine.budget = b;
                }
                if algorithms.is_empty() {
                    configs.push(cfg);
                } else {
                    configs.extend(algorithms.iter().map(|&a| retarget(&cfg, a)));
                }
            }
            for cfg in &configs {
                validate(cfg)?;
            }
            let csv = summaries_csv(&compare(&configs, &seeds)?);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv).map_err(|e| CliError::Io(path.clone(), e))?
                }
                None => print!("{csv}"),
            }
        }
        Command::Report { run } => {
            let v = verify_run(&run)?;
            println!("{}", serde_json::to_string(&v).expect("serializable"));
            if !v.mismatches.is_empty() {
                return Err(CliError::Integrity(format!(
                    "{} of {} stored individuals re-evaluate differently",
                    v.mismatches.len(),
                    v.records
                )));
            }
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(PathBuf::new(), e))?;
            eprintln!("listening on {addr}");
            rt.block_on(illuminate_service::serve(addr))
                .map_err(|e| CliError::Io(PathBuf::from(addr.to_string()), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    configure_threads();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
