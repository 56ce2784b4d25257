use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use opquant::operators::Operator;
use opquant::quantities::{Method, Quantity};
use opquant::runner::{
    emit_test_vectors, parse_config, run, ConfigError, Experiment, ExperimentConfig, Parameters, RunReport, EXIT_CONFIG,
};
use opquant::seqspace::{Exponent, SpaceConfig};

#[derive(Parser)]
#[command(name = "opquant", version, about = "Operational quantities of operators on sequence spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report destination; defaults to the config's output_path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides parameters.seed.
        #[arg(long, env = "OPQUANT_SEED")]
        seed: Option<u64>,
    },
    /// Estimate one quantity along a schedule of (N, k, K) windows.
    Quantities {
        /// Operator as inline JSON, e.g. '{"kind":"diagonal","periodic":[2,1]}'.
        #[arg(long)]
        op: String,
        /// G, D, T or N.
        #[arg(long)]
        quantity: Quantity,
        /// "N,k,K;N,k,K;…" or a JSON list of triples.
        #[arg(long)]
        schedule: String,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, env = "OPQUANT_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the construction on seeded random windows.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, env = "OPQUANT_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        systems: Option<usize>,
        #[arg(long)]
        combinations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a deterministic regression bundle for a config.
    Vectors {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "OPQUANT_SEED")]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    SvdOracle,
    SubsetOracle,
    GrassmannSearch,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::SvdOracle => Method::SvdOracle,
            MethodArg::SubsetOracle => Method::SubsetOracle,
            MethodArg::GrassmannSearch => Method::GrassmannSearch,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Construction,
}

fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

fn parse_schedule(text: &str) -> Result<Vec<[usize; 3]>, ConfigError> {
    let err = |message: String| ConfigError {
        path: "--schedule".into(),
        message,
    };
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| err(e.to_string()));
    }
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|triple| {
            let parts: Vec<usize> = triple
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|e| err(format!("{triple:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            <[usize; 3]>::try_from(parts).map_err(|_| err(format!("{triple:?}: expected N,k,K")))
        })
        .collect()
}

fn parse_exponent(text: &str) -> Result<Exponent, ConfigError> {
    serde_json::from_value(match text.parse::<f64>() {
        Ok(x) => serde_json::json!(x),
        Err(_) => serde_json::json!(text),
    })
    .map_err(|e| ConfigError {
        path: "--p".into(),
        message: e.to_string(),
    })
}

fn write_report(report: &RunReport, out: Option<&Path>) -> Result<(), ConfigError> {
    let text = report.to_json();
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| ConfigError {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<u8, ConfigError> {
    match command {
        Command::Run { config, out, seed } => {
            let config = load_config(&config)?;
            let report = run(&config, seed)?;
            let out = out.or(config.output_path.as_ref().map(PathBuf::from));
            write_report(&report, out.as_deref())?;
            Ok(report.exit_code())
        }
        Command::Quantities {
            op,
            quantity,
            schedule,
            method,
            p,
            restarts,
            seed,
            out,
        } => {
            let operator: Operator = serde_json::from_str(&op).map_err(|e| ConfigError {
                path: "--op".into(),
                message: e.to_string(),
            })?;
            let config = ExperimentConfig {
                space: SpaceConfig::new(parse_exponent(&p)?),
                operator: Some(operator),
                experiment: Experiment::Quantities,
                parameters: Parameters {
                    quantity: Some(quantity),
                    schedule: Some(parse_schedule(&schedule)?),
                    method: method.map(Method::from),
                    restarts,
                    ..Parameters::default()
                },
                output_path: None,
            };
            let report = run(&config, seed)?;
            write_report(&report, out.as_deref())?;
            Ok(report.exit_code())
        }
        Command::Verify {
            suite: SuiteArg::Construction,
            epsilon,
            c,
            seed,
            systems,
            combinations,
            out,
        } => {
            let config = ExperimentConfig {
                space: SpaceConfig::L2,
                operator: None,
                experiment: Experiment::ConstructionSuite,
                parameters: Parameters {
                    epsilon: Some(epsilon),
                    c: Some(c),
                    systems,
                    combinations,
                    ..Parameters::default()
                },
                output_path: None,
            };
            let report = run(&config, seed)?;
            write_report(&report, out.as_deref())?;
            Ok(report.exit_code())
        }
        Command::Vectors { config, out, seed } => {
            let config = load_config(&config)?;
            emit_test_vectors(&config, seed, &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("opquant: error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
