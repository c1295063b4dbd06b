//! Batch command-line pipeline: phantom synthesis, descriptor extraction,
//! survival model fitting and evaluation.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "rdepth",
    version,
    about = "Deformation + texture heterogeneity radiomics with LASSO-Cox survival modeling"
)]
pub struct Cli {
    /// Bound the worker-thread count (default: all cores). Outputs are
    /// identical at any worker count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Emit machine-readable JSON-lines logs on stderr.
    #[arg(long, global = true)]
    pub log_json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic phantom cohort or feature cohort from a spec file.
    Synth {
        /// JSON spec (see README for the schema).
        #[arg(long)]
        spec: std::path::PathBuf,
        #[arg(long)]
        out_dir: std::path::PathBuf,
    },
    /// Extract the full descriptor (deformation + texture blocks).
    Extract {
        #[arg(long)]
        config: std::path::PathBuf,
        /// Output feature table.
        #[arg(long, default_value = "features.csv")]
        out: std::path::PathBuf,
    },
    /// Extract only the per-band deformation features.
    ExtractDeform {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long, default_value = "features.csv")]
        out: std::path::PathBuf,
    },
    /// Extract only the texture features of the lesion compartments.
    ExtractCollage {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long, default_value = "features.csv")]
        out: std::path::PathBuf,
        /// Also export per-subject orientation and statistic maps here.
        #[arg(long)]
        export_maps: Option<std::path::PathBuf>,
    },
    /// Fit a LASSO-Cox model and risk threshold on a training cohort.
    Fit {
        #[arg(long)]
        features: std::path::PathBuf,
        #[arg(long)]
        survival: std::path::PathBuf,
        #[arg(long)]
        out_dir: std::path::PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explicit comma-separated penalty grid ("inf" allowed); overrides
        /// the automatic grid.
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long, default_value_t = 50)]
        lambda_count: usize,
        #[arg(long, default_value_t = 1e-3)]
        lambda_min_ratio: f64,
        /// Comma-separated covariates exempt from the penalty.
        #[arg(long)]
        unpenalized: Option<String>,
    },
    /// Apply a frozen model to a cohort and report its statistics.
    Evaluate {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        features: std::path::PathBuf,
        #[arg(long)]
        survival: std::path::PathBuf,
        #[arg(long)]
        out_dir: std::path::PathBuf,
    },
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<rdepth_core::Error> for CliError {
    fn from(e: rdepth_core::Error) -> Self {
        CliError::data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Stderr logger, human text or JSON lines.
#[derive(Debug, Clone, Copy)]
pub struct Logger {
    json: bool,
}

impl Logger {
    fn emit(&self, level: &str, msg: &str) {
        if self.json {
            eprintln!(
                "{}",
                serde_json::json!({ "level": level, "msg": msg })
            );
        } else {
            eprintln!("{level}: {msg}");
        }
    }

    pub fn info(&self, msg: &str) {
        self.emit("info", msg);
    }

    pub fn warn(&self, msg: &str) {
        self.emit("warn", msg);
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    }
    let log = Logger { json: cli.log_json };

    match cli.command {
        Command::Synth { spec, out_dir } => commands::synth::run(&spec, &out_dir, log),
        Command::Extract { config, out } => {
            commands::extract::run(&config, &out, commands::extract::Mode::Full, None, log)
        }
        Command::ExtractDeform { config, out } => {
            commands::extract::run(&config, &out, commands::extract::Mode::DeformOnly, None, log)
        }
        Command::ExtractCollage {
            config,
            out,
            export_maps,
        } => commands::extract::run(
            &config,
            &out,
            commands::extract::Mode::CollageOnly,
            export_maps.as_deref(),
            log,
        ),
        Command::Fit {
            features,
            survival,
            out_dir,
            folds,
            seed,
            lambdas,
            lambda_count,
            lambda_min_ratio,
            unpenalized,
        } => commands::fit::run(commands::fit::FitArgs {
            features,
            survival,
            out_dir,
            folds,
            seed,
            lambdas,
            lambda_count,
            lambda_min_ratio,
            unpenalized,
            log,
        }),
        Command::Evaluate {
            model,
            features,
            survival,
            out_dir,
        } => commands::evaluate::run(&model, &features, &survival, &out_dir, log),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
