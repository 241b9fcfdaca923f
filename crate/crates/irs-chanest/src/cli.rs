//! Command-line entry point: config loading, flag overrides, and dispatch
//! to the experiment pipelines and the validation suite.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime failure. Errors
//! are a single machine-parsable `error: ...` line on stderr.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::crlb::FisherMode;
use crate::error::Error;
use crate::experiments::{
    run_all, run_hist_fit, run_mse_vs_energy, run_mse_vs_length, ExperimentConfig,
};
use crate::rng::Seed;
use crate::signal::LinkId;
use crate::validation::{all_pass, run_validation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Environment variable consulted for the output directory when neither
/// `--out` nor the config file names one.
pub const OUT_DIR_ENV: &str = "IRS_EST_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "irs-chanest",
    version,
    about = "Double-IRS cascaded channel estimation: deterministic simulation pipelines and bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Histogram the cascade magnitude and fit a Rayleigh scale
    HistFit(RunArgs),
    /// Sweep MSE against total pilot block energy at fixed pilot length
    MseEnergy(RunArgs),
    /// Sweep MSE against pilot length at unit per-symbol energy
    MseLength(RunArgs),
    /// Run every pipeline and write summary.json
    All(RunArgs),
    /// Run the full invariant suite; exits 0 only if every check passes
    Validate(ValidateArgs),
}

fn parse_link(s: &str) -> std::result::Result<LinkId, String> {
    s.parse::<u8>()
        .ok()
        .and_then(|v| LinkId::try_from(v).ok())
        .ok_or_else(|| "link must be 1, 2, or 3".to_string())
}

fn parse_fisher_mode(s: &str) -> std::result::Result<FisherMode, String> {
    s.parse::<FisherMode>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file: TOML, JSON, or a previous summary.json; omit or pass
    /// "defaults" for the built-in defaults
    #[arg(long)]
    config: Option<String>,
    /// Master seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (falls back to the config file, then IRS_EST_OUT,
    /// then "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Link under study: 1, 2, or 3
    #[arg(long, value_parser = parse_link)]
    link: Option<LinkId>,
    /// Monte Carlo trials per MSE sweep point
    #[arg(long)]
    trials: Option<usize>,
    /// IRS-1 element count (single pipelines and the MSE sweeps; the
    /// hist-fit sizes inside `all` come from the config's hist_n1 list)
    #[arg(long)]
    n1: Option<usize>,
    /// Prior score mode: magnitude or complex
    #[arg(long, value_parser = parse_fisher_mode)]
    fisher_mode: Option<FisherMode>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Master seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
}

/// Error carrying its exit code; message is printed as one line.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParam(_) | Error::InvalidConfig(_) | Error::ConfigParse { .. } => {
                EXIT_USAGE
            }
            _ => EXIT_RUNTIME,
        };
        CliError {
            code,
            message: e.to_string().replace('\n', " "),
        }
    }
}

fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn runtime_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_RUNTIME,
        message: message.into(),
    }
}

/// Parse `argv` and dispatch. Returns the process exit code; all error text
/// goes to stderr as a single `error: ...` line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprintln!("error: {}", clap_error_line(&e));
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn clap_error_line(e: &clap::Error) -> String {
    let full = e.to_string();
    let line = full
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments");
    format!(
        "{} (run with --help for usage)",
        line.trim_start_matches("error: ")
    )
}

fn execute(cli: Cli) -> std::result::Result<(), CliError> {
    match cli.command {
        Command::HistFit(a) => {
            let cfg = build_config(&a)?;
            let out = run_hist_fit(&cfg).map_err(CliError::from)?;
            println!("wrote {}", out.csv_path.display());
            println!(
                "b_hat = {:.6}, ks_stat = {:.6}, fisher_prior[{}] = {:.6e}",
                out.fit.b_hat, out.fit.ks_stat, out.fisher.mode, out.fisher.value
            );
            Ok(())
        }
        Command::MseEnergy(a) => {
            let cfg = build_config(&a)?;
            let out = run_mse_vs_energy(&cfg).map_err(CliError::from)?;
            println!("wrote {} ({} sweep points)", out.csv_path.display(), out.points.len());
            Ok(())
        }
        Command::MseLength(a) => {
            let cfg = build_config(&a)?;
            let out = run_mse_vs_length(&cfg).map_err(CliError::from)?;
            println!("wrote {} ({} sweep points)", out.csv_path.display(), out.points.len());
            Ok(())
        }
        Command::All(a) => {
            let cfg = build_config(&a)?;
            let summary = run_all(&cfg).map_err(CliError::from)?;
            for p in &summary.pipelines {
                let status = if p.ok { "ok  " } else { "FAIL" };
                let files = p.files.join(", ");
                match &p.error {
                    Some(err) => println!("{status} {} — {err}", p.name),
                    None => println!("{status} {} — {files}", p.name),
                }
            }
            println!("wrote {}", summary.summary_path.display());
            if summary.all_ok() {
                Ok(())
            } else {
                let failed: Vec<&str> = summary
                    .pipelines
                    .iter()
                    .filter(|p| !p.ok)
                    .map(|p| p.name.as_str())
                    .collect();
                Err(runtime_error(format!(
                    "{} of {} pipelines failed: {}",
                    failed.len(),
                    summary.pipelines.len(),
                    failed.join(", ")
                )))
            }
        }
        Command::Validate(a) => {
            let seed = Seed(a.seed.unwrap_or(0));
            let reports = run_validation(seed);
            for r in &reports {
                let status = if r.pass { "PASS" } else { "FAIL" };
                println!("{status}  {:28} {}", r.name, r.detail);
            }
            if all_pass(&reports) {
                println!("validate: all {} checks passed", reports.len());
                Ok(())
            } else {
                let failed = reports.iter().filter(|r| !r.pass).count();
                Err(runtime_error(format!(
                    "validate: {failed} of {} checks failed",
                    reports.len()
                )))
            }
        }
    }
}

fn build_config(a: &RunArgs) -> std::result::Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = Seed(seed);
    }
    if let Some(link) = a.link {
        cfg.link = link;
    }
    if let Some(trials) = a.trials {
        cfg.trials = trials;
    }
    if let Some(n1) = a.n1 {
        cfg.params.n1 = n1;
    }
    if let Some(mode) = a.fisher_mode {
        cfg.fisher_mode = mode;
    }
    if let Some(out) = &a.out {
        cfg.out_dir = Some(out.clone());
    } else if cfg.out_dir.is_none() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out_dir = Some(PathBuf::from(dir));
            }
        }
    }
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

/// Load a config file. TOML and JSON are both accepted, and a previous
/// `summary.json` works directly (its embedded `config` object is used).
fn load_config(path: Option<&str>) -> std::result::Result<ExperimentConfig, CliError> {
    let path = match path {
        None | Some("defaults") => return Ok(ExperimentConfig::default()),
        Some(p) => p,
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read config {path}: {e}")))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        match serde_json::from_str::<ExperimentConfig>(&text) {
            Ok(cfg) => Ok(cfg),
            Err(direct_err) => {
                let value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| usage_error(format!("config {path} is not valid JSON: {e}")))?;
                match value.get("config") {
                    Some(inner) => serde_json::from_value(inner.clone()).map_err(|e| {
                        usage_error(format!("config {path}: embedded config is invalid: {e}"))
                    }),
                    None => Err(usage_error(format!(
                        "config {path} is not a valid config: {direct_err}"
                    ))),
                }
            }
        }
    } else {
        toml::from_str(&text)
            .map_err(|e| usage_error(format!("config {path} is not valid TOML: {e}").replace('\n', " ")))
    }
}
