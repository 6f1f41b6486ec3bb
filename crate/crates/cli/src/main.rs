//! `levystab` command-line front end.
//!
//! Every subcommand reads an optional flat TOML file (`--config`), applies
//! the flags on top, writes its artifacts plus `config.toml` and
//! `manifest.json` into `--out`, and prints a JSON summary on stdout.
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure; errors are
//! reported as JSON on stderr.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levystab::bounds::BoundInputs;
use levystab::harness::SweepConfig;
use serde::Serialize;

use commands::{EstimateTailConfig, SampleConfig, SimulateConfig, ThresholdConfig, VerifyCharfnConfig};
use config::{resolve, OutDir};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<levystab::Error> for CliError {
    fn from(e: levystab::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    fn json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        serde_json::json!({ "error": kind, "message": message, "exit_code": self.code() })
    }
}

#[derive(Parser)]
#[command(
    name = "levystab",
    version,
    about = "Heavy-tailed SGD simulation, stability bounds and tail-index estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML file with the subcommand's keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for artifacts, `config.toml` and `manifest.json`.
    #[arg(long, default_value = "levystab-out")]
    out: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw isotropic symmetric alpha-stable vectors.
    Sample(SampleFlags),
    /// Run the Euler-Maruyama recursion and export the trajectory.
    Simulate(SimulateFlags),
    /// Evaluate the stability upper bounds.
    Bounds(BoundsFlags),
    /// Data-level threshold for monotonicity of the bound in alpha.
    Threshold(ThresholdFlags),
    /// Replicated synthetic generalization-error sweep.
    Sweep(SweepFlags),
    /// Block-sum tail-index estimate from a CSV of vectors.
    EstimateTail(EstimateTailFlags),
    /// Compare analytic and simulated stationary characteristic functions.
    VerifyCharfn(VerifyCharfnFlags),
}

#[derive(Args, Serialize)]
struct SampleFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SimulateFlags {
    /// CSV of feature rows.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    /// Single-column CSV of targets.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    targets: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    header: Option<bool>,
    /// Range of the generated uniform data when no CSV is given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_scale: Option<f64>,
    /// Permit eta * lambda_max >= 2.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    allow_unstable_step: bool,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct BoundsFlags {
    /// Bound on the data norm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    /// Data level ‖X‖²/n in one dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta2: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ThresholdFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    /// Find the smallest alpha0 whose threshold this level meets.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SweepFlags {
    /// Comma-separated tail indices.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_grid: Option<Vec<f64>>,
    /// Comma-separated data ranges.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    a_grid: Option<Vec<f64>>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    d_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    population_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_scale: Option<f64>,
    /// Permit eta * lambda_max >= 2.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    allow_unstable_step: bool,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct EstimateTailFlags {
    /// CSV with one sample vector per row.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    header: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<usize>,
    /// Subtract the coordinate-wise median first.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    center: bool,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct VerifyCharfnFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    /// Drift A = lambda * I.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chains: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples_per_chain: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thinning: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    u_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

fn execute<C, F, R>(
    name: &str,
    flags: &F,
    common: &Common,
    seed_key: Option<&str>,
    seed_of: fn(&C) -> Option<u64>,
    run: R,
) -> Result<serde_json::Value, CliError>
where
    C: serde::de::DeserializeOwned + Serialize,
    F: Serialize,
    R: FnOnce(&C, &mut OutDir) -> Result<serde_json::Value, CliError>,
{
    let seed = match (seed_key, common.seed) {
        (Some(key), Some(s)) => Some((key, s)),
        (None, Some(_)) => return Err(CliError::Validation(format!("{name} takes no seed"))),
        _ => None,
    };
    let cfg: C = resolve(common.config.as_deref(), flags, seed)?;
    let mut out = OutDir::create(&common.out)?;
    let summary = run(&cfg, &mut out)?;
    out.finish(name, seed_of(&cfg), &cfg)?;
    Ok(summary)
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, CliError> {
    match &cli.command {
        Command::Sample(f) => execute(
            "sample",
            f,
            &f.common,
            Some("seed"),
            |c: &SampleConfig| Some(c.seed),
            commands::sample,
        ),
        Command::Simulate(f) => execute(
            "simulate",
            f,
            &f.common,
            Some("seed"),
            |c: &SimulateConfig| Some(c.seed),
            commands::simulate,
        ),
        Command::Bounds(f) => execute("bounds", f, &f.common, None, |_: &BoundInputs| None, commands::bounds),
        Command::Threshold(f) => execute(
            "threshold",
            f,
            &f.common,
            None,
            |_: &ThresholdConfig| None,
            commands::threshold,
        ),
        Command::Sweep(f) => execute(
            "sweep",
            f,
            &f.common,
            Some("master_seed"),
            |c: &SweepConfig| Some(c.master_seed),
            commands::sweep,
        ),
        Command::EstimateTail(f) => execute(
            "estimate-tail",
            f,
            &f.common,
            None,
            |_: &EstimateTailConfig| None,
            commands::estimate_tail,
        ),
        Command::VerifyCharfn(f) => execute(
            "verify-charfn",
            f,
            &f.common,
            Some("seed"),
            |c: &VerifyCharfnConfig| Some(c.seed),
            commands::verify_charfn,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Validation(e.render().to_string().trim().to_string());
            eprintln!("{}", err.json());
            return ExitCode::from(err.code());
        }
    };
    match dispatch(cli) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serialises")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.json());
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let numerical = CliError::from(levystab::Error::Accuracy {
            message: "quadrature".into(),
            estimate: 0.5,
        });
        assert_eq!(numerical.code(), 2);
        assert_eq!(numerical.json()["error"], "numerical");
        let invalid = CliError::from(levystab::Error::Domain("alpha".into()));
        assert_eq!(invalid.code(), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
