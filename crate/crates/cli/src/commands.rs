//! Subcommand configurations and their execution.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use levystab::bounds::{threshold_alpha0, variance_threshold, Alpha0, BoundInputs, BoundReport};
use levystab::harness::{
    aggregate_median_iqr, generate_population, render_svg, run_synthetic_sweep, write_aggregate_csv, write_records_csv,
    SweepConfig,
};
use levystab::ou::{default_burn_in, euler_maruyama_run, stationary_sample_chains, QuadraticProblem, SimConfig};
use levystab::stable::{empirical_char_fn, sample_isotropic_stable};
use levystab::stationary::StationaryCharFn;
use levystab::tail::{estimate_tail_index, median_center};
use levystab::{RngStream, StableParams};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{io_error, read_rows, OutDir};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub d: usize,
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            sigma: 1.0,
            d: 1,
            count: 10_000,
            seed: 0,
        }
    }
}

/// Writes `samples.csv` with columns `x_1..x_d`.
pub fn sample(cfg: &SampleConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let params = StableParams::new(cfg.alpha, cfg.sigma)?;
    let mut rng = RngStream::new(cfg.seed);
    let path = out.file("samples.csv");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record((1..=cfg.d).map(|j| format!("x_{j}")))?;
    for _ in 0..cfg.count {
        let v = sample_isotropic_stable(cfg.d, params, &mut rng)?;
        w.write_record(v.iter().map(|x| format!("{x:e}")))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(serde_json::json!({ "samples": cfg.count, "d": cfg.d, "file": path }))
}

/// Least-squares data come from `data` (one row per example) and optional
/// `targets` (one column); without `data`, `n × d` uniform entries on
/// `(−a/2, a/2)` are drawn with zero targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub data: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub header: bool,
    pub a: f64,
    pub d: usize,
    pub n: usize,
    pub eta: f64,
    pub steps: usize,
    pub alpha: f64,
    pub noise_scale: f64,
    pub allow_unstable_step: bool,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            data: None,
            targets: None,
            header: true,
            a: 1.0,
            d: 2,
            n: 100,
            eta: 0.01,
            steps: 1000,
            alpha: 1.5,
            noise_scale: 1.0,
            allow_unstable_step: false,
            seed: 0,
        }
    }
}

fn load_problem(cfg: &SimulateConfig, rng: &mut RngStream) -> Result<QuadraticProblem, CliError> {
    let x = match &cfg.data {
        Some(path) => {
            let rows = read_rows(path, cfg.header)?;
            DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
        }
        None => generate_population(cfg.a, cfg.d, cfg.n, rng)?,
    };
    let y = match &cfg.targets {
        Some(path) => {
            let rows = read_rows(path, cfg.header)?;
            if rows[0].len() != 1 {
                return Err(CliError::Validation(format!(
                    "{} must have exactly one column",
                    path.display()
                )));
            }
            DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0]))
        }
        None => DVector::zeros(x.nrows()),
    };
    Ok(QuadraticProblem::new(x, y)?)
}

/// Writes `trajectory.csv` with columns `step, theta_1..theta_d`.
pub fn simulate(cfg: &SimulateConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let stream = RngStream::new(cfg.seed);
    let problem = load_problem(cfg, &mut stream.fork(0))?;
    let mut sim = SimConfig::new(cfg.eta, cfg.steps, cfg.alpha, cfg.noise_scale);
    sim.allow_unstable_step = cfg.allow_unstable_step;
    let traj = euler_maruyama_run(&problem, &sim, &DVector::zeros(problem.d()), &mut stream.fork(1))?;
    let path = out.file("trajectory.csv");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    traj.write_csv(BufWriter::new(file))?;
    let last = traj.iterates.last().map(|t| t.iter().copied().collect::<Vec<_>>());
    Ok(serde_json::json!({
        "steps": traj.iterates.len() - 1,
        "diverged": traj.diverged,
        "final": last,
        "lambda_min": problem.lambda_min(),
        "lambda_max": problem.lambda_max(),
        "file": path,
    }))
}

/// Writes `bounds.json`.
pub fn bounds(cfg: &BoundInputs, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let report = BoundReport::new(*cfg)?;
    let json = serde_json::to_value(&report).expect("report serialises");
    out.write("bounds.json", &serde_json::to_vec_pretty(&json).expect("json"))?;
    Ok(json)
}

/// `alpha0` gives the data level for that α₀; `level` gives the smallest α₀
/// whose threshold the level meets. Either or both may be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub p: f64,
    pub alpha0: Option<f64>,
    pub level: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            alpha0: Some(1.5),
            level: None,
            lambda_min: None,
            lambda_max: None,
        }
    }
}

/// Writes `threshold.json`.
pub fn threshold(cfg: &ThresholdConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let spectrum = match (cfg.lambda_min, cfg.lambda_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(CliError::Validation(
                "set both lambda_min and lambda_max, or neither".into(),
            ))
        }
    };
    if cfg.alpha0.is_none() && cfg.level.is_none() {
        return Err(CliError::Validation("set alpha0, level, or both".into()));
    }
    let mut json = serde_json::json!({ "p": cfg.p, "spectrum": spectrum });
    if let Some(a0) = cfg.alpha0 {
        json["alpha0"] = a0.into();
        json["variance_threshold"] = variance_threshold(a0, cfg.p, spectrum)?.into();
    }
    if let Some(level) = cfg.level {
        json["level"] = level.into();
        json["alpha0_for_level"] = match threshold_alpha0(level, cfg.p, spectrum)? {
            Alpha0::Found(a) => a.into(),
            Alpha0::NoThreshold => serde_json::Value::Null,
        };
    }
    out.write("threshold.json", &serde_json::to_vec_pretty(&json).expect("json"))?;
    Ok(json)
}

/// Writes `records.csv`, `aggregate.csv` and one `plot_a{a}_d{d}.svg` per
/// grid cell.
pub fn sweep(cfg: &SweepConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let records = run_synthetic_sweep(cfg)?;
    let path = out.file("records.csv");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    write_records_csv(&records, BufWriter::new(file))?;
    let rows = aggregate_median_iqr(&records);
    let path = out.file("aggregate.csv");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    write_aggregate_csv(&rows, BufWriter::new(file))?;
    for &a in &cfg.a_grid {
        for &d in &cfg.d_grid {
            out.write(&format!("plot_a{a}_d{d}.svg"), render_svg(&rows, a, d).as_bytes())?;
        }
    }
    let diverged = records.iter().filter(|r| r.diverged).count();
    Ok(serde_json::json!({ "records": records.len(), "diverged": diverged, "aggregate_rows": rows.len() }))
}

/// Reads one vector per CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateTailConfig {
    pub input: Option<PathBuf>,
    pub header: bool,
    pub k1: usize,
    pub k2: usize,
    /// Subtract the coordinate-wise median first.
    pub center: bool,
}

impl Default for EstimateTailConfig {
    fn default() -> Self {
        Self {
            input: None,
            header: true,
            k1: 100,
            k2: 100,
            center: false,
        }
    }
}

/// Writes `tail.json` with `alpha_hat`, `K1`, `K2`.
pub fn estimate_tail(cfg: &EstimateTailConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Validation("estimate-tail needs an input CSV (--input)".into()))?;
    let rows = read_rows(path, cfg.header)?;
    let mut vectors: Vec<DVector<f64>> = rows.into_iter().map(DVector::from_vec).collect();
    if cfg.center {
        vectors = median_center(&vectors)?;
    }
    let e = estimate_tail_index(&vectors, cfg.k1, cfg.k2)?;
    let json = serde_json::json!({
        "alpha_hat": e.alpha_hat,
        "K1": e.k1,
        "K2": e.k2,
        "samples_used": e.sample_count_used,
    });
    out.write("tail.json", &serde_json::to_vec_pretty(&json).expect("json"))?;
    Ok(json)
}

/// Compares the stationary characteristic function of the OU process with
/// `A = λI`, `Σ = I` against the empirical one of simulated chains, along
/// the first coordinate axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyCharfnConfig {
    pub alpha: f64,
    pub d: usize,
    pub lambda: f64,
    pub eta: f64,
    pub chains: usize,
    pub samples_per_chain: usize,
    pub thinning: usize,
    pub burn_in: Option<usize>,
    pub u_max: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for VerifyCharfnConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            d: 1,
            lambda: 1.0,
            eta: 0.01,
            chains: 10,
            samples_per_chain: 1000,
            thinning: 99,
            burn_in: None,
            u_max: 3.0,
            points: 25,
            seed: 0,
        }
    }
}

/// Writes `charfn.csv` with columns `u, analytic, empirical, abs_diff`.
pub fn verify_charfn(cfg: &VerifyCharfnConfig, out: &mut OutDir) -> Result<serde_json::Value, CliError> {
    if cfg.points < 2 || !(cfg.u_max > 0.0) {
        return Err(CliError::Validation("need points >= 2 and u_max > 0".into()));
    }
    if !(cfg.lambda > 0.0) || cfg.d == 0 {
        return Err(CliError::Validation("need lambda > 0 and d >= 1".into()));
    }
    // X = sqrt(λd)·I_d has XᵀX/d = λI.
    let x = DMatrix::identity(cfg.d, cfg.d) * (cfg.lambda * cfg.d as f64).sqrt();
    let problem = QuadraticProblem::zero_targets(x)?;
    let burn_in = cfg
        .burn_in
        .unwrap_or_else(|| default_burn_in(&problem, cfg.eta, usize::MAX / 4));
    let sim = SimConfig::new(cfg.eta, 1, cfg.alpha, 1.0).with_burn_in(burn_in);
    let s = stationary_sample_chains(
        &problem,
        &sim,
        &RngStream::new(cfg.seed),
        cfg.chains,
        cfg.samples_per_chain,
        cfg.thinning,
    )?;
    if s.diverged {
        return Err(CliError::Numerical("a simulated chain overflowed".into()));
    }
    let sc = StationaryCharFn::isotropic(cfg.d, cfg.lambda, cfg.alpha)?;
    let path = out.file("charfn.csv");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["u", "analytic", "empirical", "abs_diff"])?;
    let mut worst: f64 = 0.0;
    for k in 0..cfg.points {
        let t = -cfg.u_max + 2.0 * cfg.u_max * k as f64 / (cfg.points - 1) as f64;
        let mut u = DVector::zeros(cfg.d);
        u[0] = t;
        let analytic = sc.eval(&u)?;
        let e = empirical_char_fn(&s.samples, &u)?;
        let diff = (e.re - analytic).hypot(e.im);
        worst = worst.max(diff);
        w.write_record([
            t.to_string(),
            format!("{analytic:e}"),
            format!("{:e}", e.re),
            format!("{diff:e}"),
        ])?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(serde_json::json!({ "samples": s.samples.len(), "max_abs_diff": worst, "file": path }))
}
