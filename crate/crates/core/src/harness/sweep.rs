use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generalization_error, generate_population, select_rows};
use crate::error::{Error, Result};
use crate::ou::{run_final, QuadraticProblem, SimConfig};
use crate::rng::RngStream;

/// Grid of synthetic experiments. Targets are zero and every run starts at
/// `θ = 0`; the final iterate is the reported draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alpha_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub d_grid: Vec<usize>,
    pub n: usize,
    pub population_size: usize,
    pub replications: usize,
    pub p: f64,
    pub eta: f64,
    pub steps: usize,
    pub noise_scale: f64,
    pub master_seed: u64,
    pub allow_unstable_step: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_grid: (0..10).map(|k| 1.1 + 0.1 * k as f64).collect(),
            a_grid: vec![1.0, 2.0, 4.0, 8.0],
            d_grid: vec![100],
            n: 1000,
            population_size: 100_000,
            replications: 50,
            p: 1.0,
            eta: 0.1,
            steps: 3000,
            noise_scale: 0.1,
            master_seed: 0,
            allow_unstable_step: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() || self.a_grid.is_empty() || self.d_grid.is_empty() {
            return Err(Error::domain("sweep grids must be non-empty"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 2.0)) {
            return Err(Error::domain(format!("alpha {a} outside (0, 2]")));
        }
        if let Some(a) = self.a_grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::domain(format!("data range {a} must be positive")));
        }
        if self.d_grid.contains(&0) {
            return Err(Error::domain("dimensions must be positive"));
        }
        if self.n == 0 || self.n > self.population_size {
            return Err(Error::domain(format!(
                "need 0 < n <= population_size, got n = {}, N = {}",
                self.n, self.population_size
            )));
        }
        if self.replications == 0 {
            return Err(Error::domain("replications must be positive"));
        }
        if !(1.0..=2.0).contains(&self.p) {
            return Err(Error::domain(format!("p must lie in [1, 2], got {}", self.p)));
        }
        if self.steps == 0 {
            return Err(Error::domain("steps must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::domain("eta must be positive"));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::domain("noise_scale must be non-negative"));
        }
        Ok(())
    }

    fn sim_config(&self, alpha: f64) -> SimConfig {
        let mut c = SimConfig::new(self.eta, self.steps, alpha, self.noise_scale);
        c.allow_unstable_step = self.allow_unstable_step;
        c
    }
}

/// One replication at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub alpha: f64,
    pub a: f64,
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub gen_error: f64,
    pub diverged: bool,
}

/// Seed of the population drawn for `(a, d)`.
pub fn population_seed(master_seed: u64, a: f64, d: usize) -> u64 {
    RngStream::child_seed(RngStream::child_seed(master_seed, a.to_bits()), d as u64)
}

/// Seed of replication `rep` at `(a, d)`. It does not depend on α, so every
/// α sees the same resample and the same underlying noise draws.
pub fn replication_seed(master_seed: u64, a: f64, d: usize, rep: usize) -> u64 {
    RngStream::child_seed(population_seed(master_seed, a, d), rep as u64 + 1)
}

fn resample_problem(
    population: &nalgebra::DMatrix<f64>,
    n: usize,
    seed: u64,
) -> Result<(QuadraticProblem, nalgebra::DMatrix<f64>)> {
    let mut rng = RngStream::new(seed).fork(0);
    let size = population.nrows();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..size)).collect();
    let train = select_rows(population, &idx);
    let problem = QuadraticProblem::zero_targets(train.clone())?;
    Ok((problem, train))
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    cfg: &SweepConfig,
    problem: &QuadraticProblem,
    train: &nalgebra::DMatrix<f64>,
    population: &nalgebra::DMatrix<f64>,
    alpha: f64,
    a: f64,
    rep: usize,
    seed: u64,
) -> Result<RunRecord> {
    let d = problem.d();
    let mut noise = RngStream::new(seed).fork(1);
    let out = run_final(problem, &cfg.sim_config(alpha), &DVector::zeros(d), &mut noise)?;
    let gen_error = if out.diverged {
        f64::NAN
    } else {
        generalization_error(&out.theta, train, population, cfg.p)?
    };
    Ok(RunRecord {
        replication: rep,
        alpha,
        a,
        d,
        n: cfg.n,
        p: cfg.p,
        seed,
        gen_error,
        diverged: out.diverged,
    })
}

/// Runs every `(a, d, replication, α)` combination. Records come back in the
/// order `a`, `d`, replication, `α` and are identical for any thread count.
pub fn run_synthetic_sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.a_grid.len() * cfg.d_grid.len() * cfg.replications * cfg.alpha_grid.len());
    for &a in &cfg.a_grid {
        for &d in &cfg.d_grid {
            let mut rng = RngStream::new(population_seed(cfg.master_seed, a, d));
            let population = generate_population(a, d, cfg.population_size, &mut rng)?;
            log::info!("sweep: a = {a}, d = {d}, {} replications", cfg.replications);
            let batches: Vec<Vec<RunRecord>> = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    let seed = replication_seed(cfg.master_seed, a, d, rep);
                    let (problem, train) = resample_problem(&population, cfg.n, seed)?;
                    cfg.alpha_grid
                        .iter()
                        .map(|&alpha| run_one(cfg, &problem, &train, &population, alpha, a, rep, seed))
                        .collect()
                })
                .collect::<Result<_>>()?;
            records.extend(batches.into_iter().flatten());
        }
    }
    Ok(records)
}

/// Recomputes a single record from the sweep configuration and its seed.
pub fn replay_record(cfg: &SweepConfig, record: &RunRecord) -> Result<RunRecord> {
    let mut rng = RngStream::new(population_seed(cfg.master_seed, record.a, record.d));
    let population = generate_population(record.a, record.d, cfg.population_size, &mut rng)?;
    let (problem, train) = resample_problem(&population, cfg.n, record.seed)?;
    run_one(
        cfg,
        &problem,
        &train,
        &population,
        record.alpha,
        record.a,
        record.replication,
        record.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            alpha_grid: vec![1.3, 1.8],
            a_grid: vec![1.0, 3.0],
            d_grid: vec![3],
            n: 50,
            population_size: 400,
            replications: 3,
            steps: 200,
            master_seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_replayable() {
        let cfg = small();
        let r1 = run_synthetic_sweep(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let r2 = pool.install(|| run_synthetic_sweep(&cfg).unwrap());
        assert_eq!(r1.len(), 12);
        assert_eq!(r1, r2);
        for r in &r1 {
            assert_eq!(&replay_record(&cfg, r).unwrap(), r);
        }
    }

    #[test]
    fn noiseless_runs_have_no_generalization_error() {
        let cfg = SweepConfig {
            noise_scale: 0.0,
            steps: 2000,
            ..small()
        };
        for r in run_synthetic_sweep(&cfg).unwrap() {
            assert!(!r.diverged);
            assert!(r.gen_error < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn validation() {
        assert!(SweepConfig {
            alpha_grid: vec![],
            ..small()
        }
        .validate()
        .is_err());
        assert!(SweepConfig { n: 500, ..small() }.validate().is_err());
        assert!(SweepConfig {
            alpha_grid: vec![2.5],
            ..small()
        }
        .validate()
        .is_err());
        assert!(SweepConfig { p: 3.0, ..small() }.validate().is_err());
        assert!(SweepConfig::default().validate().is_ok());
    }

    #[test]
    fn step_rule_is_enforced() {
        // λ_max ≈ a²/12 · (1 + sqrt(d/n))², far beyond 2/η for a = 40.
        let cfg = SweepConfig {
            a_grid: vec![40.0],
            ..small()
        };
        assert!(matches!(run_synthetic_sweep(&cfg), Err(Error::Domain(_))));
    }
}
