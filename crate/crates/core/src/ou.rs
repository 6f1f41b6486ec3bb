//! Euler–Maruyama simulation of Lévy-driven OU dynamics for least squares:
//!
//! `θ_{k+1} = θ_k − η (A θ_k − b) + η^{1/α} Σ E_{k+1}`
//!
//! with `A = XᵀX / n`, `b = Xᵀy / n` and `E_k` rotationally symmetric
//! α-stable with unit scale.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stable::{fill_isotropic_stable, StableParams};

/// Iterates beyond this magnitude are reported as divergence.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Least-squares problem `min_θ (1/2n) Σ (θᵀx_i − y_i)²`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    eigenvalues: DVector<f64>,
}

impl QuadraticProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::shape(format!("data matrix must be non-empty, got {n}x{d}")));
        }
        if y.len() != n {
            return Err(Error::shape(format!("{} targets for {n} rows", y.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("data contain non-finite values"));
        }
        let inv_n = 1.0 / n as f64;
        let mut a = x.tr_mul(&x) * inv_n;
        symmetrize(&mut a);
        let b = x.tr_mul(&y) * inv_n;
        let eigenvalues = SymmetricEigen::new(a.clone()).eigenvalues;
        Ok(Self {
            x,
            y,
            a,
            b,
            eigenvalues,
        })
    }

    /// Problem with all targets zero.
    pub fn zero_targets(x: DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        Self::new(x, DVector::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.y
    }

    /// Drift matrix `A = XᵀX / n`.
    pub fn drift(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `b = Xᵀy / n`.
    pub fn offset(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.max()
    }

    /// `(1/2n) Σ (θᵀx_i − y_i)²`.
    pub fn empirical_risk(&self, theta: &DVector<f64>) -> f64 {
        let r = &self.x * theta - &self.y;
        0.5 * r.norm_squared() / self.n() as f64
    }

    /// Gradient of [`Self::empirical_risk`], `Aθ − b`.
    pub fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.a * theta - &self.b
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Discretisation and noise settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eta: f64,
    pub steps: usize,
    /// `None` picks `10 / (η λ_min)` capped at `steps − 1`.
    pub burn_in: Option<usize>,
    pub alpha: f64,
    /// `None` means the identity.
    pub noise_matrix: Option<DMatrix<f64>>,
    /// Multiplies the noise matrix.
    pub noise_scale: f64,
    /// Accept `η λ_max ≥ 2`, where even the noiseless recursion diverges.
    pub allow_unstable_step: bool,
}

impl SimConfig {
    pub fn new(eta: f64, steps: usize, alpha: f64, noise_scale: f64) -> Self {
        Self {
            eta,
            steps,
            burn_in: None,
            alpha,
            noise_matrix: None,
            noise_scale,
            allow_unstable_step: false,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn with_noise_matrix(mut self, sigma: DMatrix<f64>) -> Self {
        self.noise_matrix = Some(sigma);
        self
    }

    pub fn validate(&self, problem: &QuadraticProblem) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::domain(format!("step size must be positive, got {}", self.eta)));
        }
        if self.steps == 0 {
            return Err(Error::domain("step count must be positive"));
        }
        if let Some(b) = self.burn_in {
            if b >= self.steps {
                return Err(Error::domain(format!(
                    "burn-in {b} must be smaller than the step count {}",
                    self.steps
                )));
            }
        }
        StableParams::standard(self.alpha)?;
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::domain(format!(
                "noise scale must be non-negative, got {}",
                self.noise_scale
            )));
        }
        if let Some(s) = &self.noise_matrix {
            let d = problem.d();
            if s.shape() != (d, d) {
                return Err(Error::shape(format!(
                    "noise matrix is {}x{}, problem dimension is {d}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let rate = self.eta * problem.lambda_max();
        if rate >= 2.0 && !self.allow_unstable_step {
            return Err(Error::domain(format!(
                "eta * lambda_max = {rate:.4} >= 2: the noiseless recursion diverges \
                 (set allow_unstable_step to override)"
            )));
        }
        Ok(())
    }

    /// Burn-in actually used for `problem`.
    pub fn effective_burn_in(&self, problem: &QuadraticProblem) -> usize {
        self.burn_in
            .unwrap_or_else(|| default_burn_in(problem, self.eta, self.steps))
    }
}

/// Ten mixing times `1 / (η λ_min)`, capped at `steps − 1`.
pub fn default_burn_in(problem: &QuadraticProblem, eta: f64, steps: usize) -> usize {
    let lmin = problem.lambda_min();
    let cap = steps.saturating_sub(1);
    if lmin <= 0.0 {
        return cap;
    }
    let mix = (10.0 / (eta * lmin)).ceil();
    if mix >= cap as f64 {
        cap
    } else {
        mix as usize
    }
}

/// A simulated path `θ_0, …, θ_steps`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iterates: Vec<DVector<f64>>,
    pub seed: u64,
    pub config: SimConfig,
    /// Set when an iterate overflowed; `iterates` then stops at the last
    /// finite state.
    pub diverged: bool,
}

impl Trajectory {
    /// CSV with columns `step,theta_1,…,theta_d`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.iterates.first().map_or(0, |t| t.len());
        let mut header = vec!["step".to_string()];
        header.extend((1..=d).map(|j| format!("theta_{j}")));
        w.write_record(&header)?;
        for (k, theta) in self.iterates.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(theta.iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Final state of a run that did not keep the path.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub theta: DVector<f64>,
    pub steps_done: usize,
    pub diverged: bool,
}

/// Pre-assembled update `θ ← Mθ + c + scale·Σ E`.
struct Stepper {
    m: DMatrix<f64>,
    c: DVector<f64>,
    noise: Option<DMatrix<f64>>,
    noise_gain: f64,
    params: StableParams,
    e: DVector<f64>,
    next: DVector<f64>,
}

impl Stepper {
    fn new(problem: &QuadraticProblem, config: &SimConfig) -> Result<Self> {
        config.validate(problem)?;
        let d = problem.d();
        let m = DMatrix::identity(d, d) - problem.drift() * config.eta;
        let c = problem.offset() * config.eta;
        Ok(Self {
            m,
            c,
            noise: config.noise_matrix.clone(),
            noise_gain: config.noise_scale * config.eta.powf(1.0 / config.alpha),
            params: StableParams::standard(config.alpha)?,
            e: DVector::zeros(d),
            next: DVector::zeros(d),
        })
    }

    /// Advances `theta` in place; returns false on overflow.
    fn step(&mut self, theta: &mut DVector<f64>, rng: &mut RngStream) -> bool {
        self.next.copy_from(&self.c);
        self.next.gemv(1.0, &self.m, theta, 1.0);
        if self.noise_gain != 0.0 {
            fill_isotropic_stable(self.params, rng, self.e.as_mut_slice());
            match &self.noise {
                None => self.next.axpy(self.noise_gain, &self.e, 1.0),
                Some(s) => self.next.gemv(self.noise_gain, s, &self.e, 1.0),
            }
        }
        std::mem::swap(theta, &mut self.next);
        theta.iter().all(|v| v.is_finite() && v.abs() <= OVERFLOW_LIMIT)
    }
}

fn check_theta0(problem: &QuadraticProblem, theta0: &DVector<f64>) -> Result<()> {
    if theta0.len() != problem.d() {
        return Err(Error::shape(format!(
            "initial point has dimension {}, problem has {}",
            theta0.len(),
            problem.d()
        )));
    }
    Ok(())
}

/// Runs `config.steps` steps and calls `visit(k, θ_k)` after each.
pub fn drive<F: FnMut(usize, &DVector<f64>)>(
    problem: &QuadraticProblem,
    config: &SimConfig,
    theta0: &DVector<f64>,
    rng: &mut RngStream,
    mut visit: F,
) -> Result<RunOutcome> {
    check_theta0(problem, theta0)?;
    let mut stepper = Stepper::new(problem, config)?;
    let mut theta = theta0.clone();
    for k in 1..=config.steps {
        let before = theta.clone();
        if !stepper.step(&mut theta, rng) {
            return Ok(RunOutcome {
                theta: before,
                steps_done: k - 1,
                diverged: true,
            });
        }
        visit(k, &theta);
    }
    Ok(RunOutcome {
        theta,
        steps_done: config.steps,
        diverged: false,
    })
}

/// Final iterate only; the path is not stored.
pub fn run_final(
    problem: &QuadraticProblem,
    config: &SimConfig,
    theta0: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<RunOutcome> {
    check_theta0(problem, theta0)?;
    let mut stepper = Stepper::new(problem, config)?;
    let mut theta = theta0.clone();
    let mut last = theta.clone();
    for k in 1..=config.steps {
        last.copy_from(&theta);
        if !stepper.step(&mut theta, rng) {
            return Ok(RunOutcome {
                theta: last,
                steps_done: k - 1,
                diverged: true,
            });
        }
    }
    Ok(RunOutcome {
        theta,
        steps_done: config.steps,
        diverged: false,
    })
}

/// Full trajectory of the recursion started at `theta0`.
pub fn euler_maruyama_run(
    problem: &QuadraticProblem,
    config: &SimConfig,
    theta0: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    let seed = rng.seed();
    let mut iterates = Vec::with_capacity(config.steps + 1);
    iterates.push(theta0.clone());
    let out = drive(problem, config, theta0, rng, |_, th| iterates.push(th.clone()))?;
    Ok(Trajectory {
        iterates,
        seed,
        config: config.clone(),
        diverged: out.diverged,
    })
}

/// Approximate draws from the stationary law of one chain.
#[derive(Debug, Clone)]
pub struct StationarySample {
    pub samples: Vec<DVector<f64>>,
    pub burn_in: usize,
    pub diverged: bool,
}

/// Runs one chain from zero for `burn_in + n_samples·thinning` steps and
/// keeps every `thinning`-th post-burn-in iterate. The step count of
/// `config` only caps the default burn-in; an explicit burn-in may exceed it.
pub fn stationary_sample(
    problem: &QuadraticProblem,
    config: &SimConfig,
    rng: &mut RngStream,
    n_samples: usize,
    thinning: usize,
) -> Result<StationarySample> {
    if thinning == 0 {
        return Err(Error::domain("thinning must be positive"));
    }
    let burn_in = config
        .burn_in
        .unwrap_or_else(|| default_burn_in(problem, config.eta, config.steps.max(n_samples * thinning)));
    let mut run_cfg = config.clone();
    run_cfg.steps = burn_in + n_samples * thinning;
    run_cfg.burn_in = None;
    if n_samples > 0 {
        run_cfg.validate(problem)?;
    } else {
        SimConfig {
            steps: 1,
            ..run_cfg.clone()
        }
        .validate(problem)?;
    }
    let residual = (-problem.lambda_min() * config.eta * burn_in as f64).exp();
    if residual >= 1e-4 {
        log::warn!(
            "burn-in of {burn_in} steps leaves exp(-lambda_min*eta*burn_in) = {residual:.2e}; \
             samples may not be stationary"
        );
    }
    let theta0 = DVector::zeros(problem.d());
    if n_samples == 0 {
        return Ok(StationarySample {
            samples: Vec::new(),
            burn_in,
            diverged: false,
        });
    }
    let mut samples = Vec::with_capacity(n_samples);
    let out = drive(problem, &run_cfg, &theta0, rng, |k, th| {
        if k > burn_in && (k - burn_in).is_multiple_of(thinning) {
            samples.push(th.clone());
        }
    })?;
    Ok(StationarySample {
        samples,
        burn_in,
        diverged: out.diverged,
    })
}

/// Pools `chains` independent chains, chain `c` driven by `stream.fork(c)`.
/// The result is ordered by chain index, independent of scheduling.
pub fn stationary_sample_chains(
    problem: &QuadraticProblem,
    config: &SimConfig,
    stream: &RngStream,
    chains: usize,
    per_chain: usize,
    thinning: usize,
) -> Result<StationarySample> {
    let parts: Vec<StationarySample> = (0..chains as u64)
        .into_par_iter()
        .map(|c| stationary_sample(problem, config, &mut stream.fork(c), per_chain, thinning))
        .collect::<Result<_>>()?;
    let burn_in = parts.first().map_or(0, |p| p.burn_in);
    let diverged = parts.iter().any(|p| p.diverged);
    let samples = parts.into_iter().flat_map(|p| p.samples).collect();
    Ok(StationarySample {
        samples,
        burn_in,
        diverged,
    })
}

/// Relative changes `|m(2N) − m(N)| / |m(N)|` of the running mean of
/// `values` over the doubling windows `N = start, 2·start, …` that fit in
/// the slice; the last window is the full length.
pub fn doubling_window_changes(values: &[f64], start: usize) -> Vec<f64> {
    let mut ends = Vec::new();
    let mut n = start.max(1);
    while n < values.len() {
        ends.push(n);
        n *= 2;
    }
    ends.push(values.len());
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mean = |n: usize| prefix[n] / n as f64;
    ends.windows(2)
        .map(|w| {
            let (a, b) = (mean(w[0]), mean(w[1]));
            (b - a).abs() / a.abs()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones_problem(n: usize, target: f64) -> QuadraticProblem {
        QuadraticProblem::new(DMatrix::from_element(n, 1, 1.0), DVector::from_element(n, target)).unwrap()
    }

    fn random_problem(n: usize, d: usize, seed: u64) -> QuadraticProblem {
        use rand::Rng;
        let mut rng = RngStream::new(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5);
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>());
        QuadraticProblem::new(x, y).unwrap()
    }

    #[test]
    fn drift_is_symmetric_gram() {
        let p = random_problem(40, 6, 1);
        let a = p.drift();
        let asym = (a - a.transpose()).amax();
        assert!(asym <= 1e-12 * a.amax());
        assert!(p.lambda_min() > 0.0);
    }

    #[test]
    fn rejects_bad_shapes_and_configs() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(QuadraticProblem::new(x.clone(), DVector::zeros(2)).is_err());
        let p = QuadraticProblem::zero_targets(x).unwrap();
        let cfg = SimConfig::new(0.1, 10, 1.5, 1.0);
        let mut rng = RngStream::new(0);
        assert!(matches!(
            euler_maruyama_run(&p, &cfg, &DVector::zeros(3), &mut rng),
            Err(Error::Shape(_))
        ));
        let bad = SimConfig::new(0.1, 10, 1.5, 1.0).with_noise_matrix(DMatrix::identity(3, 3));
        assert!(bad.validate(&p).is_err());
        assert!(SimConfig::new(0.1, 10, 1.5, 1.0).with_burn_in(10).validate(&p).is_err());
        assert!(SimConfig::new(0.1, 10, 2.5, 1.0).validate(&p).is_err());
        // λ_max = 2 here, so η = 1 violates η λ_max < 2.
        let fast = SimConfig::new(1.0, 10, 1.5, 1.0);
        assert!(fast.validate(&p).is_err());
        let mut forced = fast;
        forced.allow_unstable_step = true;
        assert!(forced.validate(&p).is_ok());
    }

    #[test]
    fn noiseless_run_contracts_to_zero() {
        let p = QuadraticProblem::zero_targets(random_problem(50, 4, 2).data().clone()).unwrap();
        let cfg = SimConfig::new(1.0 / p.lambda_max(), 20_000, 1.5, 0.0);
        let theta0 = DVector::from_element(4, 3.0);
        let traj = euler_maruyama_run(&p, &cfg, &theta0, &mut RngStream::new(3)).unwrap();
        assert_eq!(traj.iterates.len(), cfg.steps + 1);
        let norms: Vec<f64> = traj.iterates.iter().map(|t| t.norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
        assert!(*norms.last().unwrap() < 1e-10);
    }

    #[test]
    fn noiseless_step_is_gradient_step() {
        let p = random_problem(30, 5, 4);
        let cfg = SimConfig::new(0.05, 1, 1.3, 0.0);
        let mut rng = RngStream::new(5);
        for trial in 0..20 {
            use rand::Rng;
            let theta = DVector::from_fn(5, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let out = run_final(&p, &cfg, &theta, &mut RngStream::new(trial)).unwrap();
            let want = &theta - p.gradient(&theta) * cfg.eta;
            assert!((out.theta - &want).amax() < 1e-12);
            // Gradient agrees with central differences of the risk.
            let h = 1e-6;
            for j in 0..5 {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += h;
                tm[j] -= h;
                let fd = (p.empirical_risk(&tp) - p.empirical_risk(&tm)) / (2.0 * h);
                assert!((fd - p.gradient(&theta)[j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn gaussian_stationary_variance_is_one() {
        let p = ones_problem(10, 0.0);
        let cfg = SimConfig::new(0.01, 100_000, 2.0, 1.0).with_burn_in(2_000);
        let traj = euler_maruyama_run(&p, &cfg, &DVector::zeros(1), &mut RngStream::new(6)).unwrap();
        let post: Vec<f64> = traj.iterates[2_001..].iter().map(|t| t[0]).collect();
        let mean = post.iter().sum::<f64>() / post.len() as f64;
        let var = post.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / post.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn stationary_median_sits_at_least_squares_solution() {
        let p = ones_problem(10, 3.0);
        let cfg = SimConfig::new(0.01, 100_000, 1.5, 1.0).with_burn_in(2_000);
        let traj = euler_maruyama_run(&p, &cfg, &DVector::zeros(1), &mut RngStream::new(7)).unwrap();
        let mut post: Vec<f64> = traj.iterates[2_001..].iter().map(|t| t[0]).collect();
        post.sort_by(f64::total_cmp);
        let med = post[post.len() / 2];
        assert!((med - 3.0).abs() < 0.1, "median {med}");
    }

    #[test]
    fn brownian_reduction_of_injected_noise() {
        // One step from zero with A ≈ 0 isolates the noise: variance 2·η·c².
        let x = DMatrix::from_element(1, 1, 1e-9);
        let p = QuadraticProblem::zero_targets(x).unwrap();
        let (eta, c) = (0.04, 0.7);
        let cfg = SimConfig::new(eta, 1, 2.0, c);
        let n = 100_000;
        let mut var = 0.0;
        let stream = RngStream::new(8);
        for k in 0..n {
            let out = run_final(&p, &cfg, &DVector::zeros(1), &mut stream.fork(k)).unwrap();
            var += out.theta[0] * out.theta[0];
        }
        var /= n as f64;
        let want = 2.0 * eta * c * c;
        assert!((var - want).abs() / want < 0.03, "{var} vs {want}");
    }

    #[test]
    fn overflow_is_flagged_not_fatal() {
        let p = ones_problem(4, 0.0);
        let mut cfg = SimConfig::new(3.0, 5_000, 2.0, 0.0);
        cfg.allow_unstable_step = true;
        let traj = euler_maruyama_run(&p, &cfg, &DVector::from_element(1, 1.0), &mut RngStream::new(9)).unwrap();
        assert!(traj.diverged);
        assert!(traj.iterates.len() < cfg.steps + 1);
        assert!(traj.iterates.iter().all(|t| t[0].is_finite()));
    }

    #[test]
    fn stationary_sample_edge_cases() {
        let p = ones_problem(4, 0.0);
        let cfg = SimConfig::new(0.01, 10, 1.5, 1.0);
        let s = stationary_sample(&p, &cfg, &mut RngStream::new(1), 0, 1).unwrap();
        assert!(s.samples.is_empty());
        assert!(stationary_sample(&p, &cfg, &mut RngStream::new(1), 3, 0).is_err());
        let s = stationary_sample(&p, &cfg, &mut RngStream::new(1), 25, 4).unwrap();
        assert_eq!(s.samples.len(), 25);
    }

    #[test]
    fn chains_are_schedule_independent() {
        let p = ones_problem(4, 0.0);
        let cfg = SimConfig::new(0.05, 500, 1.5, 1.0);
        let stream = RngStream::new(10);
        let a = stationary_sample_chains(&p, &cfg, &stream, 8, 20, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| stationary_sample_chains(&p, &cfg, &stream, 8, 20, 3).unwrap());
        assert_eq!(a.samples.len(), 160);
        assert!(a
            .samples
            .iter()
            .zip(&b.samples)
            .all(|(x, y)| x[0].to_bits() == y[0].to_bits()));
    }

    #[test]
    fn trajectories_are_bit_identical_by_seed() {
        let p = random_problem(20, 3, 11);
        let cfg = SimConfig::new(0.1, 300, 1.2, 0.5);
        let t1 = euler_maruyama_run(&p, &cfg, &DVector::zeros(3), &mut RngStream::new(12)).unwrap();
        let t2 = euler_maruyama_run(&p, &cfg, &DVector::zeros(3), &mut RngStream::new(12)).unwrap();
        assert!(t1
            .iterates
            .iter()
            .zip(&t2.iterates)
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())));
        assert_eq!(t1.seed, 12);
    }

    #[test]
    fn trajectory_csv_layout() {
        let p = random_problem(5, 2, 13);
        let cfg = SimConfig::new(0.1, 3, 1.5, 1.0);
        let t = euler_maruyama_run(&p, &cfg, &DVector::zeros(2), &mut RngStream::new(1)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,theta_1,theta_2");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0e0,0e0"));
    }

    #[test]
    fn doubling_windows() {
        let v = vec![1.0; 1000];
        let ch = doubling_window_changes(&v, 100);
        assert_eq!(ch.len(), 4);
        assert!(ch.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn fractional_moments_converge_only_below_alpha() {
        // One long chain, s = 1, α = 1.5.
        let p = ones_problem(4, 0.0);
        let cfg = SimConfig::new(0.05, 10, 1.5, 1.0).with_burn_in(400);
        let s = stationary_sample(&p, &cfg, &mut RngStream::new(14), 100_000, 20).unwrap();
        let theta: Vec<f64> = s.samples.iter().map(|t| t[0].abs()).collect();
        let below: Vec<f64> = theta.iter().map(|t| t.powf(0.5)).collect();
        let changes = doubling_window_changes(&below, 1000);
        assert!(changes.iter().all(|c| *c < 0.1), "{changes:?}");
        // Above α a single jump moves the running mean by far more than 10%.
        let above: Vec<f64> = theta.iter().map(|t| t.powi(2)).collect();
        let changes = doubling_window_changes(&above, 1000);
        assert!(changes.iter().any(|c| *c > 0.1), "{changes:?}");
    }
}
