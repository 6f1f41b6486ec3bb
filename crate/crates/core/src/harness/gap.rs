use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{classify_regime, StabilityRegime};
use crate::error::{Error, Result};
use crate::ou::{default_burn_in, stationary_sample, QuadraticProblem, SimConfig};
use crate::rng::RngStream;
use crate::stationary::NeighborPair;

/// Chain layout for [`empirical_stability_gap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSettings {
    /// Independent chain pairs; the standard error comes from their means.
    pub chains: usize,
    /// Steps between kept iterates; `None` uses `⌈1/(η λ_min)⌉`.
    pub thinning: Option<usize>,
}

impl Default for GapSettings {
    fn default() -> Self {
        Self {
            chains: 20,
            thinning: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGap {
    /// `E f(θ, z) − E f(θ̂, z)`.
    pub mean_diff: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    /// `max_z |E f(θ, z) − E f(θ̂, z)|`.
    pub gap: f64,
    /// Standard error at the maximising probe.
    pub stderr: f64,
    pub probe: usize,
    pub per_probe: Vec<ProbeGap>,
    pub samples: usize,
}

/// Unit coordinate and pairwise-diagonal directions scaled to `r`, followed
/// by the two differing rows of `pair`.
pub fn default_probes(pair: &NeighborPair, r: f64) -> DMatrix<f64> {
    let d = pair.d();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = r;
        rows.push(e);
    }
    let c = r / 2f64.sqrt();
    for j in 0..d {
        for k in j + 1..d {
            let mut e = DVector::zeros(d);
            e[j] = c;
            e[k] = c;
            rows.push(e.clone());
            e[k] = -c;
            rows.push(e);
        }
    }
    rows.push(pair.row());
    rows.push(pair.row_hat());
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// Monte-Carlo estimate of `max_z |E f(θ, z) − E f(θ̂, z)|` for
/// `f(θ, z) = |θᵀz|^p` under the stationary laws for `X` and `X̂` (zero
/// targets). Each chain pair shares its random stream, so the two laws are
/// sampled with common noise.
pub fn empirical_stability_gap(
    pair: &NeighborPair,
    probes: &DMatrix<f64>,
    p: f64,
    sim: &SimConfig,
    n_mc: usize,
    settings: GapSettings,
    stream: &RngStream,
) -> Result<GapEstimate> {
    if classify_regime(p, sim.alpha) == StabilityRegime::Unstable {
        return Err(Error::Unstable { p, alpha: sim.alpha });
    }
    if probes.ncols() != pair.d() || probes.nrows() == 0 {
        return Err(Error::shape(
            "probe matrix must be non-empty with one column per dimension",
        ));
    }
    if settings.chains < 2 {
        return Err(Error::domain("at least two chains are needed for a standard error"));
    }
    if n_mc < 100 {
        log::warn!("only {n_mc} Monte-Carlo samples; the standard error is unreliable");
    }
    let x = QuadraticProblem::zero_targets(pair.x().clone())?;
    let x_hat = QuadraticProblem::zero_targets(pair.x_hat().clone())?;
    let lmin = x.lambda_min().min(x_hat.lambda_min());
    let thinning = settings
        .thinning
        .unwrap_or_else(|| (1.0 / (sim.eta * lmin)).ceil().max(1.0) as usize);
    let per_chain = n_mc.div_ceil(settings.chains);
    let mut cfg = sim.clone();
    if cfg.burn_in.is_none() {
        let big = usize::MAX / 4;
        let b = default_burn_in(&x, sim.eta, big).max(default_burn_in(&x_hat, sim.eta, big));
        cfg.burn_in = Some(b);
    }
    let m = probes.nrows();
    let chain_means: Vec<Vec<f64>> = (0..settings.chains as u64)
        .into_par_iter()
        .map(|c| -> Result<Vec<f64>> {
            let a = stationary_sample(&x, &cfg, &mut stream.fork(c), per_chain, thinning)?;
            let b = stationary_sample(&x_hat, &cfg, &mut stream.fork(c), per_chain, thinning)?;
            if a.diverged || b.diverged {
                return Err(Error::Accuracy {
                    message: format!("chain {c} overflowed"),
                    estimate: f64::NAN,
                });
            }
            let mut sums = vec![0.0; m];
            for (t, th) in a.samples.iter().zip(&b.samples) {
                let pa = probes * t;
                let pb = probes * th;
                for k in 0..m {
                    sums[k] += pa[k].abs().powf(p) - pb[k].abs().powf(p);
                }
            }
            Ok(sums.into_iter().map(|s| s / per_chain as f64).collect())
        })
        .collect::<Result<_>>()?;
    let c = settings.chains as f64;
    let per_probe: Vec<ProbeGap> = (0..m)
        .map(|k| {
            let mean = chain_means.iter().map(|v| v[k]).sum::<f64>() / c;
            let var = chain_means.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (c - 1.0);
            ProbeGap {
                mean_diff: mean,
                stderr: (var / c).sqrt(),
            }
        })
        .collect();
    let probe = (0..m)
        .max_by(|&i, &j| per_probe[i].mean_diff.abs().total_cmp(&per_probe[j].mean_diff.abs()))
        .unwrap_or(0);
    Ok(GapEstimate {
        gap: per_probe[probe].mean_diff.abs(),
        stderr: per_probe[probe].stderr,
        probe,
        per_probe,
        samples: per_chain * settings.chains,
    })
}
