//! Symmetric α-stable sampling.
//!
//! Scalar draws use the Chambers–Mallows–Stuck transform, positive
//! (totally skewed) draws use Kanter's representation, and rotationally
//! symmetric vectors are built as `σ √(2A) G` with `A` a positive
//! (α/2)-stable variable normalised to `E[e^{-λA}] = e^{-λ^{α/2}}` and `G`
//! a standard Gaussian vector. All laws use the characteristic function
//! `E[e^{i⟨u,X⟩}] = exp(-σ^α ‖u‖^α)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance from α = 1 the CMS transform switches to its limit.
const ALPHA_ONE_GUARD: f64 = 1e-8;

/// Tail index and scale of a symmetric stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    sigma: f64,
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { alpha, sigma })
    }

    /// Unit-scale law with tail index `alpha`.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Target characteristic function `exp(-σ^α |u|^α)` at radius `|u|`.
    pub fn char_fn(&self, u_norm: f64) -> f64 {
        (-(self.sigma * u_norm.abs()).powf(self.alpha)).exp()
    }
}

/// Standard (σ = 1) symmetric stable draw.
fn cms_standard<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.sample::<f64, _>(Open01) - 0.5);
    if (alpha - 1.0).abs() < ALPHA_ONE_GUARD {
        return v.tan();
    }
    let w: f64 = rng.sample(Exp1);
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// One draw of SαS(σ).
pub fn sample_sas_scalar<R: Rng + ?Sized>(params: StableParams, rng: &mut R) -> f64 {
    if params.alpha == 2.0 {
        let g: f64 = rng.sample(StandardNormal);
        return SQRT_2 * params.sigma * g;
    }
    params.sigma * cms_standard(params.alpha, rng)
}

/// Positive stable draw with Laplace transform `E[e^{-λA}] = e^{-λ^{α'}}`.
pub fn sample_skewed_positive_stable<R: Rng + ?Sized>(alpha_prime: f64, rng: &mut R) -> Result<f64> {
    if !(alpha_prime > 0.0 && alpha_prime < 1.0) {
        return Err(Error::domain(format!(
            "positive stable index must lie in (0, 1), got {alpha_prime}"
        )));
    }
    Ok(kanter(alpha_prime, rng))
}

fn kanter<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    let pu = PI * u;
    (a * pu).sin() / pu.sin().powf(1.0 / a) * (((1.0 - a) * pu).sin() / e).powf((1.0 - a) / a)
}

/// Rotationally symmetric α-stable vector in `R^d`.
pub fn sample_isotropic_stable<R: Rng + ?Sized>(d: usize, params: StableParams, rng: &mut R) -> Result<DVector<f64>> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let mut out = DVector::zeros(d);
    fill_isotropic_stable(params, rng, out.as_mut_slice());
    Ok(out)
}

/// Writes one isotropic draw into `out`, avoiding an allocation per step
/// in the simulators.
pub fn fill_isotropic_stable<R: Rng + ?Sized>(params: StableParams, rng: &mut R, out: &mut [f64]) {
    let radial = if params.alpha == 2.0 {
        SQRT_2 * params.sigma
    } else {
        params.sigma * (2.0 * kanter(0.5 * params.alpha, rng)).sqrt()
    };
    for x in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *x = radial * g;
    }
}

/// Sample mean of `e^{i uᵀX}` over the given draws.
pub fn empirical_char_fn(samples: &[DVector<f64>], u: &DVector<f64>) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical characteristic function of an empty sample"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, x) in samples.iter().enumerate() {
        if x.len() != u.len() {
            return Err(Error::shape(format!(
                "sample {j} has dimension {}, frequency has {}",
                x.len(),
                u.len()
            )));
        }
        acc += Complex64::from_polar(1.0, u.dot(x));
    }
    Ok(acc / samples.len() as f64)
}

/// Scalar form of [`empirical_char_fn`].
pub fn empirical_char_fn_scalar(samples: &[f64], u: f64) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical characteristic function of an empty sample"));
    }
    let acc: Complex64 = samples.iter().map(|x| Complex64::from_polar(1.0, u * x)).sum();
    Ok(acc / samples.len() as f64)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
