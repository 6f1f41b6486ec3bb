//! Closed-form stability bounds for the surrogate loss `|θᵀx|^p`, the
//! variance threshold that makes them increasing in α, and its inverse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{digamma, gamma};

/// `1 − p/α` below this triggers a proximity warning.
const POLE_WARNING: f64 = 1e-3;

/// Inputs shared by the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundInputs {
    /// Bound on the data norm.
    pub r: f64,
    /// One-dimensional second moment: `‖X‖² ≤ σ² n`.
    pub sigma2: f64,
    /// Perturbation size: `‖x_i x_iᵀ − x̃_i x̃_iᵀ‖ ≤ 2σ`.
    pub sigma: f64,
    /// Lower bound on the least eigenvalue of `XᵀX/n`.
    pub sigma_min: f64,
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    /// Spectrum of a general noise matrix.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Failure probabilities of the data assumptions; reported, not used.
    pub delta1: f64,
    pub delta2: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            r: 1.0,
            sigma2: 1.0,
            sigma: 1.0,
            sigma_min: 1.0,
            n: 1000,
            p: 1.0,
            alpha: 1.5,
            lambda_min: 1.0,
            lambda_max: 1.0,
            delta1: 0.0,
            delta2: 0.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        positive("R", self.r)?;
        positive("sigma2", self.sigma2)?;
        positive("sigma", self.sigma)?;
        positive("sigma_min", self.sigma_min)?;
        positive("lambda_min", self.lambda_min)?;
        positive("lambda_max", self.lambda_max)?;
        if self.n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        if !(1.0..=2.0).contains(&self.p) {
            return Err(Error::domain(format!("p must lie in [1, 2], got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        if self.lambda_min > self.lambda_max {
            return Err(Error::domain("lambda_min must not exceed lambda_max"));
        }
        for (name, d) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::domain(format!("{name} must be a probability, got {d}")));
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Probability with which the one-dimensional bound holds.
    pub fn confidence(&self) -> f64 {
        (1.0 - self.delta1 - 2.0 * self.delta2).max(0.0)
    }
}

/// Which stability statement applies at `(p, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityRegime {
    /// `p ≥ α < 2`: the expected surrogate loss is infinite.
    Unstable,
    /// `p < α`.
    StableSurrogate,
    /// `p = α = 2`.
    GaussianSquared,
}

pub fn classify_regime(p: f64, alpha: f64) -> StabilityRegime {
    if p == 2.0 && alpha == 2.0 {
        StabilityRegime::GaussianSquared
    } else if p < alpha {
        StabilityRegime::StableSurrogate
    } else {
        StabilityRegime::Unstable
    }
}

/// Regime-dispatched bound value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundValue {
    Finite { value: f64, regime: StabilityRegime },
    Unstable,
}

impl BoundValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            BoundValue::Finite { value, .. } => Some(*value),
            BoundValue::Unstable => None,
        }
    }

    pub fn regime(&self) -> StabilityRegime {
        match self {
            BoundValue::Finite { regime, .. } => *regime,
            BoundValue::Unstable => StabilityRegime::Unstable,
        }
    }
}

/// `Γ(p+1) |cos((p−1)π/2)|`.
fn fourier_factor(p: f64) -> Result<f64> {
    Ok(gamma(p + 1.0)? * ((p - 1.0) * PI / 2.0).cos().abs())
}

/// `(1/α) (1/(α v))^{p/α} Γ(1 − p/α)`, the α-dependent part of the bounds.
pub fn lambda_factor(alpha: f64, p: f64, v: f64) -> Result<f64> {
    let gap = 1.0 - p / alpha;
    if !(gap > 0.0) {
        return Err(Error::domain(format!("need p < alpha, got p = {p}, alpha = {alpha}")));
    }
    if gap < POLE_WARNING {
        log::warn!("alpha = {alpha} is within {gap:.1e} of the pole at p/alpha = 1");
    }
    Ok((1.0 / (alpha * v)).powf(p / alpha) * gamma(gap)? / alpha)
}

/// `log Λ(α)` with `Λ` from [`lambda_factor`].
pub fn log_lambda(alpha: f64, p: f64, v: f64) -> Result<f64> {
    Ok(lambda_factor(alpha, p, v)?.ln())
}

/// `∂_α log Λ(α) = (p/α²)[log α + log v − 1 − α/p + ψ(1 − p/α)]`.
pub fn d_log_lambda(alpha: f64, p: f64, v: f64) -> Result<f64> {
    Ok(p / (alpha * alpha) * (alpha.ln() + v.ln() - 1.0 - alpha / p + digamma(1.0 - p / alpha)?))
}

/// One-dimensional upper bound: `R⁴/(πσ⁴n)` at `p = α = 2`, otherwise
/// `2R^{p+2}/(πσ²n) · Γ(p+1)|cos((p−1)π/2)| · Λ(α)` with `v = σ²`.
pub fn upper_bound_1d(b: &BoundInputs) -> Result<BoundValue> {
    b.validate()?;
    let n = b.n as f64;
    let regime = classify_regime(b.p, b.alpha);
    let value = match regime {
        StabilityRegime::Unstable => return Ok(BoundValue::Unstable),
        StabilityRegime::GaussianSquared => b.r.powi(4) / (PI * b.sigma2 * b.sigma2 * n),
        StabilityRegime::StableSurrogate => {
            2.0 * b.r.powf(b.p + 2.0) / (PI * b.sigma2 * n)
                * fourier_factor(b.p)?
                * lambda_factor(b.alpha, b.p, b.sigma2)?
        }
    };
    Ok(BoundValue::Finite { value, regime })
}

/// Multivariate upper bound: `(2R²/π) σ/(nσ_min)` at `p = α = 2`, otherwise
/// `(8R^p/π) σ/(nα) (1/(ασ_min))^{p/α} Γ(p+1)|cos((p−1)π/2)| Γ(1−p/α)`.
/// With `general_sigma` both are multiplied by `λ_min^p (λ_max/λ_min)^α`.
pub fn upper_bound_dd(b: &BoundInputs, general_sigma: bool) -> Result<BoundValue> {
    b.validate()?;
    let n = b.n as f64;
    let regime = classify_regime(b.p, b.alpha);
    let spectrum = if general_sigma {
        b.lambda_min.powf(b.p) * (b.lambda_max / b.lambda_min).powf(b.alpha)
    } else {
        1.0
    };
    let value = match regime {
        StabilityRegime::Unstable => return Ok(BoundValue::Unstable),
        StabilityRegime::GaussianSquared => 2.0 * b.r * b.r / PI * b.sigma / (n * b.sigma_min),
        StabilityRegime::StableSurrogate => {
            8.0 * b.r.powf(b.p) / PI * b.sigma * fourier_factor(b.p)? * lambda_factor(b.alpha, b.p, b.sigma_min)? / n
        }
    };
    Ok(BoundValue::Finite {
        value: value * spectrum,
        regime,
    })
}

/// Data level above which the bound is increasing on `[α₀, 2)`:
/// `exp(1 + 2/p − log α₀ − ψ(1 − p/α₀))`, lowered by `α₀² log(λ_max/λ_min)`
/// in the exponent when a noise spectrum is given.
pub fn variance_threshold(alpha0: f64, p: f64, spectrum: Option<(f64, f64)>) -> Result<f64> {
    if !(p >= 1.0 && p < alpha0 && alpha0 <= 2.0) {
        return Err(Error::domain(format!(
            "need 1 <= p < alpha0 <= 2, got p = {p}, alpha0 = {alpha0}"
        )));
    }
    let mut e = 1.0 + 2.0 / p - alpha0.ln() - digamma(1.0 - p / alpha0)?;
    if let Some((lmin, lmax)) = spectrum {
        if !(lmin > 0.0 && lmin <= lmax) {
            return Err(Error::domain(
                "noise spectrum must satisfy 0 < lambda_min <= lambda_max",
            ));
        }
        e -= alpha0 * alpha0 * (lmax / lmin).ln();
    }
    Ok(e.exp())
}

/// Result of [`threshold_alpha0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha0 {
    Found(f64),
    NoThreshold,
}

/// Grid points scanned by [`threshold_alpha0`].
pub const THRESHOLD_GRID: usize = 2000;

/// Smallest `α₀ ∈ (p, 2)` with `variance_threshold(α₀, p) ≤ level`: a grid
/// scan followed by bisection inside the first qualifying cell.
pub fn threshold_alpha0(level: f64, p: f64, spectrum: Option<(f64, f64)>) -> Result<Alpha0> {
    if !(level > 0.0) {
        return Err(Error::domain(format!("level must be positive, got {level}")));
    }
    if !(1.0..2.0).contains(&p) {
        return Ok(Alpha0::NoThreshold);
    }
    let lo = p + 1e-6;
    let hi = 2.0 - 1e-9;
    let ok = |a: f64| variance_threshold(a, p, spectrum).map(|t| t <= level);
    let step = (hi - lo) / (THRESHOLD_GRID - 1) as f64;
    let mut prev = None;
    for k in 0..THRESHOLD_GRID {
        let a = lo + step * k as f64;
        if ok(a)? {
            let Some(mut bad) = prev else {
                return Ok(Alpha0::Found(a));
            };
            let mut good = a;
            while good - bad > 1e-13 {
                let mid = 0.5 * (good + bad);
                if ok(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(Alpha0::Found(good));
        }
        prev = Some(a);
    }
    Ok(Alpha0::NoThreshold)
}

/// One-dimensional lower bound
/// `(2|x|^p/π) Γ(p+1)|cos((p+1)π/2)| · δ/(α‖X̂‖²) · (n/(α‖X‖²))^{p/α} Γ(1−p/α)`
/// at probe magnitude `probe` with `‖X‖² = ‖X̂‖² = σ² n`.
pub fn lower_bound_1d(b: &BoundInputs, delta_gap: f64, probe: f64) -> Result<f64> {
    b.validate()?;
    if b.p >= b.alpha {
        return Err(Error::domain(format!(
            "lower bound needs p < alpha, got p = {}, alpha = {}",
            b.p, b.alpha
        )));
    }
    if !(delta_gap >= 0.0) {
        return Err(Error::domain("delta must be non-negative"));
    }
    let norm2 = b.sigma2 * b.n as f64;
    let cos = ((b.p + 1.0) * PI / 2.0).cos().abs();
    Ok(
        2.0 * probe.abs().powf(b.p) / PI * gamma(b.p + 1.0)? * cos * delta_gap / norm2
            * lambda_factor(b.alpha, b.p, b.sigma2)?,
    )
}

/// Outcome of [`monotonicity_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monotonicity {
    pub nondecreasing: bool,
    /// First grid pair `(α_k, α_{k+1})` where the bound drops.
    pub first_violation: Option<(f64, f64)>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates `bound` on a uniform grid of `[lo, hi]` and checks it is
/// nondecreasing.
pub fn monotonicity_scan<F>(bound: F, lo: f64, hi: f64, grid_size: usize) -> Result<Monotonicity>
where
    F: Fn(f64) -> Result<f64>,
{
    if grid_size < 2 {
        return Err(Error::domain("grid needs at least two points"));
    }
    if !(lo < hi) {
        return Err(Error::domain(format!("empty alpha range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|k| lo + step * k as f64).collect();
    let values = grid.iter().map(|&a| bound(a)).collect::<Result<Vec<_>>>()?;
    let first_violation = (1..grid_size)
        .find(|&k| values[k] < values[k - 1])
        .map(|k| (grid[k - 1], grid[k]));
    Ok(Monotonicity {
        nondecreasing: first_violation.is_none(),
        first_violation,
        grid,
        values,
    })
}

/// The one-dimensional bound as a function of α, for scans.
pub fn c_alpha_1d(b: BoundInputs) -> impl Fn(f64) -> Result<f64> {
    move |alpha| {
        upper_bound_1d(&b.with_alpha(alpha))?
            .value()
            .ok_or_else(|| Error::domain(format!("unstable at alpha = {alpha}")))
    }
}

/// JSON form of a bound evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub regime: StabilityRegime,
    pub upper_bound_1d: Option<f64>,
    pub upper_bound_dd: Option<f64>,
    pub upper_bound_dd_general_sigma: Option<f64>,
    pub confidence: f64,
    pub caveat: String,
}

impl BoundReport {
    pub fn new(inputs: BoundInputs) -> Result<Self> {
        let b1 = upper_bound_1d(&inputs)?;
        Ok(Self {
            inputs,
            regime: b1.regime(),
            upper_bound_1d: b1.value(),
            upper_bound_dd: upper_bound_dd(&inputs, false)?.value(),
            upper_bound_dd_general_sigma: upper_bound_dd(&inputs, true)?.value(),
            confidence: inputs.confidence(),
            caveat: format!(
                "the one-dimensional bound holds with probability at least 1 - delta1 - 2*delta2 = {}; \
                 the multivariate bounds hold \"with high probability\", which is not quantified",
                inputs.confidence()
            ),
        })
    }
}
