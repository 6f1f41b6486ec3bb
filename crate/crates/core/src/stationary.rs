//! Stationary law of the Lévy-driven OU process and bounds on how far two
//! neighbouring datasets move its characteristic function.
//!
//! The stationary characteristic function is
//! `exp(−∫₀^∞ ‖Σᵀ e^{−sA} u‖^α ds)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ou::symmetrize;
use crate::quad::{geometric_breaks, integrate_with_breaks};
use crate::stable::StableParams;

/// Integrand tail omitted beyond the truncation horizon.
pub const TAIL_TOLERANCE: f64 = 1e-13;

/// Quadrature settings for [`StationaryCharFn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub tail_tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 4000,
            tail_tol: TAIL_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone)]
enum Noise {
    /// `Σ = cI`.
    Scalar(f64),
    /// `ΣᵀQ`, applied to `e^{−sΛ}Qᵀu`.
    Rotated(DMatrix<f64>),
}

/// Characteristic function of the stationary law for drift `A` and noise `Σ`.
#[derive(Debug, Clone)]
pub struct StationaryCharFn {
    q: DMatrix<f64>,
    lambda: DVector<f64>,
    sigma: DMatrix<f64>,
    noise: Noise,
    sigma_norm: f64,
    alpha: f64,
    settings: QuadSettings,
}

impl StationaryCharFn {
    pub fn new(a: &DMatrix<f64>, sigma: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        Self::with_settings(a, sigma, alpha, QuadSettings::default())
    }

    pub fn with_settings(a: &DMatrix<f64>, sigma: &DMatrix<f64>, alpha: f64, settings: QuadSettings) -> Result<Self> {
        StableParams::standard(alpha)?;
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(Error::shape(format!(
                "drift must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if sigma.shape() != (d, d) {
            return Err(Error::shape(format!(
                "noise matrix is {}x{}, drift is {d}x{d}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if a.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite entries in drift or noise matrix"));
        }
        let mut sym = a.clone();
        symmetrize(&mut sym);
        let eig = SymmetricEigen::new(sym);
        let lmin = eig.eigenvalues.min();
        if !(lmin > 0.0) {
            return Err(Error::domain(format!(
                "drift must be positive definite, smallest eigenvalue is {lmin:e}"
            )));
        }
        let noise = match scalar_multiple_of_identity(sigma) {
            Some(c) => Noise::Scalar(c.abs()),
            None => Noise::Rotated(sigma.tr_mul(&eig.eigenvectors)),
        };
        let sigma_norm = sigma.clone().svd(false, false).singular_values.max();
        Ok(Self {
            q: eig.eigenvectors,
            lambda: eig.eigenvalues,
            sigma: sigma.clone(),
            noise,
            sigma_norm,
            alpha,
            settings,
        })
    }

    /// `A = I·lambda`, `Σ = I`.
    pub fn isotropic(d: usize, lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(&(DMatrix::identity(d, d) * lambda), &DMatrix::identity(d, d), alpha)
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn noise_matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Horizon `T` beyond which the integrand's tail is below the tolerance.
    fn horizon(&self, u_norm: f64) -> f64 {
        let rate = self.alpha * self.lambda.min();
        let k = (self.sigma_norm * u_norm).powf(self.alpha);
        let ratio = k / (rate * self.settings.tail_tol);
        if ratio <= 1.0 {
            // Still integrate a few time constants so tiny integrals keep
            // their relative accuracy.
            return 5.0 / rate;
        }
        (ratio.ln() / rate).max(5.0 / rate)
    }

    /// `∫₀^∞ ‖Σᵀ e^{−sA} u‖^α ds` and its error estimate (quadrature plus tail).
    pub fn exponent(&self, u: &DVector<f64>) -> Result<(f64, f64)> {
        if u.len() != self.dim() {
            return Err(Error::shape(format!(
                "u has dimension {}, expected {}",
                u.len(),
                self.dim()
            )));
        }
        let u_norm = u.norm();
        if u_norm == 0.0 {
            return Ok((0.0, 0.0));
        }
        let w = self.q.tr_mul(u);
        let alpha = self.alpha;
        let lambda = &self.lambda;
        let integrand = |s: f64| -> f64 {
            let v = DVector::from_fn(w.len(), |j, _| (-s * lambda[j]).exp() * w[j]);
            match &self.noise {
                Noise::Scalar(c) => (c * v.norm()).powf(alpha),
                Noise::Rotated(m) => (m * v).norm().powf(alpha),
            }
        };
        let t = self.horizon(u_norm);
        let fastest = 1.0 / (alpha * self.lambda.max());
        let breaks = geometric_breaks(0.25 * fastest, t, 2.0);
        let r = integrate_with_breaks(
            integrand,
            0.0,
            t,
            &breaks,
            self.settings.abs_tol,
            self.settings.rel_tol,
            self.settings.max_intervals,
        );
        let rate = alpha * self.lambda.min();
        let tail = (self.sigma_norm * u_norm).powf(alpha) * (-rate * t).exp() / rate;
        let err = r.abs_error + tail;
        if !r.converged || !r.value.is_finite() {
            return Err(Error::Accuracy {
                message: format!(
                    "stationary exponent quadrature did not converge in {} panels",
                    r.intervals
                ),
                estimate: r.value,
            });
        }
        Ok((r.value, err))
    }

    /// Value of the characteristic function at `u`, in `(0, 1]`.
    pub fn eval(&self, u: &DVector<f64>) -> Result<f64> {
        let (e, _) = self.exponent(u)?;
        Ok((-e).exp())
    }
}

fn scalar_multiple_of_identity(m: &DMatrix<f64>) -> Option<f64> {
    let c = m[(0, 0)];
    let ok = m
        .iter()
        .enumerate()
        .all(|(k, v)| if k % (m.nrows() + 1) == 0 { *v == c } else { *v == 0.0 });
    ok.then_some(c)
}

/// Free-function form of [`StationaryCharFn::eval`].
pub fn char_fn_stationary(sc: &StationaryCharFn, u: &DVector<f64>) -> Result<f64> {
    sc.eval(u)
}

/// Location `δ/s` and scale `(αs)^{−1/α}` of the one-dimensional stationary
/// law, with `s = (1/n)Σx_i²` and `δ = (1/n)Σx_i y_i`.
pub fn stationary_1d_params(x: &[f64], y: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::shape(format!("{} inputs and {} targets", x.len(), y.len())));
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::domain(format!(
            "explicit stationary law requires alpha in (1, 2], got {alpha}"
        )));
    }
    let n = x.len() as f64;
    let s = x.iter().map(|v| v * v).sum::<f64>() / n;
    let delta = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
    if !(s > 0.0) {
        return Err(Error::degenerate("all inputs are zero, s = 0"));
    }
    Ok((delta / s, (alpha * s).powf(-1.0 / alpha)))
}

/// Eigenvalues `σ₁ ≥ 0 ≥ σ₂` of `x xᵀ − x̃ x̃ᵀ`, computed in span{x, x̃}.
pub fn rank2_eigenvalues(x: &DVector<f64>, x_tilde: &DVector<f64>) -> (f64, f64) {
    let a = x.norm_squared();
    let b = x_tilde.norm_squared();
    let c = x.dot(x_tilde);
    // Half the spread: sqrt(((a+b)/2)² − c²) = ‖x−x̃‖‖x+x̃‖/2.
    let r = 0.5 * (x - x_tilde).norm() * (x + x_tilde).norm();
    let m = 0.5 * (a - b);
    let det = c * c - a * b;
    let (hi, lo) = if m >= 0.0 {
        let hi = m + r;
        (hi, if hi > 0.0 { det / hi } else { 0.0 })
    } else {
        let lo = m - r;
        (det / lo, lo)
    };
    (hi.max(0.0), lo.min(0.0))
}

/// Two datasets that differ in exactly one row.
#[derive(Debug, Clone)]
pub struct NeighborPair {
    x: DMatrix<f64>,
    x_hat: DMatrix<f64>,
    index: usize,
    sigma1: f64,
    sigma2: f64,
    sigma_min: f64,
}

impl NeighborPair {
    pub fn new(x: DMatrix<f64>, x_hat: DMatrix<f64>) -> Result<Self> {
        if x.shape() != x_hat.shape() {
            return Err(Error::shape("neighbour datasets must have equal shapes"));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::shape("datasets must be non-empty"));
        }
        let differing: Vec<usize> = (0..x.nrows()).filter(|&i| x.row(i) != x_hat.row(i)).collect();
        let index = match differing.as_slice() {
            [] => 0,
            [i] => *i,
            _ => {
                return Err(Error::shape(format!(
                    "datasets differ in {} rows, expected one",
                    differing.len()
                )))
            }
        };
        Ok(Self::assemble(x, x_hat, index))
    }

    /// Replaces row `index` of `x` by `row`.
    pub fn replace_row(x: DMatrix<f64>, index: usize, row: &DVector<f64>) -> Result<Self> {
        if index >= x.nrows() || row.len() != x.ncols() {
            return Err(Error::shape("replacement row does not fit the dataset"));
        }
        let mut x_hat = x.clone();
        x_hat.set_row(index, &row.transpose());
        Ok(Self::assemble(x, x_hat, index))
    }

    fn assemble(x: DMatrix<f64>, x_hat: DMatrix<f64>, index: usize) -> Self {
        let xi = x.row(index).transpose();
        let xt = x_hat.row(index).transpose();
        let (sigma1, sigma2) = rank2_eigenvalues(&xi, &xt);
        let sigma_min = gram_min_eigenvalue(&x).min(gram_min_eigenvalue(&x_hat));
        Self {
            x,
            x_hat,
            index,
            sigma1,
            sigma2,
            sigma_min,
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn x_hat(&self) -> &DMatrix<f64> {
        &self.x_hat
    }

    /// Index of the differing row (0 when the datasets are identical).
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self) -> DVector<f64> {
        self.x.row(self.index).transpose()
    }

    pub fn row_hat(&self) -> DVector<f64> {
        self.x_hat.row(self.index).transpose()
    }

    /// `(σ₁, σ₂)` from [`rank2_eigenvalues`].
    pub fn rank2(&self) -> (f64, f64) {
        (self.sigma1, self.sigma2)
    }

    /// Smaller of the least eigenvalues of `XᵀX/n` and `X̂ᵀX̂/n`.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `A = XᵀX/n` and `Â = X̂ᵀX̂/n`.
    pub fn drifts(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n() as f64;
        (self.x.tr_mul(&self.x) / n, self.x_hat.tr_mul(&self.x_hat) / n)
    }

    /// `|ψ_θ(u) − ψ_θ̂(u)|` by quadrature, noise `Σ`.
    pub fn exact_difference(&self, alpha: f64, sigma: &DMatrix<f64>, u: &DVector<f64>) -> Result<f64> {
        let (a, a_hat) = self.drifts();
        let f = StationaryCharFn::new(&a, sigma, alpha)?;
        let g = StationaryCharFn::new(&a_hat, sigma, alpha)?;
        Ok((f.eval(u)? - g.eval(u)?).abs())
    }
}

pub(crate) fn gram_min_eigenvalue(x: &DMatrix<f64>) -> f64 {
    let mut g = x.tr_mul(x) / x.nrows() as f64;
    symmetrize(&mut g);
    SymmetricEigen::new(g).eigenvalues.min()
}

/// Which dataset plays the role of `X` in the one-dimensional bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// The exponent uses the larger of `‖X‖²`, `‖X̂‖²`; valid for either order.
    LargerNorm,
    /// As given: `(X, X̂)` in the pair's order.
    AsGiven,
}

/// One-dimensional bound
/// `(|x_i² − x̃_i²| / ‖X̂‖²) · t · e^{−t}`, `t = |u|^α n / (α‖X‖²)`.
pub fn char_fn_diff_bound_1d(pair: &NeighborPair, alpha: f64, u: f64, orientation: Orientation) -> Result<f64> {
    if pair.d() != 1 {
        return Err(Error::shape(format!("one-dimensional bound given d = {}", pair.d())));
    }
    StableParams::standard(alpha)?;
    let nx = pair.x.norm_squared();
    let nh = pair.x_hat.norm_squared();
    if !(nx > 0.0 && nh > 0.0) {
        return Err(Error::degenerate("dataset with zero norm"));
    }
    let (nx, nh) = match orientation {
        Orientation::LargerNorm if nh > nx => (nh, nx),
        _ => (nx, nh),
    };
    let xi = pair.row()[0];
    let xt = pair.row_hat()[0];
    let t = u.abs().powf(alpha) * pair.n() as f64 / (alpha * nx);
    Ok((xi * xi - xt * xt).abs() / nh * t * (-t).exp())
}

/// Noise shape for the multivariate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseShape {
    Identity,
    /// General positive definite `Σ` with the given extreme eigenvalues.
    General {
        lambda_min: f64,
        lambda_max: f64,
    },
}

/// Multivariate bound
/// `2(|σ₁|+|σ₂|)‖u‖^α / (nασ_min) · exp(−‖u‖^α / (ασ_min))`; the general
/// form multiplies by `λ_max^α` and puts `λ_min^α` into the exponent.
pub fn char_fn_diff_bound_dd(pair: &NeighborPair, alpha: f64, u: &DVector<f64>, noise: NoiseShape) -> Result<f64> {
    StableParams::standard(alpha)?;
    if u.len() != pair.d() {
        return Err(Error::shape(format!("u has dimension {}, data {}", u.len(), pair.d())));
    }
    let smin = pair.sigma_min;
    if !(smin > 0.0) {
        return Err(Error::degenerate(format!("sigma_min = {smin:e} is not positive")));
    }
    let (gain, shrink) = match noise {
        NoiseShape::Identity => (1.0, 1.0),
        NoiseShape::General { lambda_min, lambda_max } => {
            if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
                return Err(Error::domain(
                    "noise spectrum must satisfy 0 < lambda_min <= lambda_max",
                ));
            }
            (lambda_max.powf(alpha), lambda_min.powf(alpha))
        }
    };
    let ua = u.norm().powf(alpha);
    let n = pair.n() as f64;
    let spread = pair.sigma1.abs() + pair.sigma2.abs();
    Ok(gain * 2.0 * spread * ua / (n * alpha * smin) * (-shrink * ua / (alpha * smin)).exp())
}
