//! Synthetic experiments: uniform data, surrogate-loss generalisation error,
//! replicated sweeps over `(α, a, d)` and Monte-Carlo stability gaps.

mod gap;
mod report;
mod sweep;

pub use gap::{default_probes, empirical_stability_gap, GapEstimate, GapSettings, ProbeGap};
pub use report::{
    aggregate_by, aggregate_median_iqr, quantile, read_records_csv, render_svg, write_aggregate_csv, write_records_csv,
    AggregateRow, Summary,
};
pub use sweep::{population_seed, replay_record, replication_seed, run_synthetic_sweep, RunRecord, SweepConfig};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// `N×d` matrix of i.i.d. `U(−a/2, a/2)` entries.
pub fn generate_population<R: Rng + ?Sized>(a: f64, d: usize, size: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("range a must be positive, got {a}")));
    }
    // Row-major fill so that the draw order does not depend on the storage
    // layout.
    let mut m = DMatrix::zeros(size, d);
    for i in 0..size {
        for j in 0..d {
            m[(i, j)] = a * (rng.random::<f64>() - 0.5);
        }
    }
    Ok(m)
}

/// `(1/m) Σ |θᵀx_i|^p`.
pub fn surrogate_risk(theta: &DVector<f64>, data: &DMatrix<f64>, p: f64) -> Result<f64> {
    if theta.len() != data.ncols() {
        return Err(Error::shape(format!(
            "theta has dimension {}, data have {} columns",
            theta.len(),
            data.ncols()
        )));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [1, 2], got {p}")));
    }
    if data.nrows() == 0 {
        return Err(Error::shape("no data rows"));
    }
    let proj = data * theta;
    let total: f64 = proj.iter().map(|v| v.abs().powf(p)).sum();
    Ok(total / data.nrows() as f64)
}

/// `|R̂_train(θ) − R̂_population(θ)|` under the surrogate loss.
pub fn generalization_error(
    theta: &DVector<f64>,
    train: &DMatrix<f64>,
    population: &DMatrix<f64>,
    p: f64,
) -> Result<f64> {
    Ok((surrogate_risk(theta, train, p)? - surrogate_risk(theta, population, p)?).abs())
}

/// Rows of `population` at `indices`.
pub(crate) fn select_rows(population: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), population.ncols(), |i, j| population[(indices[i], j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn population_moments_and_support() {
        let mut rng = RngStream::new(1);
        let a = 3.0;
        let n = 100_000;
        let m = generate_population(a, 2, n, &mut rng).unwrap();
        for j in 0..2 {
            let col = m.column(j);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 3.0 * a / (12.0 * n as f64).sqrt());
            assert!((var / (a * a / 12.0) - 1.0).abs() < 0.05);
        }
        let unit = generate_population(1.0, 3, 1000, &mut rng).unwrap();
        assert!(unit.iter().all(|v| v.abs() < 0.5));
        assert!(generate_population(0.0, 3, 10, &mut rng).is_err());
    }

    #[test]
    fn surrogate_risk_cases() {
        let data = DMatrix::from_element(5, 1, 1.0);
        assert_eq!(surrogate_risk(&DVector::zeros(1), &data, 1.0).unwrap(), 0.0);
        let v = surrogate_risk(&DVector::from_element(1, -1.7), &data, 2.0).unwrap();
        assert!((v - 1.7 * 1.7).abs() < 1e-14);
        assert!(surrogate_risk(&DVector::zeros(2), &data, 1.0).is_err());

        let mut rng = RngStream::new(2);
        let data = DMatrix::from_fn(37, 4, |_, _| rng.random::<f64>() - 0.5);
        let theta = DVector::from_fn(4, |_, _| rng.random::<f64>() * 3.0);
        let p = 1.37;
        let mut naive = 0.0;
        for i in 0..37 {
            let mut dot = 0.0;
            for j in 0..4 {
                dot += theta[j] * data[(i, j)];
            }
            naive += dot.abs().powf(p);
        }
        naive /= 37.0;
        let got = surrogate_risk(&theta, &data, p).unwrap();
        assert!((got - naive).abs() < 1e-12 * naive);
    }

    #[test]
    fn generalization_error_cases() {
        let mut rng = RngStream::new(3);
        let pop = generate_population(2.0, 3, 500, &mut rng).unwrap();
        let train = select_rows(&pop, &[1, 4, 4, 7, 100]);
        let theta = DVector::from_row_slice(&[0.3, -1.0, 2.0]);
        assert_eq!(generalization_error(&theta, &pop, &pop, 1.0).unwrap(), 0.0);
        assert_eq!(
            generalization_error(&DVector::zeros(3), &train, &pop, 1.0).unwrap(),
            0.0
        );
        let want = (surrogate_risk(&theta, &train, 1.0).unwrap() - surrogate_risk(&theta, &pop, 1.0).unwrap()).abs();
        assert_eq!(generalization_error(&theta, &train, &pop, 1.0).unwrap(), want);
    }
}
