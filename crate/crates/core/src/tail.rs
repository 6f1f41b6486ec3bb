//! Block-sum tail-index estimator and the preprocessing used before it.
//!
//! With `K = K₁K₂` samples and block sums `Y_i` of `K₁` consecutive samples,
//! `1/α̂ = (1/log K₁) [(1/K₂) Σ log‖Y_i‖ − (1/K) Σ log‖X_i‖]`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub k1: usize,
    pub k2: usize,
    pub sample_count_used: usize,
}

/// Estimates the tail index from the first `k1·k2` vectors, in order.
pub fn estimate_tail_index(vectors: &[DVector<f64>], k1: usize, k2: usize) -> Result<TailEstimate> {
    if k1 < 2 {
        return Err(Error::domain(format!("K1 must be at least 2, got {k1}")));
    }
    if k2 == 0 {
        return Err(Error::domain("K2 must be positive"));
    }
    let k = k1 * k2;
    if vectors.len() < k {
        return Err(Error::Size(format!("need {k} samples, got {}", vectors.len())));
    }
    let used = &vectors[..k];
    let d = used[0].len();
    let mut log_x = Vec::with_capacity(k);
    for (i, v) in used.iter().enumerate() {
        if v.len() != d {
            return Err(Error::shape(format!(
                "sample {i} has dimension {}, expected {d}",
                v.len()
            )));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::degenerate(format!("sample {i} is the zero vector")));
        }
        log_x.push(norm.ln());
    }
    let mut log_y = Vec::with_capacity(k2);
    for (b, block) in used.chunks(k1).enumerate() {
        let mut y = DVector::zeros(d);
        for v in block {
            y += v;
        }
        let norm = y.norm();
        if norm == 0.0 {
            return Err(Error::degenerate(format!("block sum {b} is the zero vector")));
        }
        log_y.push(norm.ln());
    }
    let inv = (shifted_mean(&log_y) - shifted_mean(&log_x)) / (k1 as f64).ln();
    let alpha_hat = 1.0 / inv;
    if !(alpha_hat.is_finite() && alpha_hat > 0.0) {
        return Err(Error::Accuracy {
            message: format!("tail estimate 1/alpha = {inv} is not positive"),
            estimate: alpha_hat,
        });
    }
    Ok(TailEstimate {
        alpha_hat,
        k1,
        k2,
        sample_count_used: k,
    })
}

/// Mean taken relative to the first value, exact when all values agree.
fn shifted_mean(v: &[f64]) -> f64 {
    let x0 = v[0];
    x0 + v.iter().map(|x| x - x0).sum::<f64>() / v.len() as f64
}

/// Scalar convenience wrapper around [`estimate_tail_index`].
pub fn estimate_tail_index_scalar(samples: &[f64], k1: usize, k2: usize) -> Result<TailEstimate> {
    let v: Vec<DVector<f64>> = samples.iter().map(|&x| DVector::from_element(1, x)).collect();
    estimate_tail_index(&v, k1, k2)
}

/// Mean of the per-group estimates, each group estimated separately.
pub fn grouped_tail_index(groups: &[Vec<DVector<f64>>], k1: usize, k2: usize) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::Size("no groups".into()));
    }
    let mut sum = 0.0;
    for g in groups {
        sum += estimate_tail_index(g, k1, k2)?.alpha_hat;
    }
    Ok(sum / groups.len() as f64)
}

/// Mean of the last `window` iterates.
pub fn ergodic_average(trajectory: &[DVector<f64>], window: usize) -> Result<DVector<f64>> {
    if window == 0 {
        return Err(Error::Size("averaging window is empty".into()));
    }
    if window > trajectory.len() {
        return Err(Error::Size(format!(
            "window {window} exceeds trajectory length {}",
            trajectory.len()
        )));
    }
    let tail = &trajectory[trajectory.len() - window..];
    let mut acc = DVector::zeros(tail[0].len());
    for v in tail {
        acc += v;
    }
    Ok(acc / window as f64)
}

/// Median of `values`, which are sorted in place; even counts average the
/// two central order statistics. `NaN` for an empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Subtracts the coordinate-wise median.
pub fn median_center(samples: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if samples.is_empty() {
        return Err(Error::Size("no samples to center".into()));
    }
    let d = samples[0].len();
    let mut column = vec![0.0; samples.len()];
    let mut med = DVector::zeros(d);
    for j in 0..d {
        for (c, s) in column.iter_mut().zip(samples) {
            *c = s[j];
        }
        med[j] = median(&mut column);
    }
    Ok(samples.iter().map(|s| s - &med).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::stable::{sample_sas_scalar, StableParams};
    use rand::Rng;

    #[test]
    fn constant_vectors_give_one() {
        let v = vec![DVector::from_row_slice(&[0.3, -1.2]); 400];
        let e = estimate_tail_index(&v, 20, 20).unwrap();
        assert!((e.alpha_hat - 1.0).abs() < 1e-12);
        assert_eq!(e.sample_count_used, 400);
        let unit = vec![DVector::from_row_slice(&[0.0, -1.0]); 10_000];
        assert_eq!(estimate_tail_index(&unit, 100, 100).unwrap().alpha_hat, 1.0);
    }

    #[test]
    fn errors() {
        let v = vec![DVector::from_element(1, 1.0); 10];
        assert!(matches!(estimate_tail_index(&v, 4, 3), Err(Error::Size(_))));
        assert!(estimate_tail_index(&v, 1, 3).is_err());
        let mut w = v.clone();
        w[3] = DVector::zeros(1);
        match estimate_tail_index(&w, 2, 5) {
            Err(Error::Degenerate(m)) => assert!(m.contains('3')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scale_invariance() {
        let mut rng = RngStream::new(1);
        let p = StableParams::standard(1.5).unwrap();
        let v: Vec<DVector<f64>> = (0..2500)
            .map(|_| DVector::from_fn(3, |_, _| sample_sas_scalar(p, &mut rng)))
            .collect();
        let a = estimate_tail_index(&v, 50, 50).unwrap().alpha_hat;
        for c in [0.001, 7.0, 1e6] {
            let w: Vec<DVector<f64>> = v.iter().map(|x| x * c).collect();
            let b = estimate_tail_index(&w, 50, 50).unwrap().alpha_hat;
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn sampling_law_of_the_estimate() {
        // Y is K₁^{1/α} times a fresh copy of X, so 1/α̂ is unbiased for 1/α;
        // its spread is driven by Var log|S| = (π²/12)(1 + 2/α²) over K₂ blocks.
        let stream = RngStream::new(2);
        for alpha in [1.5, 2.0] {
            let p = StableParams::standard(alpha).unwrap();
            let trials = 200;
            let inv: Vec<f64> = (0..trials)
                .map(|t| {
                    let mut rng = stream.fork(t);
                    let s: Vec<f64> = (0..10_000).map(|_| sample_sas_scalar(p, &mut rng)).collect();
                    1.0 / estimate_tail_index_scalar(&s, 100, 100).unwrap().alpha_hat
                })
                .collect();
            let mean = inv.iter().sum::<f64>() / trials as f64;
            let sd = (inv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
            let var_log = std::f64::consts::PI.powi(2) / 12.0 * (1.0 + 2.0 / (alpha * alpha));
            let predicted = (var_log / 100.0).sqrt() / 100f64.ln();
            assert!(
                (mean - 1.0 / alpha).abs() < 3.0 * predicted / (trials as f64).sqrt(),
                "{alpha}: {mean}"
            );
            assert!((sd / predicted - 1.0).abs() < 0.25, "{alpha}: sd {sd} vs {predicted}");
        }
    }

    #[test]
    fn consistency_trend() {
        let p = StableParams::standard(1.5).unwrap();
        let stream = RngStream::new(3);
        let med_err = |k2: usize| {
            let mut errs: Vec<f64> = (0..50)
                .map(|t| {
                    let mut rng = stream.fork(t * 1000 + k2 as u64);
                    let s: Vec<f64> = (0..100 * k2).map(|_| sample_sas_scalar(p, &mut rng)).collect();
                    (estimate_tail_index_scalar(&s, 100, k2).unwrap().alpha_hat - 1.5).abs()
                })
                .collect();
            median(&mut errs)
        };
        let e: Vec<f64> = [25, 100, 400].iter().map(|&k| med_err(k)).collect();
        assert!(e[0] >= e[1] && e[1] >= e[2], "{e:?}");
    }

    #[test]
    fn block_order_matters() {
        let mut rng = RngStream::new(4);
        let p = StableParams::standard(1.2).unwrap();
        let mut s: Vec<f64> = (0..400).map(|_| sample_sas_scalar(p, &mut rng)).collect();
        let a = estimate_tail_index_scalar(&s, 20, 20).unwrap().alpha_hat;
        s.sort_by(f64::total_cmp);
        let b = estimate_tail_index_scalar(&s, 20, 20).unwrap().alpha_hat;
        assert_ne!(a, b);
    }

    #[test]
    fn grouped_average() {
        let g = vec![
            vec![DVector::from_element(2, 1.0); 16],
            vec![DVector::from_element(2, -3.0); 16],
        ];
        assert!((grouped_tail_index(&g, 4, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(grouped_tail_index(&[], 4, 4).is_err());
    }

    #[test]
    fn ergodic_average_cases() {
        let c = vec![DVector::from_row_slice(&[2.0, -1.0]); 7];
        assert_eq!(ergodic_average(&c, 5).unwrap(), c[0]);
        let ramp: Vec<DVector<f64>> = (0..=100).map(|k| DVector::from_element(1, k as f64)).collect();
        assert_eq!(ergodic_average(&ramp, 1).unwrap()[0], 100.0);
        // Mean of 61..=100.
        assert!((ergodic_average(&ramp, 40).unwrap()[0] - 80.5).abs() < 1e-12);
        assert!(ergodic_average(&ramp, 0).is_err());
        assert!(ergodic_average(&ramp, 102).is_err());
    }

    #[test]
    fn median_center_cases() {
        let one = vec![DVector::from_row_slice(&[3.0, 4.0])];
        assert_eq!(median_center(&one).unwrap()[0], DVector::zeros(2));
        let pm = vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)];
        assert_eq!(median_center(&pm).unwrap(), pm);
        let mut rng = RngStream::new(5);
        for n in [9, 10] {
            let s: Vec<DVector<f64>> = (0..n)
                .map(|_| DVector::from_fn(3, |_, _| rng.random::<f64>()))
                .collect();
            let c = median_center(&s).unwrap();
            for j in 0..3 {
                let mut col: Vec<f64> = c.iter().map(|v| v[j]).collect();
                assert!(median(&mut col).abs() < 1e-15);
            }
        }
        assert!(median_center(&[]).is_err());
    }
}
