//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut pairs = [(0.0, 0.0); 7];
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        pairs[j] = (f(c - dx), f(c + dx));
        let s = pairs[j].0 + pairs[j].1;
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    // QUADPACK's scaled error estimate.
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, (l, r)) in pairs.iter().enumerate() {
        asc += WGK[j] * ((l - mean).abs() + (r - mean).abs());
    }
    let asc = asc * h.abs();
    let raw = ((kron - gauss) * h).abs();
    let err = if asc != 0.0 && raw != 0.0 {
        asc * (200.0 * raw / asc).powf(1.5).min(1.0)
    } else {
        raw
    };
    (kron * h, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until the summed
/// error estimate is below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol, max_intervals)
}

/// As [`integrate`], with the initial panels split at the interior points of
/// `breaks`. Narrow features must sit near a break to be sampled at all.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
        value += v;
        err += e;
    }
    while err > abs_tol.max(rel_tol * value.abs()) && heap.len() < max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in f64.
            heap.push(worst);
            break;
        }
        let (vl, el) = gk15(&f, worst.a, mid);
        let (vr, er) = gk15(&f, mid, worst.b);
        value += vl + vr - worst.value;
        err += el + er - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            err: el,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            err: er,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    QuadResult {
        value,
        abs_error: err,
        intervals: heap.len(),
        converged: err <= abs_tol.max(rel_tol * value.abs()),
    }
}

/// Points `lo, lo·ratio, lo·ratio², …` below `hi`.
pub fn geometric_breaks(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0 && ratio > 1.0) {
        return out;
    }
    let mut x = lo;
    while x < hi {
        out.push(x);
        x *= ratio;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-14, 1e-14, 50);
        assert!((r.value - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-12);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2.
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-10, 2000);
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn exponential_decay() {
        let r = integrate(|s: f64| (-1.5 * s).exp(), 0.0, 40.0, 1e-14, 1e-12, 500);
        assert!(r.converged);
        assert!((r.value - (1.0 - (-60f64).exp()) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn mixed_rates() {
        // Two widely separated decay scales.
        let f = |s: f64| (-0.01 * s).exp() + (-50.0 * s).exp();
        let breaks = geometric_breaks(0.02, 4000.0, 4.0);
        let r = integrate_with_breaks(f, 0.0, 4000.0, &breaks, 1e-13, 1e-12, 5000);
        let want = 100.0 * (1.0 - (-40f64).exp()) + 1.0 / 50.0;
        assert!(r.converged);
        assert!((r.value - want).abs() < 1e-9);
        assert!(r.abs_error < 1e-8);
    }
}
