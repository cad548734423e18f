//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{ObmError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
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
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 0.0, max_subdivisions: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(ObmError::Domain(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;
    let mut splits = 0;
    while !(error <= cfg.abs_tol.max(cfg.rel_tol * value.abs())) {
        if !value.is_finite() || error.is_nan() {
            return Err(ObmError::Numerical(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        if splits >= cfg.max_subdivisions {
            return Err(ObmError::Numerical(format!(
                "quadrature on [{lo}, {hi}] did not converge: estimate {value}, error {error:e} after {splits} subdivisions"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(ObmError::Numerical(format!(
                "quadrature segment [{}, {}] cannot be split further (error {:e})",
                worst.a, worst.b, worst.error
            )));
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        evaluations += 30;
        splits += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // refresh the running sums occasionally to avoid drift
        if splits % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value: sign * value, error, evaluations })
}

/// Integrate over `[a, b]` split at the interior `breaks` (unsorted, may
/// contain points outside the range) and into `pieces` equal parts between
/// consecutive breaks. The absolute tolerance is shared evenly.
pub fn integrate_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    pieces: usize,
    cfg: QuadConfig,
) -> Result<QuadResult> {
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let pieces = pieces.max(1);
    let segments = (knots.len() - 1) * pieces;
    let sub = QuadConfig { abs_tol: cfg.abs_tol / segments as f64, ..cfg };
    let mut total = QuadResult { value: 0.0, error: 0.0, evaluations: 0 };
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / pieces as f64;
        for i in 0..pieces {
            let lo = w[0] + h * i as f64;
            let hi = if i + 1 == pieces { w[1] } else { lo + h };
            let r = integrate(&mut f, lo, hi, sub)?;
            total.value += r.value;
            total.error += r.error;
            total.evaluations += r.evaluations;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 1.0, -1.0, 2.0, QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 9.0 - 1.5 + 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_and_kink() {
        let cfg = QuadConfig { abs_tol: 1e-13, ..Default::default() };
        let r = integrate(|x| (-x * x / 2.0).exp(), -12.0, 12.0, cfg).unwrap();
        assert_relative_eq!(r.value, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-12);
        let r = integrate_split(|x: f64| x.abs(), -1.0, 3.0, &[0.0], 1, cfg).unwrap();
        assert_relative_eq!(r.value, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x.exp(), 1.0, 0.0, QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 1.0 - std::f64::consts::E, max_relative = 1e-13);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let cfg = QuadConfig { abs_tol: 1e-14, rel_tol: 0.0, max_subdivisions: 5 };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, cfg).unwrap_err();
        assert!(matches!(err, ObmError::Numerical(_)));
    }
}
