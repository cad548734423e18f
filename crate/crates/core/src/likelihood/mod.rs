//! Normalized log-likelihood `l_n(theta)` of the threshold and its pieces.
//!
//! Every quantity is a sum over consecutive pairs of
//! `log p^{rho0 + theta} - log p^{rho0}`, accumulated in time order with
//! compensated summation.

mod drift;
mod evaluator;
mod landscape;

pub use drift::{drift_constants, drift_numeric, lambda_n_statistic, DriftConfig, DriftConstants};
pub use evaluator::{IntervalModel, LikelihoodEvaluator};
pub use landscape::{likelihood_landscape, LikelihoodLandscape};

use crate::model::{log_density_in_regime, regime_at, ModelParams};
use crate::sampler::PathSample;
use crate::scalar::Scalar;
use crate::stats::CompensatedSum;

/// One of the nine pair classes for a pair of levels `c1 <= c2`.
///
/// Rows are the position of the start point `x` (below `c1`, in `[c1, c2)`,
/// at or above `c2`); columns the position of the end point `y` (at or below
/// `c1`, in `(c1, c2]`, above `c2`). Index `3 * row + column + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairRegime(u8);

impl PairRegime {
    pub fn new(index: u8) -> Option<Self> {
        (1..=9).contains(&index).then_some(Self(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

/// Pair class of `(x, y)` for the levels `rho0 + theta_lo <= rho0 + theta_hi`.
///
/// # Panics
/// If `theta_lo > theta_hi`.
pub fn classify_pair<T: Scalar>(theta_lo: T, theta_hi: T, rho0: T, x: T, y: T) -> PairRegime {
    assert!(theta_lo <= theta_hi, "classify_pair needs theta_lo <= theta_hi");
    let c1 = rho0 + theta_lo;
    let c2 = rho0 + theta_hi;
    let row = if x < c1 {
        0
    } else if x < c2 {
        1
    } else {
        2
    };
    let col = if y <= c1 {
        0
    } else if y <= c2 {
        1
    } else {
        2
    };
    PairRegime(3 * row + col + 1)
}

/// Level pair `(theta', theta)` used to classify pairs for `l_n(theta)`.
fn level_pair<T: Scalar>(theta: T) -> (T, T) {
    if theta >= T::zero() {
        (T::zero(), theta)
    } else {
        (theta, T::zero())
    }
}

/// `log p_t^{rho0+theta}(x, y) - log p_t^{rho0}(x, y)`; exactly zero at `theta = 0`.
#[inline]
pub fn pair_log_ratio<T: Scalar>(params0: &ModelParams<T>, t: T, theta: T, x: T, y: T) -> T {
    if theta == T::zero() {
        return T::zero();
    }
    let rho = params0.rho + theta;
    let alt = params0.with_rho(rho);
    log_density_in_regime(&alt, t, x, y, regime_at(rho, x, y))
        - log_density_in_regime(params0, t, x, y, regime_at(params0.rho, x, y))
}

/// `l_n(theta)` summed over all `n` pairs.
pub fn ell_n<T: Scalar>(path: &PathSample<T>, params0: &ModelParams<T>, theta: T) -> T {
    partial_sum(path, params0, theta, path.n())
}

/// `l_{n,t}(theta)`: the partial sum over the first `floor(n t)` pairs.
pub fn ell_n_sequential<T: Scalar>(
    path: &PathSample<T>,
    params0: &ModelParams<T>,
    theta: T,
    t: T,
) -> T {
    partial_sum(path, params0, theta, steps_up_to(path.n(), t))
}

/// `floor(n t)` clamped to `[0, n]`.
pub(crate) fn steps_up_to<T: Scalar>(n: usize, t: T) -> usize {
    let nt = (T::from_usize(n).expect("grid size representable") * t).floor();
    nt.to_usize().unwrap_or(0).min(n)
}

fn partial_sum<T: Scalar>(path: &PathSample<T>, params0: &ModelParams<T>, theta: T, m: usize) -> T {
    if theta == T::zero() {
        return T::zero();
    }
    let dt = path.dt();
    path.pairs()
        .take(m)
        .map(|(x, y)| pair_log_ratio(params0, dt, theta, x, y))
        .collect::<CompensatedSum<T>>()
        .value()
}

/// The nine class sums `(I_1, ..., I_9)` of `l_n(theta)`.
pub fn regime_sums<T: Scalar>(path: &PathSample<T>, params0: &ModelParams<T>, theta: T) -> [T; 9] {
    let mut sums = [CompensatedSum::<T>::new(); 9];
    let (lo, hi) = level_pair(theta);
    let dt = path.dt();
    for (x, y) in path.pairs() {
        let j = classify_pair(lo, hi, params0.rho, x, y).index() as usize - 1;
        sums[j].add(pair_log_ratio(params0, dt, theta, x, y));
    }
    sums.map(|s| s.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sampler::simulate_path;

    fn fig1() -> ModelParams {
        ModelParams::new(0.5, 0.2, 0.0).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pair(0.0, 0.1, 0.0, -0.05, 0.05).index(), 2);
        assert_eq!(classify_pair(0.0, 0.1, 0.0, 0.2, 0.3).index(), 9);
        assert_eq!(classify_pair(0.0, 0.1, 0.0, 0.0, 0.0).index(), 4);
        assert_eq!(classify_pair(0.0, 0.1, 0.0, 0.1, 0.1).index(), 8);
        assert!(PairRegime::new(0).is_none() && PairRegime::new(10).is_none());
    }

    #[test]
    fn ell_at_zero_is_exact_zero() {
        let path = simulate_path(&fig1(), 200, 0.0, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(ell_n(&path, &fig1(), 0.0), 0.0);
        assert_eq!(regime_sums(&path, &fig1(), 0.0), [0.0; 9]);
    }

    #[test]
    fn path_above_both_levels_only_fills_last_class() {
        let p = fig1();
        let path = PathSample::new(vec![0.5, 0.6, 0.55, 0.7]).unwrap();
        let s = regime_sums(&path, &p, 0.1);
        assert!(s[..8].iter().all(|&v| v == 0.0));
        assert!(s[8] != 0.0);
    }

    #[test]
    fn sequential_endpoints_and_half() {
        let p = fig1();
        let path = simulate_path(&p, 301, 0.0, &mut RngStream::new(2, 0)).unwrap();
        let theta = 3.0 / 301.0;
        assert_eq!(ell_n_sequential(&path, &p, theta, 0.0), 0.0);
        assert_eq!(ell_n_sequential(&path, &p, theta, 1.0), ell_n(&path, &p, theta));
        let direct: f64 = path
            .pairs()
            .take(150)
            .map(|(x, y)| pair_log_ratio(&p, path.dt(), theta, x, y))
            .collect::<CompensatedSum>()
            .value();
        assert_eq!(ell_n_sequential(&path, &p, theta, 0.5), direct);
    }

    #[test]
    fn single_precision_tracks_double() {
        let p = fig1();
        let path = simulate_path(&p, 100, 0.0, &mut RngStream::new(4, 0)).unwrap();
        let p32 = ModelParams::<f32>::new(0.5, 0.2, 0.0).unwrap();
        let path32 = PathSample::new(path.values().iter().map(|&v| v as f32).collect()).unwrap();
        for theta in [0.01, -0.02, 0.05] {
            let a = ell_n(&path, &p, theta);
            let b = ell_n(&path32, &p32, theta as f32) as f64;
            assert!((a - b).abs() < 1e-2 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
