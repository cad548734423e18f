//! Local-time estimation and the asymptotic confidence interval for the
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::limit_law::LimitQuantiles;
use crate::mle::{argsup_mle, ArgsupConfig, ArgsupResult};
use crate::model::ModelParams;
use crate::sampler::PathSample;
use crate::scalar::Scalar;
use crate::stats::CompensatedSum;

/// Sign changes around `rho` divided by `sqrt(n)`.
pub fn local_time_estimator<T: Scalar>(path: &PathSample<T>, rho: T) -> T {
    let crossings = path.pairs().filter(|&(x, y)| (x - rho) * (y - rho) < T::zero()).count();
    T::from_usize(crossings).expect("count representable") / T::from_usize(path.n()).expect("n representable").sqrt()
}

/// Limit of the scaled sign-change count per unit local time:
/// `4 / ((alpha + beta) sqrt(2 pi))`, i.e. `sqrt(2/pi) / sigma` when both
/// volatilities equal `sigma`.
pub fn crossing_factor<T: Scalar>(alpha: T, beta: T) -> T {
    T::lit(4.0) / ((alpha + beta) * T::TAU().sqrt())
}

/// Sign-change estimator divided by [`crossing_factor`]; consistent for the
/// semimartingale local time at `rho`.
pub fn local_time_calibrated<T: Scalar>(path: &PathSample<T>, rho: T, alpha: T, beta: T) -> T {
    local_time_estimator(path, rho) / crossing_factor(alpha, beta)
}

/// Occupation-time proxy `(1/(2 eps)) sum 1{|X - rho| <= eps} sigma(X)^2 / n`
/// over the start points of all pairs.
pub fn occupation_local_time<T: Scalar>(path: &PathSample<T>, params: &ModelParams<T>, eps: T) -> T {
    let total: CompensatedSum<T> = path.values()[..path.n()]
        .iter()
        .filter(|&&x| (x - params.rho).abs() <= eps)
        .map(|&x| params.sigma(x).powi(2))
        .collect();
    total.value() * path.dt() / (T::lit(2.0) * eps)
}

/// Which local-time estimate feeds the confidence interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeScale {
    /// Raw sign-change count over `sqrt(n)`.
    Raw,
    /// Raw count divided by the crossing factor.
    #[default]
    Calibrated,
}

impl LocalTimeScale {
    pub fn estimate(self, path: &PathSample, rho: f64, alpha: f64, beta: f64) -> f64 {
        match self {
            Self::Raw => local_time_estimator(path, rho),
            Self::Calibrated => local_time_calibrated(path, rho, alpha, beta),
        }
    }
}

/// `(1/sqrt(n)) sum_{k <= floor(n t)} f(sqrt(n) (X_{(k-1)/n} - rho0))`.
pub fn riemann_statistic<T: Scalar, F: Fn(T) -> T>(path: &PathSample<T>, rho0: T, f: F, t: T) -> T {
    let m = crate::likelihood::steps_up_to(path.n(), t);
    let root = T::from_usize(path.n()).expect("n representable").sqrt();
    let total: CompensatedSum<T> = path.values()[..m].iter().map(|&x| f(root * (x - rho0))).collect();
    total.value() / root
}

/// The Gaussian weight `u -> exp(-u^2 / (2 sigma(u)^2))` with `sigma = alpha`
/// below 0 and `beta` at or above.
pub fn gaussian_weight<T: Scalar>(alpha: T, beta: T) -> impl Fn(T) -> T {
    move |u: T| {
        let s = if u < T::zero() { alpha } else { beta };
        (-(u * u) / (T::lit(2.0) * s * s)).exp()
    }
}

/// Indicator of `[a, b)`.
pub fn indicator_window<T: Scalar>(a: T, b: T) -> impl Fn(T) -> T {
    move |u: T| if a <= u && u < b { T::one() } else { T::zero() }
}

/// Point estimate, local-time estimate and confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport<T = f64> {
    pub rho_hat: T,
    pub local_time_hat: T,
    /// `-inf` when degenerate (serialized as `null`).
    pub ci_lo: T,
    /// `+inf` when degenerate (serialized as `null`).
    pub ci_hi: T,
    /// Miscoverage level.
    pub level: T,
    pub n: usize,
    pub degenerate: bool,
}

impl<T: Scalar> EstimationReport<T> {
    pub fn contains(&self, rho: T) -> bool {
        self.ci_lo <= rho && rho <= self.ci_hi
    }

    pub fn width(&self) -> T {
        self.ci_hi - self.ci_lo
    }
}

/// `[rho_hat - q_hi/(n L), rho_hat - q_lo/(n L)]`, or the whole line when `L = 0`.
pub fn confidence_interval<T: Scalar>(
    rho_hat: T,
    local_time_hat: T,
    n: usize,
    q_lo: T,
    q_hi: T,
    level: T,
) -> Result<EstimationReport<T>> {
    if local_time_hat < T::zero() || !local_time_hat.is_finite() {
        return Err(ObmError::Domain(format!("local time estimate must be finite and nonnegative, got {local_time_hat}")));
    }
    if !(q_lo <= q_hi) {
        return Err(ObmError::Domain(format!("quantiles out of order: {q_lo} > {q_hi}")));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(ObmError::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    if n == 0 {
        return Err(ObmError::Domain("grid size must be at least 1".into()));
    }
    let degenerate = local_time_hat == T::zero();
    let (ci_lo, ci_hi) = if degenerate {
        (T::neg_infinity(), T::infinity())
    } else {
        let scale = T::from_usize(n).expect("n representable") * local_time_hat;
        (rho_hat - q_hi / scale, rho_hat - q_lo / scale)
    };
    Ok(EstimationReport { rho_hat, local_time_hat, ci_lo, ci_hi, level, n, degenerate })
}

/// Estimate the threshold, its local time and the interval in one pass.
///
/// `params` carries the known volatilities and the reference threshold that
/// centres the search window. The quantiles are computed once and reused.
pub fn estimate_with_interval(
    path: &PathSample,
    params: &ModelParams,
    argsup: &ArgsupConfig,
    quantiles: &LimitQuantiles,
    scale: LocalTimeScale,
) -> Result<(ArgsupResult, EstimationReport)> {
    let est = argsup_mle(path, params, argsup)?;
    let l_hat = scale.estimate(path, est.rho_hat, params.alpha, params.beta);
    let report = confidence_interval(est.rho_hat, l_hat, path.n(), quantiles.q_lo, quantiles.q_hi, quantiles.level)?;
    Ok((est, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::lambda_n_statistic;
    use crate::rng::RngStream;
    use crate::sampler::simulate_path;
    use approx::assert_relative_eq;

    #[test]
    fn sign_change_examples() {
        let above = PathSample::new(vec![1.0, 2.0, 1.5, 3.0]).unwrap();
        assert_eq!(local_time_estimator(&above, 0.0), 0.0);
        let alt = PathSample::new((0..=100).map(|k| if k % 2 == 0 { 0.1 } else { -0.1 }).collect()).unwrap();
        assert_eq!(local_time_estimator(&alt, 0.0), 10.0);
        let shifted = alt.shifted(3.0);
        assert_eq!(local_time_estimator(&shifted, 3.0), 10.0);
        assert_relative_eq!(crossing_factor(1.0, 1.0), (2.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn interval_arithmetic() {
        let r = confidence_interval(0.003, 0.8, 1000, -3.1, 2.4, 0.1).unwrap();
        assert_relative_eq!(r.ci_lo, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.ci_hi, 0.006_875, max_relative = 1e-12);
        assert!(r.contains(r.rho_hat));
        let d = confidence_interval(0.003, 0.0, 1000, -3.1, 2.4, 0.1).unwrap();
        assert!(d.degenerate && d.ci_lo == f64::NEG_INFINITY && d.ci_hi == f64::INFINITY);
        assert!(matches!(confidence_interval(0.0, -1.0, 10, -1.0, 1.0, 0.1), Err(ObmError::Domain(_))));
        let w1 = confidence_interval(0.0, 0.8, 1000, -3.1, 2.4, 0.1).unwrap().width();
        let w2 = confidence_interval(0.0, 0.8, 2000, -3.1, 2.4, 0.1).unwrap().width();
        assert_relative_eq!(w1, 2.0 * w2, max_relative = 1e-14);
    }

    #[test]
    fn riemann_matches_lambda() {
        let p = ModelParams::new(0.5, 0.2, 0.0).unwrap();
        let path = simulate_path(&p, 1000, 0.0, &mut RngStream::new(3, 0)).unwrap();
        let s = riemann_statistic(&path, 0.0, gaussian_weight(0.5, 0.2), 1.0);
        let n = 1000.0f64;
        let lam = lambda_n_statistic(&path, &p, 1.0);
        assert_relative_eq!(s, (std::f64::consts::TAU / n).sqrt() * lam / n.sqrt(), max_relative = 1e-12);
        assert_eq!(riemann_statistic(&path, 0.0, |_| 0.0, 1.0), 0.0);
        let a = riemann_statistic(&path, 0.0, indicator_window(0.0, 1.0), 1.0);
        let b = riemann_statistic(&path, 0.0, indicator_window(1.0, 2.0), 1.0);
        let ab = riemann_statistic(&path, 0.0, indicator_window(0.0, 2.0), 1.0);
        assert!(a >= 0.0 && b >= 0.0);
        assert_relative_eq!(a + b, ab, max_relative = 1e-14);
    }

    #[test]
    fn calibrated_matches_occupation_proxy() {
        let p = ModelParams::new(0.5, 0.2, 0.0).unwrap();
        let (mut cal, mut occ, mut raw) = (0.0, 0.0, 0.0);
        for i in 0..200 {
            let path = simulate_path(&p, 4000, 0.0, &mut RngStream::new(17, i)).unwrap();
            raw += local_time_estimator(&path, 0.0);
            cal += local_time_calibrated(&path, 0.0, 0.5, 0.2);
            occ += occupation_local_time(&path, &p, 0.02);
        }
        // the raw count is off by the crossing factor (about 2.28 here)
        assert!((cal / occ - 1.0).abs() < 0.1, "calibrated {cal} vs occupation {occ}");
        assert!(raw / occ > 1.8);
    }
}
