//! Closed-form transition density of oscillating Brownian motion.
//!
//! The process solves `dX = sigma_rho(X) dW` with `sigma_rho(x) = alpha` for
//! `x < rho` and `beta` for `x >= rho`. Its transition density has four
//! regimes depending on where `x` and `y` sit relative to `rho`:
//!
//! | regime | condition            |
//! |--------|----------------------|
//! | 1      | `x < rho, y <= rho`  |
//! | 2      | `x >= rho, y > rho`  |
//! | 3      | `x < rho < y`        |
//! | 4      | `y <= rho <= x`      |

use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::scalar::{norm_cdf, norm_sf, Scalar};

/// Volatilities below and at/above the threshold, and the threshold itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T = f64> {
    pub alpha: T,
    pub beta: T,
    pub rho: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(alpha: T, beta: T, rho: T) -> Result<Self> {
        let p = Self { alpha, beta, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.rho.is_finite()) {
            return Err(ObmError::Domain(format!(
                "parameters must be finite (alpha={}, beta={}, rho={})",
                self.alpha, self.beta, self.rho
            )));
        }
        if self.alpha <= T::zero() || self.beta <= T::zero() {
            return Err(ObmError::Domain(format!(
                "volatilities must be positive (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Same volatilities, threshold moved to `rho`.
    #[inline]
    pub fn with_rho(&self, rho: T) -> Self {
        Self { rho, ..*self }
    }

    /// Diffusion coefficient `sigma_rho(x)`.
    #[inline]
    pub fn sigma(&self, x: T) -> T {
        if x < self.rho {
            self.alpha
        } else {
            self.beta
        }
    }

    /// Reflection coefficient `(alpha - beta) / (alpha + beta)`.
    #[inline]
    pub fn skew(&self) -> T {
        (self.alpha - self.beta) / (self.alpha + self.beta)
    }

    #[inline]
    pub fn sigma_max(&self) -> T {
        self.alpha.max(self.beta)
    }

    #[inline]
    pub fn sigma_min(&self) -> T {
        self.alpha.min(self.beta)
    }
}

/// One of the four cases of the transition density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `x < rho, y <= rho`
    BothBelow = 1,
    /// `x >= rho, y > rho`
    BothAbove = 2,
    /// `x < rho < y`
    UpCrossing = 3,
    /// `y <= rho <= x`
    DownCrossing = 4,
}

impl Regime {
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Regime::BothBelow),
            2 => Some(Regime::BothAbove),
            3 => Some(Regime::UpCrossing),
            4 => Some(Regime::DownCrossing),
            _ => None,
        }
    }
}

/// Regime of the pair `(x, y)` for threshold `rho`.
#[inline]
pub fn regime_at<T: Scalar>(rho: T, x: T, y: T) -> Regime {
    if x < rho {
        if y <= rho {
            Regime::BothBelow
        } else {
            Regime::UpCrossing
        }
    } else if y > rho {
        Regime::BothAbove
    } else {
        Regime::DownCrossing
    }
}

pub fn regime_of<T: Scalar>(params: &ModelParams<T>, x: T, y: T) -> Regime {
    regime_at(params.rho, x, y)
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(ObmError::Domain(format!("time step must be positive and finite, got {t}")))
    }
}

/// `p_t^rho(x, y)`.
pub fn transition_density<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> Result<T> {
    check_time(t)?;
    let (a, b, rho) = (params.alpha, params.beta, params.rho);
    let two = T::lit(2.0);
    let root = (T::TAU() * t).sqrt();
    let k = params.skew();
    let p = match regime_at(rho, x, y) {
        Regime::BothBelow => {
            let v = two * t * a * a;
            let direct = (-(y - x).powi(2) / v).exp();
            let reflected = (-(y - two * rho + x).powi(2) / v).exp();
            (direct - k * reflected) / (root * a)
        }
        Regime::BothAbove => {
            let v = two * t * b * b;
            let direct = (-(y - x).powi(2) / v).exp();
            let reflected = (-(y - two * rho + x).powi(2) / v).exp();
            (direct + k * reflected) / (root * b)
        }
        Regime::UpCrossing => {
            let u = (y - rho) / b - (x - rho) / a;
            two / (a + b) * (a / b) / root * (-(u * u) / (two * t)).exp()
        }
        Regime::DownCrossing => {
            let u = (y - rho) / a - (x - rho) / b;
            two / (a + b) * (b / a) / root * (-(u * u) / (two * t)).exp()
        }
    };
    Ok(p)
}

/// `log p_t^rho(x, y)` without forming the density.
pub fn log_transition_density<T: Scalar>(
    params: &ModelParams<T>,
    t: T,
    x: T,
    y: T,
) -> Result<T> {
    check_time(t)?;
    Ok(log_density_in_regime(params, t, x, y, regime_of(params, x, y)))
}

/// Log density evaluated with the formula of `regime`, whether or not
/// `(x, y)` actually lies in it. Each formula is smooth in `rho`; the argsup
/// search uses this to take one-sided limits at breakpoints.
///
/// For regimes 1 and 2 the reflected exponent never exceeds the direct one,
/// so the factored form `A + ln(1 -/+ k exp(B - A))` cannot underflow.
#[inline]
pub fn log_density_in_regime<T: Scalar>(
    params: &ModelParams<T>,
    t: T,
    x: T,
    y: T,
    regime: Regime,
) -> T {
    let (a, b, rho) = (params.alpha, params.beta, params.rho);
    let two = T::lit(2.0);
    let half_log_2pi_t = T::lit(0.5) * (T::TAU() * t).ln();
    match regime {
        Regime::BothBelow | Regime::BothAbove => {
            let (sigma, sign) = if regime == Regime::BothBelow {
                (a, -T::one())
            } else {
                (b, T::one())
            };
            let v = t * sigma * sigma;
            // B - A = -2 (x - rho)(y - rho) / (t sigma^2)
            let gap = -two * (x - rho) * (y - rho) / v;
            log_gaussian_kernel(t, x, y, sigma) + (sign * params.skew() * gap.exp()).ln_1p()
        }
        Regime::UpCrossing => {
            let u = (y - rho) / b - (x - rho) / a;
            (two / (a + b) * (a / b)).ln() - half_log_2pi_t - u * u / (two * t)
        }
        Regime::DownCrossing => {
            let u = (y - rho) / a - (x - rho) / b;
            (two / (a + b) * (b / a)).ln() - half_log_2pi_t - u * u / (two * t)
        }
    }
}

/// `log N(y; x, sigma^2 t)`; regimes 1 and 2 reduce to this exactly once the
/// reflected term underflows.
#[inline]
pub fn log_gaussian_kernel<T: Scalar>(t: T, x: T, y: T, sigma: T) -> T {
    let half_log_2pi_t = T::lit(0.5) * (T::TAU() * t).ln();
    -half_log_2pi_t - sigma.ln() - (y - x).powi(2) / (T::lit(2.0) * t * sigma * sigma)
}

/// Gaussian proposal `N(mean, std^2)` scaled by `scale_constant`, which
/// dominates `p_t^rho(x, .)` pointwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnvelope<T = f64> {
    pub scale_constant: T,
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> GaussianEnvelope<T> {
    /// `scale_constant * N(y; mean, std^2)`
    pub fn bound(&self, y: T) -> T {
        let z = (y - self.mean) / self.std;
        self.scale_constant * (-(z * z) / T::lit(2.0)).exp() / (T::TAU().sqrt() * self.std)
    }

    pub fn log_bound(&self, y: T) -> T {
        let z = (y - self.mean) / self.std;
        self.scale_constant.ln() - z * z / T::lit(2.0) - T::lit(0.5) * T::TAU().ln() - self.std.ln()
    }
}

/// Upper Gaussian envelope: `C = (2 max/(alpha+beta)) (max/min)`, mean `x`,
/// standard deviation `max(alpha, beta) sqrt(t)`.
pub fn envelope<T: Scalar>(params: &ModelParams<T>, t: T, x: T) -> GaussianEnvelope<T> {
    let (hi, lo) = (params.sigma_max(), params.sigma_min());
    GaussianEnvelope {
        scale_constant: T::lit(2.0) * hi / (params.alpha + params.beta) * (hi / lo),
        mean: x,
        std: hi * t.sqrt(),
    }
}

/// Matching lower Gaussian bound,
/// `(2/(alpha+beta)) (min/max) (2 pi t)^{-1/2} exp(-(y-x)^2 / (2 t min^2))`.
pub fn lower_bound<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> T {
    let (hi, lo) = (params.sigma_max(), params.sigma_min());
    T::lit(2.0) / (params.alpha + params.beta) * (lo / hi) / (T::TAU() * t).sqrt()
        * (-(y - x).powi(2) / (T::lit(2.0) * t * lo * lo)).exp()
}

/// `P(X_t <= y | X_0 = x)` from error-function integrals of each piece.
pub fn transition_cdf<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> Result<T> {
    check_time(t)?;
    if y <= params.rho {
        Ok(lower_mass(params, t, x, y))
    } else {
        Ok(T::one() - upper_mass(params, t, x, y))
    }
}

/// `P(X_t > y | X_0 = x)`.
pub fn transition_sf<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> Result<T> {
    check_time(t)?;
    if y <= params.rho {
        Ok(T::one() - lower_mass(params, t, x, y))
    } else {
        Ok(upper_mass(params, t, x, y))
    }
}

// Mass of (-inf, y] for y <= rho.
fn lower_mass<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> T {
    let (a, b, rho) = (params.alpha, params.beta, params.rho);
    let st = t.sqrt();
    let two = T::lit(2.0);
    if x < rho {
        let k = params.skew();
        norm_cdf((y - x) / (a * st)) - k * norm_cdf((y - two * rho + x) / (a * st))
    } else {
        two * b / (a + b) * norm_cdf(((y - rho) / a - (x - rho) / b) / st)
    }
}

// Mass of (y, inf) for y > rho.
fn upper_mass<T: Scalar>(params: &ModelParams<T>, t: T, x: T, y: T) -> T {
    let (a, b, rho) = (params.alpha, params.beta, params.rho);
    let st = t.sqrt();
    let two = T::lit(2.0);
    if x < rho {
        two * a / (a + b) * norm_sf(((y - rho) / b - (x - rho) / a) / st)
    } else {
        let k = params.skew();
        norm_sf((y - x) / (b * st)) + k * norm_sf((y - two * rho + x) / (b * st))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1() -> ModelParams {
        ModelParams::new(0.5, 0.2, 0.0).unwrap()
    }

    #[test]
    fn regime_examples() {
        let p = fig1();
        assert_eq!(regime_of(&p, -0.1, -0.05), Regime::BothBelow);
        assert_eq!(regime_of(&p, -0.1, 0.05), Regime::UpCrossing);
        assert_eq!(regime_of(&p, 0.0, 0.0), Regime::DownCrossing);
        assert_eq!(regime_of(&p, 0.0, 0.01), Regime::BothAbove);
        assert_eq!(regime_of(&p, -0.01, 0.0), Regime::BothBelow);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn nonpositive_time_is_domain_error() {
        let p = fig1();
        assert!(matches!(transition_density(&p, 0.0, 0.0, 0.0), Err(ObmError::Domain(_))));
        assert!(matches!(log_transition_density(&p, -1.0, 0.0, 0.0), Err(ObmError::Domain(_))));
        assert!(matches!(transition_cdf(&p, 0.0, 0.0, 0.0), Err(ObmError::Domain(_))));
    }

    #[test]
    fn equal_volatilities_give_standard_gaussian() {
        let p = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        let v = transition_density(&p, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(v, 0.398_942_280_401_432_7, max_relative = 1e-15);
        let lv = log_transition_density(&p, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(lv, -0.918_938_533_204_672_8, max_relative = 1e-14);
        assert_relative_eq!(transition_cdf(&p, 1.0, 0.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    // Reference values from tests/oracles/reference_values.py (mpmath, 50 digits).
    #[test]
    fn density_matches_extended_precision() {
        let p = fig1();
        assert_relative_eq!(
            transition_density(&p, 1e-3, 0.01, 0.01).unwrap(),
            63.260_463_763_415_147_968,
            max_relative = 1e-13
        );
        let q = ModelParams::new(0.5, 0.2, 0.1).unwrap();
        assert_relative_eq!(
            transition_density(&q, 0.01, 0.05, 0.2).unwrap(),
            4.339_916_321_302_353_694_1e-7,
            max_relative = 1e-12
        );
        let r = ModelParams::new(0.3, 0.7, -0.2).unwrap();
        assert_relative_eq!(
            transition_density(&r, 0.5, 0.1, -1.0).unwrap(),
            1.818_335_648_379_628_554e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            transition_density(&r, 0.5, -0.4, -0.3).unwrap(),
            1.959_601_736_599_256_609_8,
            max_relative = 1e-13
        );
    }

    #[test]
    fn log_density_stable_where_raw_terms_underflow() {
        let p = fig1();
        let v = log_transition_density(&p, 1e-3, -0.5, -0.5).unwrap();
        assert_relative_eq!(v, 3.228_086_286_846_341_093_7, max_relative = 1e-13);
        let w = log_transition_density(&p, 1e-3, -0.5, -0.3).unwrap();
        assert_relative_eq!(w, -76.771_913_713_153_658_906, max_relative = 1e-13);
        // the density itself underflows here
        let z = log_transition_density(&p, 1e-4, 0.3, -0.2).unwrap();
        assert_eq!(transition_density(&p, 1e-4, 0.3, -0.2).unwrap(), 0.0);
        assert_relative_eq!(z, -18_046.180_236_954_590_477, max_relative = 1e-13);
    }

    #[test]
    fn cdf_matches_extended_precision() {
        let p = fig1();
        let cases = [
            (0.0, 0.01, 0.918_681_215_709_529_964_09),
            (-0.02, -0.03, 0.263_209_185_091_768_496_21),
            (-0.02, 0.005, 0.971_548_129_110_898_962_36),
        ];
        for (x, y, want) in cases {
            assert_relative_eq!(transition_cdf(&p, 1e-3, x, y).unwrap(), want, max_relative = 1e-13);
        }
        let q = ModelParams::new(0.3, 0.7, 0.1).unwrap();
        assert_relative_eq!(
            transition_cdf(&q, 0.2, 0.4, -0.1).unwrap(),
            0.010_026_994_366_563_966_082,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            transition_cdf(&q, 0.2, 0.4, 0.5).unwrap(),
            0.630_372_371_254_208_341_1,
            max_relative = 1e-13
        );
    }

    #[test]
    fn envelope_constant() {
        let e = envelope(&fig1(), 1e-3, 0.0);
        assert_relative_eq!(e.scale_constant, 3.571_428_571_428_571_4, max_relative = 1e-15);
        assert_relative_eq!(e.std, 0.5 * 1e-3f64.sqrt(), max_relative = 1e-15);
        let same = ModelParams::new(0.7, 0.7, 1.0).unwrap();
        let e = envelope(&same, 0.3, 0.2);
        assert_eq!(e.scale_constant, 1.0);
        for y in [-1.0, 0.0, 0.2, 0.9, 1.0, 1.4] {
            let p = transition_density(&same, 0.3, 0.2, y).unwrap();
            assert_relative_eq!(p, e.bound(y), max_relative = 1e-12);
        }
    }

    #[test]
    fn flux_is_continuous_at_threshold() {
        for &(a, b, rho, t, x) in &[
            (0.5, 0.2, 0.0, 1e-3, -0.01),
            (0.5, 0.2, 0.0, 1e-3, 0.02),
            (0.3, 1.1, 0.4, 0.7, 0.1),
            (2.0, 0.4, -1.0, 0.05, -0.7),
        ] {
            let p = ModelParams::new(a, b, rho).unwrap();
            let left = a * a * transition_density(&p, t, x, rho).unwrap();
            let right = b * b * transition_density(&p, t, x, rho + 1e-14).unwrap();
            assert_relative_eq!(left, right, max_relative = 1e-10);
        }
    }

    #[test]
    fn f32_instantiation_tracks_f64() {
        let p32 = ModelParams::<f32>::new(0.5, 0.2, 0.0).unwrap();
        let p64 = fig1();
        for &(x, y) in &[(-0.01, -0.02), (0.01, 0.03), (-0.01, 0.02), (0.02, -0.01)] {
            let a = log_transition_density(&p32, 1e-3f32, x as f32, y as f32).unwrap() as f64;
            let b = log_transition_density(&p64, 1e-3, x, y).unwrap();
            assert!((a - b).abs() < 1e-3 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}
