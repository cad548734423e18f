//! Drift of `l_n`: closed-form constants, the occupation statistic `Lambda`,
//! and the compensator `B_n(theta)` by quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::model::{transition_density, ModelParams};
#[cfg(test)]
use crate::model::log_transition_density;
use crate::quadrature::{integrate_split, QuadConfig};
use crate::sampler::PathSample;
use crate::scalar::Scalar;
use crate::stats::CompensatedSum;

use super::{pair_log_ratio, steps_up_to};

/// Closed-form drift constants of the threshold likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants<T = f64> {
    /// Drift rate per unit of `Lambda` for `theta > 0`.
    pub f: T,
    /// The same for `theta < 0`.
    pub f_tilde: T,
    /// Limiting drift of `l(z)` per unit local time, `z > 0`.
    pub b: T,
    /// The same for `z < 0`.
    pub b_prime: T,
    /// `lambda(f)` of the Gaussian weight `f_{alpha,beta}`.
    pub lambda_f: T,
}

pub fn drift_constants<T: Scalar>(alpha: T, beta: T) -> DriftConstants<T> {
    let two = T::lit(2.0);
    let (a2, b2) = (alpha * alpha, beta * beta);
    let log_b2_a2 = (b2 / a2).ln();
    let log_a2_b2 = (a2 / b2).ln();
    let f = -(two * (alpha - beta) / (alpha * beta) + (alpha / beta) * (two / (alpha + beta)) * log_b2_a2);
    let f_tilde =
        -(two * (beta - alpha) / (alpha * beta) + (beta / alpha) * (two / (alpha + beta)) * log_a2_b2);
    let b = (a2 - b2) / (a2 * b2) + log_b2_a2 / b2;
    let b_prime = (b2 - a2) / (a2 * b2) + log_a2_b2 / a2;
    let lambda_f = T::FRAC_PI_2().sqrt() * (alpha.recip() + beta.recip());
    DriftConstants { f, f_tilde, b, b_prime, lambda_f }
}

/// `Lambda_{n,t}`: Gaussian-weighted occupation of the first `floor(n t)`
/// start points around `rho0`, with prefactor `1/sqrt(2 pi / n)`.
pub fn lambda_n_statistic<T: Scalar>(path: &PathSample<T>, params0: &ModelParams<T>, t: T) -> T {
    let n = T::from_usize(path.n()).expect("grid size representable");
    let m = steps_up_to(path.n(), t);
    let two = T::lit(2.0);
    let (va, vb) = (two * params0.alpha.powi(2) / n, two * params0.beta.powi(2) / n);
    let total: CompensatedSum<T> = path.values()[..m]
        .iter()
        .map(|&x| {
            let d = x - params0.rho;
            let v = if x < params0.rho { va } else { vb };
            (-(d * d) / v).exp()
        })
        .collect();
    total.value() / (T::TAU() / n).sqrt()
}

/// Settings for [`drift_numeric`].
#[derive(Clone, Copy, Debug)]
pub struct DriftConfig {
    /// Largest admissible `|theta| sqrt(n)`.
    pub max_theta_sqrt_n: f64,
    /// Half-width of the `y` range in units of `sigma_max sqrt(1/n)`.
    pub half_width: f64,
    /// Tolerance per pair.
    pub quad: QuadConfig,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            max_theta_sqrt_n: 50.0,
            half_width: 40.0,
            quad: QuadConfig { abs_tol: 1e-13, rel_tol: 0.0, max_subdivisions: 400 },
        }
    }
}

/// `B_n(theta) = sum_k E[log(p^{rho0+theta} / p^{rho0})(X_{(k-1)/n}, Y)]`,
/// `Y ~ p^{rho0}(X_{(k-1)/n}, .)`, each expectation by adaptive quadrature
/// split at both thresholds.
pub fn drift_numeric(path: &PathSample, params0: &ModelParams, theta: f64, cfg: &DriftConfig) -> Result<f64> {
    let n = path.n() as f64;
    if !theta.is_finite() || theta.abs() * n.sqrt() > cfg.max_theta_sqrt_n {
        return Err(ObmError::Domain(format!(
            "drift needs |theta| sqrt(n) <= {}, got theta = {theta} at n = {}",
            cfg.max_theta_sqrt_n,
            path.n()
        )));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let dt = path.dt();
    let reach = cfg.half_width * params0.sigma_max() * dt.sqrt();
    let kinks = [params0.rho, params0.rho + theta];
    let mut total = CompensatedSum::new();
    for (k, &x) in path.values()[..path.n()].iter().enumerate() {
        let integrand = |y: f64| {
            let p = transition_density(params0, dt, x, y).unwrap_or(0.0);
            if p == 0.0 {
                0.0
            } else {
                pair_log_ratio(params0, dt, theta, x, y) * p
            }
        };
        let r = integrate_split(integrand, x - reach, x + reach, &kinks, 1, cfg.quad).map_err(|e| {
            ObmError::Numerical(format!("drift quadrature failed at pair {} (x = {x}, theta = {theta}): {e}", k + 1))
        })?;
        total.add(r.value);
    }
    Ok(total.value())
}

/// Log density sanity used by tests: the quadrature range holds all the mass.
#[cfg(test)]
fn mass_in_range(params: &ModelParams, dt: f64, x: f64, half_width: f64) -> f64 {
    let reach = half_width * params.sigma_max() * dt.sqrt();
    integrate_split(
        |y| log_transition_density(params, dt, x, y).map(f64::exp).unwrap_or(0.0),
        x - reach,
        x + reach,
        &[params.rho],
        1,
        QuadConfig { abs_tol: 1e-13, ..Default::default() },
    )
    .unwrap()
    .value
}
