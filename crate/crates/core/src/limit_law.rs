//! The limit process `l(z)` of the rescaled likelihood and its argsup.
//!
//! For `z >= 0`, `l(z) = s_+ z + J_+ N(z / beta^2)`; for `z < 0`,
//! `l(z) = s_- |z| + J_- N'((|z| / alpha^2)-)` with independent unit-rate
//! Poisson processes. Scaling the argument by the local time `L` multiplies
//! both slopes and jump intensities by `L`.
//!
//! Between jumps the path is linear, so its supremum over any bounded range
//! is attained (as a value or a left limit) at 0 or at a jump abscissa. The
//! range is extended until an exponential-martingale bound certifies that the
//! process beyond it stays below the running maximum with high probability.

use rand_distr::Exp1;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::likelihood::drift_constants;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::stats::quantile_sorted;

/// Coefficients of `l(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams<T = f64> {
    pub slope_pos: T,
    pub slope_neg: T,
    pub jump_pos: T,
    pub jump_neg: T,
    pub rate_pos: T,
    pub rate_neg: T,
}

pub fn limit_params<T: Scalar>(alpha: T, beta: T) -> Result<LimitLawParams<T>> {
    if !(alpha > T::zero() && beta > T::zero() && alpha.is_finite() && beta.is_finite()) {
        return Err(ObmError::Domain(format!("volatilities must be positive and finite, got ({alpha}, {beta})")));
    }
    if alpha == beta {
        return Err(ObmError::Degenerate("alpha == beta: the limit process is identically zero".into()));
    }
    let c = drift_constants(alpha, beta);
    let (a2, b2) = (alpha * alpha, beta * beta);
    let jump_pos = (b2 / a2).ln();
    let jump_neg = (a2 / b2).ln();
    Ok(LimitLawParams {
        slope_pos: c.b - jump_pos / b2,
        slope_neg: c.b_prime - jump_neg / a2,
        jump_pos,
        jump_neg,
        rate_pos: b2.recip(),
        rate_neg: a2.recip(),
    })
}

impl LimitLawParams<f64> {
    /// Drift of the compensated side, `slope + jump * rate` (`b` resp. `b'`).
    pub fn drift(&self, positive: bool) -> f64 {
        if positive {
            self.slope_pos + self.jump_pos * self.rate_pos
        } else {
            self.slope_neg + self.jump_neg * self.rate_neg
        }
    }

    /// Positive root of `lambda s + r (exp(lambda J) - 1)`, the Lundberg
    /// exponent of one side; it does not depend on the local-time scaling.
    pub fn lundberg_exponent(&self, positive: bool) -> Result<f64> {
        let (s, j, r) = if positive {
            (self.slope_pos, self.jump_pos, self.rate_pos)
        } else {
            (self.slope_neg, self.jump_neg, self.rate_neg)
        };
        let kappa = |l: f64| l * s + r * (l * j).exp_m1();
        if !(s + r * j < 0.0) {
            return Err(ObmError::Numerical("limit process has nonnegative drift".into()));
        }
        let mut hi = 1.0;
        while kappa(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(ObmError::Numerical("no Lundberg exponent found".into()));
            }
        }
        let mut lo = 0.0;
        // kappa < 0 just right of 0 since kappa'(0) < 0
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if kappa(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// One realization of the jump abscissae of `l(z L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRealization {
    pub params: LimitLawParams,
    pub local_time: f64,
    /// Jump abscissae on `z > 0`, ascending.
    pub pos: Vec<f64>,
    /// Jump abscissae `|z|` on `z < 0`, ascending.
    pub neg: Vec<f64>,
}

impl JumpRealization {
    pub fn new(params: LimitLawParams, local_time: f64, pos: Vec<f64>, neg: Vec<f64>) -> Self {
        Self { params, local_time, pos, neg }
    }

    /// Draw all jumps with abscissa up to `horizon` on each side, plus the
    /// first one beyond it.
    pub fn simulate(params: LimitLawParams, local_time: f64, horizon: f64, rng: &mut RngStream) -> Self {
        let mut r = Self::new(params, local_time, Vec::new(), Vec::new());
        r.extend(horizon, rng);
        r
    }

    fn pos_spacing(&self) -> f64 {
        1.0 / (self.params.rate_pos * self.local_time)
    }

    fn neg_spacing(&self) -> f64 {
        1.0 / (self.params.rate_neg * self.local_time)
    }

    /// Append jumps until both sides reach past `horizon`. Positive-side
    /// draws precede negative-side draws for each extension.
    fn extend(&mut self, horizon: f64, rng: &mut RngStream) {
        let (sp, sn) = (self.pos_spacing(), self.neg_spacing());
        let mut last = self.pos.last().copied().unwrap_or(0.0);
        while last <= horizon {
            let e: f64 = rng.sample(Exp1);
            last += e * sp;
            self.pos.push(last);
        }
        let mut last = self.neg.last().copied().unwrap_or(0.0);
        while last <= horizon {
            let e: f64 = rng.sample(Exp1);
            last += e * sn;
            self.neg.push(last);
        }
    }

    /// `l(z L)`.
    pub fn eval(&self, z: f64) -> f64 {
        let p = &self.params;
        if z >= 0.0 {
            let count = self.pos.partition_point(|&a| a <= z);
            p.slope_pos * z * self.local_time + p.jump_pos * count as f64
        } else {
            let count = self.neg.partition_point(|&a| a < -z);
            p.slope_neg * -z * self.local_time + p.jump_neg * count as f64
        }
    }

    /// `lim_{u -> z-} l(u L)`.
    pub fn left_limit(&self, z: f64) -> f64 {
        let p = &self.params;
        if z > 0.0 {
            let count = self.pos.partition_point(|&a| a < z);
            p.slope_pos * z * self.local_time + p.jump_pos * count as f64
        } else {
            let count = self.neg.partition_point(|&a| a <= -z);
            p.slope_neg * -z * self.local_time + p.jump_neg * count as f64
        }
    }

    /// `(z, max(left limit, value), is left limit)` at 0 and every jump.
    pub fn candidates(&self) -> Vec<(f64, f64, bool)> {
        let p = &self.params;
        let l = self.local_time;
        let mut out = Vec::with_capacity(1 + 2 * (self.pos.len() + self.neg.len()));
        out.push((0.0, 0.0, false));
        for (i, &a) in self.pos.iter().enumerate() {
            let before = p.slope_pos * a * l + p.jump_pos * i as f64;
            let after = before + p.jump_pos;
            out.push(if before > after { (a, before, true) } else { (a, after, false) });
        }
        for (i, &a) in self.neg.iter().enumerate() {
            // at z = -a the value still excludes this jump; the left limit includes it
            let value = p.slope_neg * a * l + p.jump_neg * i as f64;
            let left = value + p.jump_neg;
            out.push(if left > value { (-a, left, true) } else { (-a, value, false) });
        }
        out
    }

    /// Exact argsup over the simulated range: `(z*, sup, attained as left limit)`.
    /// Ties go to the smallest `|z|`, then the smallest `z`.
    pub fn argsup(&self) -> (f64, f64, bool) {
        let mut best: (f64, f64, bool) = (0.0, 0.0, false);
        for c in self.candidates() {
            let better = c.1 > best.1
                || (c.1 == best.1 && (c.0.abs() < best.0.abs() || (c.0.abs() == best.0.abs() && c.0 < best.0)));
            if better {
                best = c;
            }
        }
        best
    }

    /// Certified bound on `P(sup beyond the simulated range >= level)`.
    fn tail_bound(&self, level: f64, exps: (f64, f64)) -> f64 {
        let p = &self.params;
        let l = self.local_time;
        let side = |last: Option<&f64>, n: usize, slope: f64, jump: f64, exp: f64| match last {
            None => 1.0,
            Some(&a) => {
                let after = slope * a * l + jump * n as f64;
                // the pre-jump level is already a candidate
                if level > after {
                    (-exp * (level - after)).exp()
                } else {
                    1.0
                }
            }
        };
        side(self.pos.last(), self.pos.len(), p.slope_pos, p.jump_pos, exps.0)
            + side(self.neg.last(), self.neg.len(), p.slope_neg, p.jump_neg, exps.1)
    }
}

/// One certified draw of `argsup_z l(z L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitArgsupSample {
    pub z_star: f64,
    pub value: f64,
    pub attained_as_left_limit: bool,
    pub truncation_horizon: f64,
    pub tail_bound: f64,
}

/// Settings shared by the limit-law samplers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LimitSamplerConfig {
    pub tail_tol: f64,
    /// Horizon doublings allowed before giving up.
    pub max_doublings: u32,
}

impl Default for LimitSamplerConfig {
    fn default() -> Self {
        Self { tail_tol: 1e-6, max_doublings: 60 }
    }
}

/// Sampler with the Lundberg exponents of both sides precomputed.
#[derive(Clone, Copy, Debug)]
pub struct LimitSampler {
    params: LimitLawParams,
    exps: (f64, f64),
    cfg: LimitSamplerConfig,
}

impl LimitSampler {
    pub fn new(params: LimitLawParams, cfg: LimitSamplerConfig) -> Result<Self> {
        if !(cfg.tail_tol > 0.0 && cfg.tail_tol <= 0.01) {
            return Err(ObmError::Domain(format!("tail tolerance must lie in (0, 0.01], got {}", cfg.tail_tol)));
        }
        let exps = (params.lundberg_exponent(true)?, params.lundberg_exponent(false)?);
        Ok(Self { params, exps, cfg })
    }

    pub fn params(&self) -> &LimitLawParams {
        &self.params
    }

    /// Simulate until the tail beyond the range is certified, returning the
    /// realization and the final horizon.
    pub fn realize(&self, local_time: f64, rng: &mut RngStream) -> Result<(JumpRealization, f64, f64)> {
        if !(local_time > 0.0 && local_time.is_finite()) {
            return Err(ObmError::Domain(format!("local time must be positive, got {local_time}")));
        }
        let p = &self.params;
        let mut horizon = 2.0 / (local_time * p.rate_pos.min(p.rate_neg));
        let mut real = JumpRealization::simulate(*p, local_time, horizon, rng);
        for _ in 0..=self.cfg.max_doublings {
            let (_, sup, _) = real.argsup();
            let bound = real.tail_bound(sup, self.exps);
            if bound < self.cfg.tail_tol {
                return Ok((real, horizon, bound));
            }
            horizon *= 2.0;
            real.extend(horizon, rng);
        }
        Err(ObmError::Horizon(format!(
            "tail of the limit process not certified below {} within horizon {horizon}",
            self.cfg.tail_tol
        )))
    }

    pub fn sample(&self, local_time: f64, rng: &mut RngStream) -> Result<LimitArgsupSample> {
        let (real, horizon, bound) = self.realize(local_time, rng)?;
        let (z_star, value, left) = real.argsup();
        Ok(LimitArgsupSample {
            z_star,
            value,
            attained_as_left_limit: left,
            truncation_horizon: horizon,
            tail_bound: bound,
        })
    }
}

/// A certified draw of `argsup_z l(z L)` with tail tolerance `tail_tol`.
pub fn sample_limit_argsup(
    params: &LimitLawParams,
    local_time: f64,
    rng: &mut RngStream,
    tail_tol: f64,
) -> Result<LimitArgsupSample> {
    LimitSampler::new(*params, LimitSamplerConfig { tail_tol, ..Default::default() })?.sample(local_time, rng)
}

/// `l(z L)` on `z_grid`, from jumps simulated over the grid's range.
pub fn sample_limit_path(params: &LimitLawParams, local_time: f64, z_grid: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if z_grid.iter().any(|z| !z.is_finite()) {
        return Err(ObmError::Domain("grid must be finite".into()));
    }
    let reach = z_grid.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let real = JumpRealization::simulate(*params, local_time, reach, rng);
    Ok(z_grid.iter().map(|&z| real.eval(z)).collect())
}

/// Monte Carlo quantiles of `argsup_z l(z)` (unit local time).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitQuantiles {
    /// Miscoverage level: quantiles at `level/2` and `1 - level/2`.
    pub level: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub n_mc: usize,
    pub tail_tol: f64,
    pub seed: u64,
    #[serde(skip)]
    pub draws: Vec<f64>,
}

/// Quantiles of `n_mc` independent draws; draw `i` uses stream `i` of `seed`.
pub fn limit_quantiles(
    params: &LimitLawParams,
    level: f64,
    n_mc: usize,
    seed: u64,
    cfg: LimitSamplerConfig,
) -> Result<LimitQuantiles> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ObmError::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    if n_mc < 1000 {
        return Err(ObmError::Domain(format!("at least 1000 Monte Carlo draws are required, got {n_mc}")));
    }
    let sampler = LimitSampler::new(*params, cfg)?;
    let mut draws = (0..n_mc as u64)
        .into_par_iter()
        .map(|i| sampler.sample(1.0, &mut RngStream::new(seed, i)).map(|s| s.z_star))
        .collect::<Result<Vec<f64>>>()?;
    draws.sort_by(f64::total_cmp);
    Ok(LimitQuantiles {
        level,
        q_lo: quantile_sorted(&draws, level / 2.0),
        q_hi: quantile_sorted(&draws, 1.0 - level / 2.0),
        n_mc,
        tail_tol: cfg.tail_tol,
        seed,
        draws,
    })
}
