//! Fast repeated evaluation of `l_n` at many levels on one path.
//!
//! Pairs far below the level (both points more than `FAR * alpha * sqrt(dt)`
//! under it) or far above it (more than `FAR * beta * sqrt(dt)` over it) have
//! a reflected term below `exp(-2 FAR^2)` and contribute a level-free constant;
//! those are kept in prefix/suffix sums so each evaluation only touches pairs
//! near the level.

use crate::model::{log_density_in_regime, log_gaussian_kernel, regime_at, ModelParams, Regime};
use crate::sampler::PathSample;
use crate::stats::CompensatedSum;

const FAR: f64 = 6.0;

#[derive(Clone, Copy, Debug)]
struct Pair {
    x: f64,
    y: f64,
    lo: f64,
    hi: f64,
    /// `log p^{rho0}(x, y)`.
    denom: f64,
    /// Contribution when the level is far above the pair.
    below: f64,
    /// Contribution when the level is far below the pair.
    above: f64,
}

/// Precomputed view of a path for evaluating `l_n` at arbitrary levels
/// `c = rho0 + theta`.
#[derive(Clone, Debug)]
pub struct LikelihoodEvaluator {
    params0: ModelParams,
    dt: f64,
    pairs: Vec<Pair>,
    hi_sorted: Vec<f64>,
    below_prefix: Vec<f64>,
    lo_order: Vec<u32>,
    lo_sorted: Vec<f64>,
    above_suffix: Vec<f64>,
    max_span: f64,
    reach_below: f64,
    reach_above: f64,
}

/// Pairs whose regime is fixed for every level strictly inside
/// `(c_lo, c_hi)`, plus the summed contribution of the far pairs.
#[derive(Clone, Debug)]
pub struct IntervalModel {
    pub c_lo: f64,
    pub c_hi: f64,
    constant: f64,
    active: Vec<(u32, Regime)>,
}

impl IntervalModel {
    pub fn active_pairs(&self) -> usize {
        self.active.len()
    }
}

impl LikelihoodEvaluator {
    pub fn new(path: &PathSample, params0: &ModelParams) -> Self {
        let dt = path.dt();
        let pairs: Vec<Pair> = path
            .pairs()
            .map(|(x, y)| {
                let denom = log_density_in_regime(params0, dt, x, y, regime_at(params0.rho, x, y));
                Pair {
                    x,
                    y,
                    lo: x.min(y),
                    hi: x.max(y),
                    denom,
                    below: log_gaussian_kernel(dt, x, y, params0.alpha) - denom,
                    above: log_gaussian_kernel(dt, x, y, params0.beta) - denom,
                }
            })
            .collect();

        let mut hi_order: Vec<u32> = (0..pairs.len() as u32).collect();
        hi_order.sort_by(|&a, &b| pairs[a as usize].hi.total_cmp(&pairs[b as usize].hi));
        let hi_sorted: Vec<f64> = hi_order.iter().map(|&i| pairs[i as usize].hi).collect();
        let mut below_prefix = Vec::with_capacity(pairs.len() + 1);
        let mut acc = CompensatedSum::new();
        below_prefix.push(0.0);
        for &i in &hi_order {
            acc.add(pairs[i as usize].below);
            below_prefix.push(acc.value());
        }

        let mut lo_order: Vec<u32> = (0..pairs.len() as u32).collect();
        lo_order.sort_by(|&a, &b| pairs[a as usize].lo.total_cmp(&pairs[b as usize].lo));
        let lo_sorted: Vec<f64> = lo_order.iter().map(|&i| pairs[i as usize].lo).collect();
        let mut above_suffix = vec![0.0; pairs.len() + 1];
        let mut acc = CompensatedSum::new();
        for (j, &i) in lo_order.iter().enumerate().rev() {
            acc.add(pairs[i as usize].above);
            above_suffix[j] = acc.value();
        }

        let max_span = pairs.iter().map(|p| p.hi - p.lo).fold(0.0, f64::max);
        let sd = dt.sqrt();
        Self {
            params0: *params0,
            dt,
            pairs,
            hi_sorted,
            below_prefix,
            lo_order,
            lo_sorted,
            above_suffix,
            max_span,
            reach_below: FAR * params0.alpha * sd,
            reach_above: FAR * params0.beta * sd,
        }
    }

    pub fn params0(&self) -> &ModelParams {
        &self.params0
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// Far-pair constant and the indices (into `lo_order`) of the remaining
    /// pairs for levels in `[c_lo, c_hi]`.
    fn split(&self, c_lo: f64, c_hi: f64) -> (f64, std::ops::Range<usize>, f64) {
        let below_cut = c_lo - self.reach_below;
        let n_below = self.hi_sorted.partition_point(|&h| h < below_cut);
        let above_cut = c_hi + self.reach_above;
        let first_above = self.lo_sorted.partition_point(|&l| l <= above_cut);
        let start = self.lo_sorted.partition_point(|&l| l < below_cut - self.max_span);
        let constant = self.below_prefix[n_below] + self.above_suffix[first_above];
        (constant, start..first_above.max(start), below_cut)
    }

    #[inline]
    fn term(&self, p: &Pair, params: &ModelParams, regime: Regime) -> f64 {
        log_density_in_regime(params, self.dt, p.x, p.y, regime) - p.denom
    }

    /// `l_n` at level `c = rho0 + theta`.
    pub fn eval_level(&self, c: f64) -> f64 {
        if c == self.params0.rho {
            return 0.0;
        }
        let params = self.params0.with_rho(c);
        let (constant, range, below_cut) = self.split(c, c);
        let mut sum = CompensatedSum::new();
        sum.add(constant);
        for &i in &self.lo_order[range] {
            let p = &self.pairs[i as usize];
            if p.hi >= below_cut {
                sum.add(self.term(p, &params, regime_at(c, p.x, p.y)));
            }
        }
        sum.value()
    }

    /// `l_n(theta)`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_level(self.params0.rho + theta)
    }

    /// Freeze the regimes of the open level interval `(c_lo, c_hi)`.
    pub fn interval_model(&self, c_lo: f64, c_hi: f64) -> IntervalModel {
        let mid = 0.5 * (c_lo + c_hi);
        let (constant, range, below_cut) = self.split(c_lo, c_hi);
        let active = self.lo_order[range]
            .iter()
            .filter(|&&i| self.pairs[i as usize].hi >= below_cut)
            .map(|&i| {
                let p = &self.pairs[i as usize];
                (i, regime_at(mid, p.x, p.y))
            })
            .collect();
        IntervalModel { c_lo, c_hi, constant, active }
    }

    /// The smooth restriction of `l_n` to the interval, extended to its
    /// closed hull; at `c_hi` this is the left limit.
    pub fn restricted(&self, model: &IntervalModel, c: f64) -> f64 {
        let params = self.params0.with_rho(c);
        let mut sum = CompensatedSum::new();
        sum.add(model.constant);
        for &(i, r) in &model.active {
            sum.add(self.term(&self.pairs[i as usize], &params, r));
        }
        sum.value()
    }

    /// Upper bound of the restriction over `[c_lo, c_hi]`.
    pub fn interval_upper_bound(&self, model: &IntervalModel) -> f64 {
        self.restricted_upper_bound(model, model.c_lo, model.c_hi)
    }

    /// Upper bound of the restriction over `[a, b]`, a subrange of the interval.
    pub fn restricted_upper_bound(&self, model: &IntervalModel, a: f64, b: f64) -> f64 {
        let mut sum = model.constant;
        for &(i, r) in &model.active {
            let p = &self.pairs[i as usize];
            sum += self.regime_sup(p, r, a, b) - p.denom;
        }
        sum
    }

    /// Upper bound of `l_n` (values and left limits) over levels in `[c_lo, c_hi]`.
    pub fn block_upper_bound(&self, c_lo: f64, c_hi: f64) -> f64 {
        let (constant, range, below_cut) = self.split(c_lo, c_hi);
        let mut sum = constant;
        for &i in &self.lo_order[range] {
            let p = &self.pairs[i as usize];
            if p.hi >= below_cut {
                sum += self.pair_sup(p, c_lo, c_hi) - p.denom;
            }
        }
        sum
    }

    /// Supremum over `c in [a, b]` of the log density of one pair, letting
    /// the regime follow `c`: above both points it is `BothBelow`, below both
    /// `BothAbove`, and in between a crossing regime.
    fn pair_sup(&self, p: &Pair, a: f64, b: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        if a <= p.lo {
            best = best.max(self.regime_sup(p, Regime::BothAbove, a, b.min(p.lo)));
        }
        if a <= p.hi && b >= p.lo {
            let r = if p.x < p.y { Regime::UpCrossing } else { Regime::DownCrossing };
            best = best.max(self.regime_sup(p, r, a.max(p.lo), b.min(p.hi)));
        }
        if b >= p.hi {
            best = best.max(self.regime_sup(p, Regime::BothBelow, a.max(p.hi), b));
        }
        best
    }

    /// Supremum over `c in [a, b]` of the log density with `regime` frozen.
    /// The two-sided regimes are monotone in `c` on their domain; the crossing
    /// regimes are concave quadratics.
    fn regime_sup(&self, p: &Pair, regime: Regime, a: f64, b: f64) -> f64 {
        let at = |c: f64| log_density_in_regime(&self.params0.with_rho(c), self.dt, p.x, p.y, regime);
        match regime {
            Regime::BothBelow | Regime::BothAbove => at(a).max(at(b)),
            Regime::UpCrossing | Regime::DownCrossing => {
                let (al, be) = (self.params0.alpha, self.params0.beta);
                // u(c) = y/s1 - x/s2 + c (1/s2 - 1/s1) vanishes at c*
                let (s1, s2) = if regime == Regime::UpCrossing { (be, al) } else { (al, be) };
                let slope = 1.0 / s2 - 1.0 / s1;
                let c = if slope == 0.0 { a } else { ((p.x / s2 - p.y / s1) / slope).clamp(a, b) };
                at(c)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::ell_n;
    use crate::rng::RngStream;
    use crate::sampler::simulate_path;

    fn setup(n: usize, seed: u64) -> (PathSample, ModelParams, LikelihoodEvaluator) {
        let p = ModelParams::new(0.5, 0.2, 0.0).unwrap();
        let path = simulate_path(&p, n, 0.0, &mut RngStream::new(seed, 0)).unwrap();
        let ev = LikelihoodEvaluator::new(&path, &p);
        (path, p, ev)
    }

    #[test]
    fn matches_naive_sum() {
        let (path, p, ev) = setup(1000, 12);
        for j in -40..=40 {
            let theta = j as f64 * 7.3e-4;
            let a = ev.eval(theta);
            let b = ell_n(&path, &p, theta);
            assert!((a - b).abs() < 1e-10, "theta {theta}: {a} vs {b}");
        }
        assert_eq!(ev.eval(0.0), 0.0);
    }

    #[test]
    fn restriction_agrees_inside_and_gives_left_limit() {
        let (path, p, ev) = setup(500, 3);
        let mut levels: Vec<f64> = path.values().iter().copied().filter(|v| v.abs() < 0.05).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        for w in levels.windows(2).take(30) {
            let m = ev.interval_model(w[0], w[1]);
            let mid = 0.5 * (w[0] + w[1]);
            assert!((ev.restricted(&m, mid) - ell_n(&path, &p, mid)).abs() < 1e-10);
            // approaching the right end from inside
            let near = w[1] - 1e-12 * (w[1] - w[0]).max(1e-3);
            let left = ev.restricted(&m, w[1]);
            assert!((left - ell_n(&path, &p, near)).abs() < 1e-6);
            // and the value at the left end is the right limit
            assert!((ev.restricted(&m, w[0]) - ev.eval_level(w[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_dominate_values() {
        let (path, p, ev) = setup(1000, 5);
        let mut levels: Vec<f64> = path.values().to_vec();
        levels.extend([-1.0, 1.0, 0.0]);
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        for w in levels.windows(2).step_by(7) {
            let m = ev.interval_model(w[0], w[1]);
            let ub = ev.interval_upper_bound(&m);
            let bb = ev.block_upper_bound(w[0], w[1]);
            assert!(bb >= ub - 1e-9);
            for s in 0..=10 {
                let c = w[0] + (w[1] - w[0]) * s as f64 / 10.0;
                let v = ell_n(&path, &p, c);
                assert!(v <= ub + 1e-9 || s == 10, "interval bound {ub} < {v}");
                assert!(v <= bb + 1e-9, "block bound {bb} < {v}");
                assert!(ev.restricted(&m, c) <= ub + 1e-9);
            }
        }
        // wide blocks
        for k in 0..20 {
            let a = -0.3 + 0.03 * k as f64;
            let bb = ev.block_upper_bound(a, a + 0.03);
            for s in 0..=300 {
                let c = a + 1e-4 * s as f64;
                assert!(ell_n(&path, &p, c) <= bb + 1e-9);
            }
        }
    }
}
