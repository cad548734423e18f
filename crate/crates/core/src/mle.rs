//! Argsup maximum-likelihood estimate of the threshold.
//!
//! `l_n` is piecewise smooth in the level `c = rho0 + theta`, right-continuous,
//! with jumps only at observed values. The search is best-first
//! branch-and-bound over the intervals between breakpoints: blocks whose upper
//! bound falls below the incumbent are discarded; surviving intervals are
//! maximized by a dense sub-grid plus golden-section refinement of every local
//! maximum, and compared through `max(left limit, value)` at each breakpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::likelihood::{ell_n, IntervalModel, LikelihoodEvaluator};

/// Grid steps per separately bounded chunk of a wide interval.
const CHUNK: usize = 512;
use crate::model::ModelParams;
use crate::sampler::PathSample;

/// Closed search window for `theta`, containing 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let w = Self { lo, hi };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(ObmError::Domain(format!("degenerate search window [{}, {}]", self.lo, self.hi)));
        }
        if !(self.lo <= 0.0 && 0.0 <= self.hi) {
            return Err(ObmError::Domain(format!("search window [{}, {}] must contain 0", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lo <= theta && theta <= self.hi
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ArgsupConfig {
    pub window: Window,
    /// Sub-grid step in `theta`; `None` means `1/(100 n)`.
    pub grid_step: Option<f64>,
    /// Golden-section tolerance in `theta`.
    pub tol: f64,
    /// Candidates within this of the supremum count as ties.
    pub tie_tol: f64,
    /// Warn when the supremum exceeds the window-edge values by less than this.
    pub edge_margin: f64,
}

impl Default for ArgsupConfig {
    fn default() -> Self {
        Self { window: Window::default(), grid_step: None, tol: 1e-12, tie_tol: 1e-9, edge_margin: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgsupResult {
    pub rho_hat: f64,
    pub theta_hat: f64,
    /// Supremum of `l_n` over the window.
    pub value: f64,
    /// The supremum is a left limit strictly above the value at `rho_hat`.
    pub attained_as_left_limit: bool,
    pub candidates_examined: usize,
    pub intervals_searched: usize,
    /// Other `rho` attaining the supremum within `tie_tol`.
    pub ties: Vec<f64>,
    /// Supremum minus the larger of the two window-edge values.
    pub edge_margin: f64,
    pub edge_warning: bool,
}

/// Sorted distinct `{X_k - rho0 in window} ∪ {window ends, 0}`.
pub fn breakpoints(path: &PathSample, rho0: f64, window: Window) -> Vec<f64> {
    let mut v: Vec<f64> =
        path.values().iter().map(|x| x - rho0).filter(|&t| window.contains(t)).collect();
    v.extend([window.lo, window.hi, 0.0]);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Breakpoints as levels `c`, with data values kept bit-exact.
fn breakpoint_levels(path: &PathSample, rho0: f64, window: Window) -> Vec<f64> {
    let (lo, hi) = (rho0 + window.lo, rho0 + window.hi);
    let mut v: Vec<f64> = path.values().iter().copied().filter(|&x| lo <= x && x <= hi).collect();
    v.extend([lo, hi, rho0]);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    level: f64,
    value: f64,
    left_limit: bool,
}

struct Block {
    bound: f64,
    first: usize,
    last: usize,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Block {}
impl PartialOrd for Block {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Block {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger bound first; then leftmost for determinism
        self.bound.total_cmp(&other.bound).then_with(|| other.first.cmp(&self.first))
    }
}

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct Search<'a> {
    ev: &'a LikelihoodEvaluator,
    levels: Vec<f64>,
    step: f64,
    cfg: ArgsupConfig,
    candidates: Vec<Candidate>,
    best: f64,
    intervals: usize,
}

impl Search<'_> {
    fn push(&mut self, c: Candidate) {
        self.best = self.best.max(c.value);
        self.candidates.push(c);
    }

    fn process_interval(&mut self, i: usize) {
        self.intervals += 1;
        let (c_lo, c_hi) = (self.levels[i], self.levels[i + 1]);
        let ev = self.ev;
        let model = ev.interval_model(c_lo, c_hi);
        if ev.interval_upper_bound(&model) < self.best - self.cfg.tie_tol {
            return;
        }
        self.push(Candidate { level: c_lo, value: ev.eval_level(c_lo), left_limit: false });
        let left = ev.restricted(&model, c_hi);
        self.push(Candidate { level: c_hi, value: left, left_limit: true });

        let width = c_hi - c_lo;
        let segments = ((width / self.step).ceil() as usize).clamp(2, 1 << 26);
        let at = |j: usize| if j == segments { c_hi } else { c_lo + width * j as f64 / segments as f64 };
        let chunks = segments.div_ceil(CHUNK);
        for ch in 0..chunks {
            let (j0, j1) = (ch * CHUNK, ((ch + 1) * CHUNK).min(segments));
            // regimes are those of the whole open interval; only the far/near split narrows
            let sub;
            let model = if chunks == 1 {
                &model
            } else {
                sub = ev.interval_model(at(j0), at(j1));
                if ev.interval_upper_bound(&sub) < self.best - self.cfg.tie_tol {
                    continue;
                }
                &sub
            };
            self.scan(model, j0, j1, segments, &at, c_lo, c_hi);
        }
    }

    /// Sub-grid scan of grid indices `j0..=j1` plus refinement of local maxima.
    #[allow(clippy::too_many_arguments)]
    fn scan<F: Fn(usize) -> f64>(
        &mut self,
        model: &IntervalModel,
        j0: usize,
        j1: usize,
        segments: usize,
        at: &F,
        c_lo: f64,
        c_hi: f64,
    ) {
        let ev = self.ev;
        let vals: Vec<f64> = (j0..=j1).map(|j| ev.restricted(model, at(j))).collect();
        let interior = |j: usize| j > 0 && j < segments;
        if let Some(j) = (j0..=j1).filter(|&j| interior(j)).max_by(|&a, &b| vals[a - j0].total_cmp(&vals[b - j0])) {
            self.push(Candidate { level: at(j), value: vals[j - j0], left_limit: false });
        }
        let edge = self.cfg.tol * 10.0;
        for j in j0..=j1 {
            let v = vals[j - j0];
            let prev = (j > j0).then(|| vals[j - 1 - j0]);
            let next = (j < j1).then(|| vals[j + 1 - j0]);
            let ge = prev.is_none_or(|p| v >= p) && next.is_none_or(|q| v >= q);
            let strict = prev.is_some_and(|p| v > p) || next.is_some_and(|q| v > q);
            if !(ge && strict) {
                continue;
            }
            let (a, b) = (at(j.saturating_sub(1).max(j0)), at((j + 1).min(j1)));
            if ev.restricted_upper_bound(model, a, b) < self.best - self.cfg.tie_tol {
                continue;
            }
            let (c, fc) = golden_max(|c| ev.restricted(model, c), a, b, self.cfg.tol);
            if fc > v && c - c_lo > edge && c_hi - c > edge {
                self.push(Candidate { level: c, value: fc, left_limit: false });
            }
        }
    }
}

/// Argsup of `l_n` over the window under the `max(left limit, value)`
/// convention; ties go to the smallest `|theta|`, then the smallest `theta`.
pub fn argsup_mle(path: &PathSample, params0: &ModelParams, cfg: &ArgsupConfig) -> Result<ArgsupResult> {
    cfg.window.validate()?;
    let n = path.n() as f64;
    let step = cfg.grid_step.unwrap_or(1.0 / (100.0 * n));
    if !(step > 0.0 && step <= 0.1 / n * (1.0 + 1e-12)) {
        return Err(ObmError::Domain(format!("grid step must lie in (0, 0.1/n], got {step}")));
    }
    let rho0 = params0.rho;
    if params0.alpha == params0.beta {
        // the likelihood does not depend on the threshold
        return Ok(ArgsupResult {
            rho_hat: rho0,
            theta_hat: 0.0,
            value: 0.0,
            attained_as_left_limit: false,
            candidates_examined: 1,
            intervals_searched: 0,
            ties: Vec::new(),
            edge_margin: 0.0,
            edge_warning: false,
        });
    }

    let ev = LikelihoodEvaluator::new(path, params0);
    let levels = breakpoint_levels(path, rho0, cfg.window);
    let m = levels.len() - 1;
    let mut search = Search { ev: &ev, levels, step, cfg: *cfg, candidates: Vec::new(), best: f64::NEG_INFINITY, intervals: 0 };
    search.push(Candidate { level: rho0, value: 0.0, left_limit: false });
    let top = search.levels[m];
    search.push(Candidate { level: top, value: ev.eval_level(top), left_limit: false });

    let mut heap = BinaryHeap::new();
    heap.push(Block { bound: ev.block_upper_bound(search.levels[0], top), first: 0, last: m });
    while let Some(block) = heap.pop() {
        if block.bound < search.best - cfg.tie_tol {
            break;
        }
        if block.last - block.first == 1 {
            search.process_interval(block.first);
            continue;
        }
        let mid = (block.first + block.last) / 2;
        for (a, b) in [(block.first, mid), (mid, block.last)] {
            let bound = ev.block_upper_bound(search.levels[a], search.levels[b]);
            if bound >= search.best - cfg.tie_tol {
                heap.push(Block { bound, first: a, last: b });
            }
        }
    }

    let sup = search.best;
    let key = |c: &Candidate| ((c.level - rho0).abs(), c.level - rho0);
    let tied: Vec<Candidate> =
        search.candidates.iter().copied().filter(|c| c.value >= sup - cfg.tie_tol).collect();
    let chosen = *tied
        .iter()
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .expect("the origin is always a candidate");
    let attained_as_left_limit = chosen.left_limit && chosen.value > ev.eval_level(chosen.level) + cfg.tie_tol;
    let mut ties: Vec<f64> =
        tied.iter().map(|c| c.level).filter(|&l| (l - chosen.level).abs() > cfg.tie_tol).collect();
    ties.sort_by(f64::total_cmp);
    ties.dedup_by(|a, b| (*a - *b).abs() <= cfg.tie_tol);

    let lo_edge = ev.eval_level(search.levels[0]);
    let hi_model = ev.interval_model(search.levels[m - 1], top);
    let hi_edge = ev.restricted(&hi_model, top).max(ev.eval_level(top));
    let edge_margin = sup - lo_edge.max(hi_edge);
    let edge_warning = edge_margin < cfg.edge_margin;
    if edge_warning {
        log::warn!("argsup is within {edge_margin:.3e} of the window-edge likelihood; consider a wider window");
    }
    Ok(ArgsupResult {
        rho_hat: chosen.level,
        theta_hat: chosen.level - rho0,
        value: sup,
        attained_as_left_limit,
        candidates_examined: search.candidates.len(),
        intervals_searched: search.intervals,
        ties,
        edge_margin,
        edge_warning,
    })
}

/// Outcome of checking `l_n(theta) <= value` on a regular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub grid_points: usize,
    /// Points covered by an interval upper bound not exceeding `value`.
    pub certified: usize,
    /// Points where `l_n` was evaluated directly.
    pub evaluated: usize,
    /// Largest `l_n - value` among evaluated points (`-inf` if none).
    pub max_excess: f64,
}

impl DominanceReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_excess <= tol
    }
}

/// Check `l_n(window.lo + j step) <= value` for every grid index `j`.
///
/// Intervals between breakpoints whose rigorous upper bound is at most
/// `value` are certified wholesale; the remaining grid points are evaluated
/// with the direct pairwise sum.
pub fn verify_dominance(
    path: &PathSample,
    params0: &ModelParams,
    window: Window,
    step: f64,
    value: f64,
) -> Result<DominanceReport> {
    window.validate()?;
    if !(step > 0.0) {
        return Err(ObmError::Domain(format!("grid step must be positive, got {step}")));
    }
    let rho0 = params0.rho;
    let ev = LikelihoodEvaluator::new(path, params0);
    let levels = breakpoint_levels(path, rho0, window);
    let m = levels.len() - 1;
    let count = ((window.hi - window.lo) / step).round() as usize + 1;
    let mut bounds: Vec<Option<bool>> = vec![None; m];
    let mut pending = Vec::new();
    let mut i = 0;
    for j in 0..count {
        let theta = window.lo + j as f64 * step;
        let c = rho0 + theta;
        if c < levels[0] || c > levels[m] {
            pending.push(theta);
            continue;
        }
        while i + 1 < m && levels[i + 1] <= c {
            i += 1;
        }
        let ok = *bounds[i].get_or_insert_with(|| ev.block_upper_bound(levels[i], levels[i + 1]) <= value);
        if !ok {
            pending.push(theta);
        }
    }
    let max_excess = pending
        .par_iter()
        .map(|&theta| ell_n(path, params0, theta) - value)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(DominanceReport { grid_points: count, certified: count - pending.len(), evaluated: pending.len(), max_excess })
}
