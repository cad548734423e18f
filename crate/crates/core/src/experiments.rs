//! Monte Carlo studies: likelihood landscapes, n-consistency and interval
//! coverage. Every CSV is written next to a JSON sidecar holding the full
//! configuration, its SHA-256 and the crate version.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ObmError, Result};
use crate::inference::{estimate_with_interval, local_time_calibrated, local_time_estimator, LocalTimeScale};
use crate::likelihood::{drift_constants, likelihood_landscape, LikelihoodEvaluator};
use crate::limit_law::{limit_params, limit_quantiles, LimitQuantiles, LimitSamplerConfig};
use crate::mle::{argsup_mle, ArgsupConfig, Window};
use crate::model::ModelParams;
use crate::rng::RngStream;
use crate::sampler::{simulate_path, PathSample};
use crate::stats::{quantile, slope_through_origin, wilson_interval};

pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest grid size and replication count accepted without `allow_large`.
pub const DESK_MAX_N: usize = 4000;
pub const DESK_MAX_REPLICATIONS: usize = 2000;

/// With a conditioned target `k`, give up after `k` times this many runs.
pub const CONDITIONED_CAP_FACTOR: usize = 20;

/// Regular grid `lo, lo + step, ..., hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|j| self.lo + j as f64 * self.step).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.step > 0.0) {
            return Err(ObmError::Config(format!(
                "{name} needs lo < hi and step > 0, got ({}, {}, {})",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub beta: f64,
    pub rho0: f64,
    pub x0: f64,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Miscoverage of the confidence interval.
    pub level: f64,
    pub output_dir: PathBuf,
    /// Grid for the per-path landscape files, in `theta`.
    pub theta_grid: Grid,
    /// Grid for the averaged landscape, in `z = n theta`.
    pub z_grid: Grid,
    pub window: Window,
    pub n_mc: usize,
    pub tail_tol: f64,
    /// Runs with a local-time estimate at or below this are excluded from
    /// conditioned statistics.
    pub local_time_threshold: f64,
    pub local_time_scale: LocalTimeScale,
    /// Run replications in order until this many pass the local-time
    /// threshold; `replications` is then ignored.
    pub conditioned_target: Option<usize>,
    /// Per-path landscape files written (the first paths).
    pub max_path_files: usize,
    /// Lift the desk-scale limits on `n` and replications.
    pub allow_large: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.2,
            rho0: 0.0,
            x0: 0.0,
            n_values: vec![1000],
            replications: 50,
            seed: 1,
            level: 0.1,
            output_dir: PathBuf::from("out"),
            theta_grid: Grid { lo: -1.0, hi: 1.0, step: 1e-6 },
            z_grid: Grid { lo: -20.0, hi: 20.0, step: 0.1 },
            window: Window::default(),
            n_mc: 100_000,
            tail_tol: 1e-6,
            local_time_threshold: 0.1,
            local_time_scale: LocalTimeScale::Calibrated,
            conditioned_target: None,
            max_path_files: 3,
            allow_large: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| ObmError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ObmError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta, self.rho0).map_err(|e| ObmError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if !self.x0.is_finite() {
            return Err(ObmError::Config("x0 must be finite".into()));
        }
        if self.replications == 0 {
            return Err(ObmError::Config("replications must be at least 1".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(ObmError::Config("n_values must be a nonempty list of positive sizes".into()));
        }
        self.theta_grid.validate("theta_grid")?;
        self.z_grid.validate("z_grid")?;
        self.window.validate().map_err(|e| ObmError::Config(e.to_string()))?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(ObmError::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 0.01) {
            return Err(ObmError::Config(format!("tail_tol must lie in (0, 0.01], got {}", self.tail_tol)));
        }
        if self.n_mc < 1000 {
            return Err(ObmError::Config(format!("n_mc must be at least 1000, got {}", self.n_mc)));
        }
        if self.conditioned_target == Some(0) {
            return Err(ObmError::Config("conditioned_target must be at least 1".into()));
        }
        if !self.allow_large {
            let n_max = self.n_values.iter().copied().max().unwrap_or(0);
            let reps = self.conditioned_target.unwrap_or(self.replications);
            if n_max > DESK_MAX_N || reps > DESK_MAX_REPLICATIONS {
                return Err(ObmError::Config(format!(
                    "n up to {DESK_MAX_N} and at most {DESK_MAX_REPLICATIONS} replications unless allow_large is set"
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    fn argsup(&self) -> ArgsupConfig {
        ArgsupConfig { window: self.window, ..Default::default() }
    }

    /// Stream id of replication `rep`: `n_index` 0 is the landscape study,
    /// `i + 1` the `i`-th entry of `n_values` in the other studies.
    pub fn stream(n_index: usize, rep: usize) -> u64 {
        ((n_index as u64) << 32) | rep as u64
    }

    /// The path a study simulates for replication `rep`.
    pub fn replication_path(&self, n_index: usize, n: usize, rep: usize) -> Result<PathSample> {
        self.simulate(&self.params()?, n, Self::stream(n_index, rep))
    }

    fn simulate(&self, params: &ModelParams, n: usize, stream: u64) -> Result<PathSample> {
        simulate_path(params, n, self.x0, &mut RngStream::new(self.seed, stream))
    }
}

#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    kind: &'a str,
    crate_version: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a S>,
}

/// Write rows as CSV and a JSON sidecar with provenance.
fn write_with_sidecar<R: Serialize, S: Serialize>(
    cfg: &ExperimentConfig,
    kind: &str,
    file: &Path,
    rows: &[R],
    summary: Option<&S>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(file)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_sidecar(cfg, kind, &file.with_extension("json"), summary)
}

fn write_sidecar<S: Serialize>(cfg: &ExperimentConfig, kind: &str, file: &Path, summary: Option<&S>) -> Result<()> {
    let side = Sidecar { kind, crate_version: CRATE_VERSION, config_hash: cfg.hash(), config: cfg, summary };
    let mut out = BufWriter::new(File::create(file)?);
    serde_json::to_writer_pretty(&mut out, &side)?;
    out.flush()?;
    Ok(())
}

/// Outcome of [`run_likelihood_landscape`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSummary {
    pub n: usize,
    pub paths: usize,
    /// Mean local-time estimate at the true threshold.
    pub mean_local_time: f64,
    /// Least-squares slopes of the averaged landscape on `|z|`.
    pub slope_pos: f64,
    pub slope_neg: f64,
    /// `b * mean_local_time` and `b' * mean_local_time`.
    pub expected_slope_pos: f64,
    pub expected_slope_neg: f64,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct AverageRow {
    z: f64,
    ell_mean: f64,
}

#[derive(Serialize)]
struct ThetaRow {
    theta: f64,
    ell: f64,
}

/// Simulate `replications` paths at the first `n`, write per-path landscapes
/// over `theta_grid` for the first `max_path_files` paths, and the landscape
/// averaged over all paths on the `z = n theta` grid.
pub fn run_likelihood_landscape(cfg: &ExperimentConfig) -> Result<LandscapeSummary> {
    cfg.validate()?;
    let params = cfg.params()?;
    let n = cfg.n_values[0];
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let zs = cfg.z_grid.points();
    let thetas: Vec<f64> = zs.iter().map(|z| z / n as f64).collect();
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let path = cfg.simulate(&params, n, ExperimentConfig::stream(0, rep))?;
            let ev = LikelihoodEvaluator::new(&path, &params);
            let values: Vec<f64> = thetas.iter().map(|&t| ev.eval(t)).collect();
            let l_hat = cfg.local_time_scale.estimate(&path, params.rho, params.alpha, params.beta);
            Ok((path, values, l_hat))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    for (rep, (path, _, _)) in runs.iter().enumerate().take(cfg.max_path_files) {
        let land = likelihood_landscape(path, &params, &cfg.theta_grid.points())?;
        let rows: Vec<ThetaRow> =
            land.thetas.iter().zip(&land.values).map(|(&theta, &ell)| ThetaRow { theta, ell }).collect();
        let file = dir.join(format!("landscape_path_{rep:03}.csv"));
        write_with_sidecar(cfg, "landscape_path", &file, &rows, Some(&serde_json::json!({"rep": rep, "n": n})))?;
        files.push(file);
    }

    let reps = runs.len() as f64;
    let mean: Vec<f64> = (0..zs.len()).map(|j| runs.iter().map(|r| r.1[j]).sum::<f64>() / reps).collect();
    let mean_local_time = runs.iter().map(|r| r.2).sum::<f64>() / reps;
    let side = |pos: bool| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            zs.iter().zip(&mean).filter(|(z, _)| if pos { **z > 0.0 } else { **z < 0.0 }).map(|(z, v)| (z.abs(), *v)).unzip();
        if x.is_empty() {
            0.0
        } else {
            slope_through_origin(&x, &y)
        }
    };
    let c = drift_constants(params.alpha, params.beta);
    let summary = LandscapeSummary {
        n,
        paths: runs.len(),
        mean_local_time,
        slope_pos: side(true),
        slope_neg: side(false),
        expected_slope_pos: c.b * mean_local_time,
        expected_slope_neg: c.b_prime * mean_local_time,
        files: Vec::new(),
    };
    let rows: Vec<AverageRow> = zs.iter().zip(&mean).map(|(&z, &ell_mean)| AverageRow { z, ell_mean }).collect();
    let file = dir.join("landscape_average.csv");
    write_with_sidecar(cfg, "landscape_average", &file, &rows, Some(&summary))?;
    files.push(file);
    Ok(LandscapeSummary { files, ..summary })
}

/// One replication of the consistency or coverage study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub rep: usize,
    pub rho_hat: f64,
    pub scaled_error: f64,
    pub local_time_hat: f64,
    pub local_time_raw: f64,
    pub local_time_at_truth: f64,
    pub conditioned: bool,
    pub attained_as_left_limit: bool,
    pub edge_warning: bool,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub runs: usize,
    pub conditioned: usize,
    /// Quantiles of `n |rho_hat - rho0|` over conditioned runs.
    pub q50_scaled: f64,
    pub q90_scaled: f64,
    /// Median of `|rho_hat - rho0|` over conditioned runs.
    pub median_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub runs: usize,
    pub conditioned: usize,
    pub covered: usize,
    pub coverage: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

fn run_replications(cfg: &ExperimentConfig, quantiles: Option<&LimitQuantiles>) -> Result<Vec<RunRecord>> {
    let params = cfg.params()?;
    let argsup = cfg.argsup();
    let run = |i: usize, n: usize, rep: usize| one_run(cfg, &params, &argsup, quantiles, i, n, rep);
    let Some(target) = cfg.conditioned_target else {
        let jobs: Vec<(usize, usize, usize)> = cfg
            .n_values
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| (0..cfg.replications).map(move |rep| (i + 1, n, rep)))
            .collect();
        return jobs.into_par_iter().map(|(i, n, rep)| run(i, n, rep)).collect();
    };
    let cap = target.saturating_mul(CONDITIONED_CAP_FACTOR);
    let mut out = Vec::new();
    for (i, &n) in cfg.n_values.iter().enumerate() {
        let mut records: Vec<RunRecord> = Vec::new();
        let mut kept = 0;
        while kept < target {
            let start = records.len();
            if start >= cap {
                return Err(ObmError::Numerical(format!(
                    "only {kept} of {target} runs at n = {n} passed the local-time threshold after {cap} replications"
                )));
            }
            let batch = (target - kept).max(64).min(cap - start);
            let fresh = (start..start + batch).into_par_iter().map(|rep| run(i + 1, n, rep)).collect::<Result<Vec<_>>>()?;
            kept += fresh.iter().filter(|r| r.conditioned).count();
            records.extend(fresh);
        }
        // keep everything up to and including the `target`-th conditioned run
        let mut seen = 0;
        let cut = records
            .iter()
            .position(|r| {
                seen += usize::from(r.conditioned);
                seen == target
            })
            .expect("target reached");
        records.truncate(cut + 1);
        out.extend(records);
    }
    Ok(out)
}

fn one_run(
    cfg: &ExperimentConfig,
    params: &ModelParams,
    argsup: &ArgsupConfig,
    quantiles: Option<&LimitQuantiles>,
    n_index: usize,
    n: usize,
    rep: usize,
) -> Result<RunRecord> {
    let path = cfg.simulate(params, n, ExperimentConfig::stream(n_index, rep))?;
    let (est, ci) = match quantiles {
        Some(q) => {
            let (est, report) = estimate_with_interval(&path, params, argsup, q, cfg.local_time_scale)?;
            (est, Some(report))
        }
        None => (argsup_mle(&path, params, argsup)?, None),
    };
    let l_hat = cfg.local_time_scale.estimate(&path, est.rho_hat, params.alpha, params.beta);
    let (ci_lo, ci_hi) = ci.map_or((f64::NAN, f64::NAN), |r| (r.ci_lo, r.ci_hi));
    Ok(RunRecord {
        n,
        rep,
        rho_hat: est.rho_hat,
        scaled_error: n as f64 * (est.rho_hat - cfg.rho0).abs(),
        local_time_hat: l_hat,
        local_time_raw: local_time_estimator(&path, est.rho_hat),
        local_time_at_truth: local_time_calibrated(&path, cfg.rho0, params.alpha, params.beta),
        conditioned: l_hat > cfg.local_time_threshold,
        attained_as_left_limit: est.attained_as_left_limit,
        edge_warning: est.edge_warning,
        ci_lo,
        ci_hi,
        covered: ci.is_some_and(|r| r.contains(cfg.rho0)),
    })
}

/// Quantiles of `n |rho_hat - rho0|` per `n` over runs with enough local time.
pub fn run_consistency_study(cfg: &ExperimentConfig) -> Result<Vec<ConsistencyRow>> {
    cfg.validate()?;
    if cfg.n_values.len() < 3 {
        return Err(ObmError::Config("the consistency study needs at least three values of n".into()));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let records = run_replications(cfg, None)?;
    let table = summarize_consistency(cfg, &records);
    write_with_sidecar(cfg, "consistency_runs", &cfg.output_dir.join("consistency_runs.csv"), &records, None::<&()>)?;
    write_with_sidecar(cfg, "consistency_summary", &cfg.output_dir.join("consistency_summary.csv"), &table, Some(&table))?;
    Ok(table)
}

fn summarize_consistency(cfg: &ExperimentConfig, records: &[RunRecord]) -> Vec<ConsistencyRow> {
    cfg.n_values
        .iter()
        .map(|&n| {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            let kept: Vec<f64> = runs.iter().filter(|r| r.conditioned).map(|r| r.scaled_error).collect();
            let (q50, q90, med) = if kept.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                (quantile(&kept, 0.5), quantile(&kept, 0.9), quantile(&kept, 0.5) / n as f64)
            };
            ConsistencyRow {
                n,
                runs: runs.len(),
                conditioned: kept.len(),
                q50_scaled: q50,
                q90_scaled: q90,
                median_abs_error: med,
            }
        })
        .collect()
}

/// Empirical coverage of the asymptotic interval per `n`.
pub fn run_coverage_study(cfg: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let lp = limit_params(cfg.alpha, cfg.beta).map_err(|e| ObmError::Config(format!("coverage study: {e}")))?;
    let sampler_cfg = LimitSamplerConfig { tail_tol: cfg.tail_tol, ..Default::default() };
    let q = limit_quantiles(&lp, cfg.level, cfg.n_mc, cfg.seed ^ 0x9E37_79B9_7F4A_7C15, sampler_cfg)?;
    let records = run_replications(cfg, Some(&q))?;
    let table: Vec<CoverageRow> = cfg
        .n_values
        .iter()
        .map(|&n| {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            let kept: Vec<&&RunRecord> = runs.iter().filter(|r| r.conditioned).collect();
            let covered = kept.iter().filter(|r| r.covered).count();
            let (wilson_lo, wilson_hi) = wilson_interval(covered, kept.len(), 0.95);
            CoverageRow {
                n,
                runs: runs.len(),
                conditioned: kept.len(),
                covered,
                coverage: if kept.is_empty() { f64::NAN } else { covered as f64 / kept.len() as f64 },
                wilson_lo,
                wilson_hi,
                q_lo: q.q_lo,
                q_hi: q.q_hi,
            }
        })
        .collect();
    write_with_sidecar(cfg, "coverage_runs", &cfg.output_dir.join("coverage_runs.csv"), &records, Some(&q))?;
    write_with_sidecar(cfg, "coverage_summary", &cfg.output_dir.join("coverage_summary.csv"), &table, Some(&table))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            n_values: vec![100, 200, 400],
            replications: 6,
            output_dir: dir.to_path_buf(),
            theta_grid: Grid { lo: -0.05, hi: 0.05, step: 1e-3 },
            n_mc: 1000,
            max_path_files: 1,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig { replications: 0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ObmError::Config(_))));
        let big = ExperimentConfig { n_values: vec![10_000], ..Default::default() };
        assert!(big.validate().is_err());
        assert!(ExperimentConfig { allow_large: true, ..big }.validate().is_ok());
        let parsed: ExperimentConfig = serde_json::from_str(r#"{"alpha": 0.3, "n_values": [10, 20]}"#).unwrap();
        assert_eq!((parsed.alpha, parsed.beta), (0.3, 0.2));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"alpah": 1}"#).is_err());
    }

    #[test]
    fn flat_landscape_when_volatilities_match() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { alpha: 0.3, beta: 0.3, replications: 1, ..small(dir.path()) };
        let s = run_likelihood_landscape(&cfg).unwrap();
        assert_eq!(s.files.len(), 2);
        let text = fs::read_to_string(dir.path().join("landscape_path_000.csv")).unwrap();
        assert!(text.starts_with("theta,ell\n"));
        for line in text.lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(v.abs() < 1e-9, "{line}");
        }
        assert!(dir.path().join("landscape_average.json").exists());
    }

    #[test]
    fn consistency_is_reproducible_and_trivial_without_signal() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let a = run_consistency_study(&cfg).unwrap();
        let b = run_consistency_study(&cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let flat = ExperimentConfig { alpha: 0.2, ..small(dir.path()) };
        for row in run_consistency_study(&flat).unwrap() {
            assert!(row.conditioned == 0 || (row.q50_scaled == 0.0 && row.q90_scaled == 0.0));
        }
        let short = ExperimentConfig { n_values: vec![100, 200], ..small(dir.path()) };
        assert!(run_consistency_study(&short).is_err());
    }

    #[test]
    fn coverage_outputs_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { n_values: vec![200], replications: 10, ..small(dir.path()) };
        let a = run_coverage_study(&cfg).unwrap();
        assert_eq!(a, run_coverage_study(&cfg).unwrap());
        assert_eq!(a[0].runs, 10);
        assert!(a[0].q_lo <= a[0].q_hi);
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("coverage_summary.json")).unwrap()).unwrap();
        assert_eq!(side["config_hash"].as_str().unwrap(), cfg.hash());
        assert_eq!(side["crate_version"].as_str().unwrap(), CRATE_VERSION);
        let targeted = ExperimentConfig { conditioned_target: Some(5), ..cfg.clone() };
        let t = run_coverage_study(&targeted).unwrap();
        assert_eq!(t[0].conditioned, 5);
        assert!(t[0].runs >= 5);
    }

    #[test]
    fn coverage_nonincreasing_in_level() {
        let dir = tempfile::tempdir().unwrap();
        let base = ExperimentConfig { n_values: vec![300], replications: 40, ..small(dir.path()) };
        let mut last = f64::INFINITY;
        for level in [0.05, 0.2, 0.5, 0.9] {
            let row = run_coverage_study(&ExperimentConfig { level, ..base.clone() }).unwrap().remove(0);
            assert!(row.coverage <= last, "level {level}: {} > {last}", row.coverage);
            last = row.coverage;
        }
    }
}
