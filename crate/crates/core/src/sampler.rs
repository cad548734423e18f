//! Exact simulation of discretely observed paths.
//!
//! Each transition is drawn by rejection from the Gaussian envelope of
//! [`crate::model::envelope`]; the expected number of proposals per draw is
//! the envelope constant.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::model::{envelope, log_transition_density, ModelParams};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Proposals allowed per transition before reporting an internal fault.
pub const REJECTION_CAP: usize = 1_000_000;

/// Observations `X_0, X_{1/n}, ..., X_1` on the grid `k/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample<T = f64> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> PathSample<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(ObmError::Domain(format!(
                "a path needs at least two observations, got {}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(ObmError::Domain(format!("observation {k} is not finite")));
        }
        Ok(Self { n: values.len() - 1, values })
    }

    /// Grid size `n` (number of increments).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> T {
        self.values[0]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Step `1/n`.
    pub fn dt(&self) -> T {
        T::one() / T::from_usize(self.n).expect("grid size representable")
    }

    /// Consecutive pairs `(X_{(k-1)/n}, X_{k/n})`, `k = 1..=n`.
    pub fn pairs(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.values.windows(2).map(|w| (w[0], w[1]))
    }

    /// The same path shifted by `c`.
    pub fn shifted(&self, c: T) -> Self {
        Self { n: self.n, values: self.values.iter().map(|&v| v + c).collect() }
    }
}

/// Draw `X_t` given `X_0 = x`.
pub fn sample_transition(params: &ModelParams, t: f64, x: f64, rng: &mut RngStream) -> Result<f64> {
    sample_transition_counted(params, t, x, rng).map(|(y, _)| y)
}

/// As [`sample_transition`], also returning the number of proposals used.
pub fn sample_transition_counted(
    params: &ModelParams,
    t: f64,
    x: f64,
    rng: &mut RngStream,
) -> Result<(f64, usize)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ObmError::Domain(format!("time step must be positive, got {t}")));
    }
    let env = envelope(params, t, x);
    for proposals in 1..=REJECTION_CAP {
        let z: f64 = rng.sample(StandardNormal);
        let y = env.mean + env.std * z;
        let log_ratio = log_transition_density(params, t, x, y)? - env.log_bound(y);
        let u: f64 = rng.random();
        // u in [0,1); accept u < p / (C phi)
        if u.ln() < log_ratio {
            return Ok((y, proposals));
        }
    }
    Err(ObmError::InternalFault(format!(
        "rejection sampler exceeded {REJECTION_CAP} proposals (params {params:?}, t={t}, x={x})"
    )))
}

/// Markov chain of `n` exact transitions with step `1/n` started at `x0`.
pub fn simulate_path(params: &ModelParams, n: usize, x0: f64, rng: &mut RngStream) -> Result<PathSample> {
    if n == 0 {
        return Err(ObmError::Domain("grid size must be at least 1".into()));
    }
    if !x0.is_finite() {
        return Err(ObmError::Domain(format!("initial value must be finite, got {x0}")));
    }
    let t = 1.0 / n as f64;
    let mut values = Vec::with_capacity(n + 1);
    values.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = sample_transition(params, t, x, rng)?;
        values.push(x);
    }
    PathSample::new(values)
}

/// Provenance stored next to an exported path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub n: usize,
    pub x0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl PathMetadata {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta, self.rho)
    }
}

#[derive(Serialize, Deserialize)]
struct PathRow {
    k: usize,
    x: f64,
}

/// Write the path as CSV with header `k,x`.
pub fn write_path_csv<W: Write>(path: &PathSample, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (k, &x) in path.values().iter().enumerate() {
        w.serialize(PathRow { k, x })?;
    }
    w.flush()?;
    Ok(())
}

/// Read a `k,x` CSV; rows must be `k = 0, 1, ..., n` in order.
pub fn read_path_csv<R: Read>(reader: R) -> Result<PathSample> {
    let mut r = csv::Reader::from_reader(reader);
    let mut values = Vec::new();
    for (expected, row) in r.deserialize::<PathRow>().enumerate() {
        let row = row?;
        if row.k != expected {
            return Err(ObmError::Config(format!("row {expected} has k = {}", row.k)));
        }
        values.push(row.x);
    }
    PathSample::new(values)
}

/// Write `<stem>.csv` and its `<stem>.json` sidecar.
pub fn export_path(path: &PathSample, meta: &PathMetadata, csv_path: &Path) -> Result<()> {
    write_path_csv(path, BufWriter::new(File::create(csv_path)?))?;
    let mut side = BufWriter::new(File::create(csv_path.with_extension("json"))?);
    serde_json::to_writer_pretty(&mut side, meta)?;
    side.flush()?;
    Ok(())
}

/// Read a path CSV and, when present, its JSON sidecar.
pub fn import_path(csv_path: &Path) -> Result<(PathSample, Option<PathMetadata>)> {
    let path = read_path_csv(BufReader::new(File::open(csv_path)?))?;
    let side = csv_path.with_extension("json");
    let meta = if side.exists() {
        let meta: PathMetadata = serde_json::from_reader(BufReader::new(File::open(side)?))?;
        if meta.n != path.n() {
            return Err(ObmError::Config(format!(
                "sidecar says n = {} but the csv has {} increments",
                meta.n,
                path.n()
            )));
        }
        Some(meta)
    } else {
        None
    };
    Ok((path, meta))
}
