use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ObmError, Result};
use crate::model::ModelParams;
use crate::sampler::PathSample;

use super::LikelihoodEvaluator;

/// `l_n` on a sorted grid of `theta`, with the left limits at the data
/// breakpoints inside the grid range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodLandscape {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// Observed values minus `rho0` inside the grid range, ascending.
    pub breakpoints: Vec<f64>,
    /// `(breakpoint, left limit of l_n there)`.
    pub left_limits: Vec<(f64, f64)>,
}

impl LikelihoodLandscape {
    /// CSV with header `theta,ell`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theta", "ell"])?;
        for (t, v) in self.thetas.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluate `l_n` on `thetas` (ascending), in parallel over the grid.
pub fn likelihood_landscape(path: &PathSample, params0: &ModelParams, thetas: &[f64]) -> Result<LikelihoodLandscape> {
    if thetas.is_empty() || thetas.windows(2).any(|w| !(w[0] < w[1])) || thetas.iter().any(|t| !t.is_finite()) {
        return Err(ObmError::Domain("landscape grid must be finite and strictly increasing".into()));
    }
    let ev = LikelihoodEvaluator::new(path, params0);
    let values: Vec<f64> = thetas.par_iter().map(|&t| ev.eval(t)).collect();
    let (lo, hi) = (thetas[0], thetas[thetas.len() - 1]);
    let rho0 = params0.rho;
    let mut all: Vec<f64> = path.values().to_vec();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let first = all.partition_point(|&x| x - rho0 < lo);
    let last = all.partition_point(|&x| x - rho0 <= hi);
    let left_limits: Vec<(f64, f64)> = (first..last)
        .into_par_iter()
        .map(|j| {
            let c = all[j];
            let from = if j > 0 { all[j - 1] } else { c - 1.0 };
            let model = ev.interval_model(from, c);
            (c - rho0, ev.restricted(&model, c))
        })
        .collect();
    let levels = &all[first..last];
    Ok(LikelihoodLandscape {
        thetas: thetas.to_vec(),
        values,
        breakpoints: levels.iter().map(|c| c - rho0).collect(),
        left_limits,
    })
}
