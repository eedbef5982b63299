use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{log_log_slope, median};
use crate::empirical::{EstimatorConfig, EstimatorRegistry};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, SCHEMA_VERSION};
use crate::model::{sample, MixtureParams, RHO_LIMIT};
use crate::rng::derive_seed;

pub const SWEEP_CSV_HEADER: [&str; 11] =
    ["d", "n", "eta", "rho_star", "trial", "estimator", "loss_l2", "loss_l0", "iterations", "branch", "error"];

/// Grid of `(d, n, η, ρ*)` cells, each run `trials` times with every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    pub eta: Vec<f64>,
    pub rho_star: Vec<f64>,
    pub trials: usize,
    pub estimators: Vec<String>,
    pub base_seed: u64,
    /// Shared estimator settings; the seed is replaced per trial.
    #[serde(default)]
    pub config: EstimatorConfig,
}

/// One grid point; `θ* = η·e₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub d: usize,
    pub n: usize,
    pub eta: f64,
    pub rho_star: f64,
}

impl SweepSpec {
    pub fn validate(&self, registry: &EstimatorRegistry) -> Result<()> {
        if self.d.is_empty() || self.n.is_empty() || self.eta.is_empty() || self.rho_star.is_empty() {
            return Err(Error::InvalidArgument("every grid (d, n, eta, rho_star) needs a value".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("estimator list is empty".into()));
        }
        for name in &self.estimators {
            registry.get(name)?;
        }
        if self.d.contains(&0) || self.n.contains(&0) {
            return Err(Error::InvalidArgument("d and n must be positive".into()));
        }
        if let Some(e) = self.eta.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return Err(Error::Domain(format!("eta={e} must be finite and nonnegative")));
        }
        if let Some(r) = self.rho_star.iter().find(|r| !(r.abs() <= RHO_LIMIT)) {
            return Err(Error::Domain(format!("rho_star={r} must satisfy |rho| < 1")));
        }
        self.config.validate()
    }

    /// Cells in `d`-major, then `n`, `η`, `ρ*` order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &n in &self.n {
                for &eta in &self.eta {
                    for &rho_star in &self.rho_star {
                        out.push(Cell { index: out.len(), d, n, eta, rho_star });
                    }
                }
            }
        }
        out
    }
}

/// Seed of the dataset for `(cell, trial)`.
pub fn data_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    derive_seed(base_seed, cell as u64, trial as u64)
}

/// Seed of the estimator's own randomness (e.g. a random start) for a dataset seed.
pub fn estimator_seed(data_seed: u64) -> u64 {
    derive_seed(data_seed, 1, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    pub eta: f64,
    pub rho_star: f64,
    pub trial: usize,
    pub estimator: String,
    pub loss_l2: Option<f64>,
    pub loss_l0: Option<f64>,
    pub iterations: Option<usize>,
    pub branch: Option<String>,
    pub error: Option<String>,
    #[serde(skip)]
    cell: usize,
    #[serde(skip)]
    slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Runs every `(cell × trial × estimator)`. Estimator failures land in the row's `error`
/// column; only invalid specs fail the whole sweep.
pub fn error_sweep(spec: &SweepSpec, registry: &EstimatorRegistry) -> Result<SweepResult> {
    spec.validate(registry)?;
    let jobs: Vec<(Cell, usize)> =
        spec.cells().into_iter().flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(cell, trial)| run_job(spec, registry, cell, trial))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.cell, r.trial, r.slot));
    Ok(SweepResult { rows })
}

fn run_job(spec: &SweepSpec, registry: &EstimatorRegistry, cell: Cell, trial: usize) -> Result<Vec<SweepRow>> {
    let params = MixtureParams::along_first_axis(cell.d, cell.eta, cell.rho_star)?;
    let seed = data_seed(spec.base_seed, cell.index, trial);
    let data = sample(&params, cell.n, seed);
    let cfg = EstimatorConfig { seed: estimator_seed(seed), ..spec.config.clone() };
    let mut rows = Vec::with_capacity(spec.estimators.len());
    for (slot, name) in spec.estimators.iter().enumerate() {
        let outcome = data
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|data| registry.run(name, data, &cfg).map_err(|e| e.to_string()));
        let mut row = SweepRow {
            d: cell.d,
            n: cell.n,
            eta: cell.eta,
            rho_star: cell.rho_star,
            trial,
            estimator: name.clone(),
            loss_l2: None,
            loss_l0: None,
            iterations: None,
            branch: None,
            error: None,
            cell: cell.index,
            slot,
        };
        match outcome {
            Ok(est) => {
                row.loss_l2 = est.loss_l2;
                row.loss_l0 = est.loss_l0;
                row.iterations = Some(est.iterations_used);
                row.branch = est.branch;
            }
            Err(msg) => row.error = Some(msg),
        }
        rows.push(row);
    }
    Ok(rows)
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.d.to_string(),
                r.n.to_string(),
                fmt_f64(r.eta),
                fmt_f64(r.rho_star),
                r.trial.to_string(),
                r.estimator.clone(),
                opt(r.loss_l2),
                opt(r.loss_l0),
                r.iterations.map(|i| i.to_string()).unwrap_or_default(),
                r.branch.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Medians per `(cell, estimator)` and log-log slopes of the median error against `n`.
    pub fn summary(&self) -> SweepSummary {
        let mut groups: BTreeMap<(usize, usize), Vec<&SweepRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.cell, r.slot)).or_default().push(r);
        }
        let cells: Vec<CellSummary> = groups
            .values()
            .map(|rows| {
                let first = rows[0];
                let pick = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(|r| f(r)).collect() };
                CellSummary {
                    d: first.d,
                    n: first.n,
                    eta: first.eta,
                    rho_star: first.rho_star,
                    estimator: first.estimator.clone(),
                    trials: rows.len(),
                    failures: rows.iter().filter(|r| r.error.is_some()).count(),
                    median_loss_l2: median(&pick(|r| r.loss_l2)),
                    median_loss_l0: median(&pick(|r| r.loss_l0)),
                    median_iterations: median(&pick(|r| r.iterations.map(|i| i as f64))),
                }
            })
            .collect();

        let mut lines: BTreeMap<(usize, u64, u64, String), Vec<&CellSummary>> = BTreeMap::new();
        for c in &cells {
            lines.entry((c.d, c.eta.to_bits(), c.rho_star.to_bits(), c.estimator.clone())).or_default().push(c);
        }
        let slopes = lines
            .into_values()
            .filter(|cs| cs.len() >= 2)
            .map(|cs| {
                let use_l2 = cs.iter().all(|c| c.median_loss_l2.is_some());
                let (ns, errs): (Vec<f64>, Vec<f64>) = cs
                    .iter()
                    .filter_map(|c| {
                        let e = if use_l2 { c.median_loss_l2 } else { c.median_loss_l0 };
                        e.map(|e| (c.n as f64, e))
                    })
                    .unzip();
                SlopeFit {
                    d: cs[0].d,
                    eta: cs[0].eta,
                    rho_star: cs[0].rho_star,
                    estimator: cs[0].estimator.clone(),
                    loss: if use_l2 { "l2" } else { "l0" }.into(),
                    points: ns.len(),
                    slope_log_error_vs_log_n: log_log_slope(&ns, &errs),
                }
            })
            .collect();
        SweepSummary { schema_version: SCHEMA_VERSION, rows: self.rows.len(), cells, slopes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub d: usize,
    pub n: usize,
    pub eta: f64,
    pub rho_star: f64,
    pub estimator: String,
    pub trials: usize,
    pub failures: usize,
    pub median_loss_l2: Option<f64>,
    pub median_loss_l0: Option<f64>,
    pub median_iterations: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub d: usize,
    pub eta: f64,
    pub rho_star: f64,
    pub estimator: String,
    /// `"l2"`, or `"l0"` for sign-free estimators.
    pub loss: String,
    pub points: usize,
    pub slope_log_error_vs_log_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub rows: usize,
    pub cells: Vec<CellSummary>,
    pub slopes: Vec<SlopeFit>,
}
