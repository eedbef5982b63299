use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{fraction_at_most, median};
use crate::empirical::emp_maps;
use crate::error::{Error, Result};
use crate::linalg::{distance, norm};
use crate::model::{rho_to_beta, sample, MixtureParams};
use crate::population::{pop_mean, PopWeightMap};
use crate::quadrature::QuadratureGrid;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub constant: f64,
    /// Per trial, `max_θ ‖f_n(θ,ρ) − f(θ,ρ)‖ / (max{‖θ‖,|ρ|}·√(d log n/n))`.
    pub mean_sups: Vec<f64>,
    /// Per trial, `max_θ |h_n(ρ,θ) − h(ρ,θ)| / (‖θ‖·√(log n/n))`.
    pub weight_sups: Vec<f64>,
    pub median_mean_sup: f64,
    pub median_weight_sup: f64,
    pub fraction_mean_below: f64,
    pub fraction_weight_below: f64,
}

/// Normalized worst-case gap between the empirical and population maps over `theta_grid`.
///
/// Trial `t` samples with seed `derive_seed(base_seed, 0, t)`. Grid points where the
/// normalizer vanishes contribute 0 when the gap is exactly 0 (e.g. `θ = 0, ρ = 0`).
pub fn concentration_check(
    params: &MixtureParams,
    n: usize,
    theta_grid: &[Vec<f64>],
    rho: f64,
    trials: usize,
    base_seed: u64,
    constant: f64,
) -> Result<ConcentrationReport> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    if trials == 0 || n < 2 {
        return Err(Error::InvalidArgument("need trials >= 1 and n >= 2".into()));
    }
    rho_to_beta(rho)?;
    let d = params.d();
    let grid = QuadratureGrid::standard();
    let oracle_mean: Vec<Vec<f64>> =
        theta_grid.iter().map(|t| pop_mean(params, t, rho, grid.clone())).collect::<Result<_>>()?;
    let oracle_weight: Vec<f64> = theta_grid
        .iter()
        .map(|t| PopWeightMap::new(t, &params.theta_star, params.rho_star, grid.clone())?.eval(rho))
        .collect::<Result<_>>()?;
    let ln_ratio = (n as f64).ln() / n as f64;
    let omega_d = (d as f64 * ln_ratio).sqrt();
    let omega_1 = ln_ratio.sqrt();
    let ratio = |gap: f64, scale: f64| if gap == 0.0 { 0.0 } else { gap / scale };

    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let data = sample(params, n, derive_seed(base_seed, 0, t as u64))?;
            let mut mean_sup: f64 = 0.0;
            let mut weight_sup: f64 = 0.0;
            for ((theta, fm), hw) in theta_grid.iter().zip(&oracle_mean).zip(&oracle_weight) {
                let len = norm(theta);
                let (f_n, h_n) = emp_maps(&data, theta, rho)?;
                let gap = distance(&f_n, fm);
                mean_sup = mean_sup.max(ratio(gap, len.max(rho.abs()) * omega_d));
                let gap = (h_n - hw).abs();
                weight_sup = weight_sup.max(ratio(gap, len * omega_1));
            }
            Ok((mean_sup, weight_sup))
        })
        .collect::<Result<_>>()?;
    let (mean_sups, weight_sups): (Vec<f64>, Vec<f64>) = per_trial.into_iter().unzip();
    Ok(ConcentrationReport {
        n,
        d,
        trials,
        constant,
        median_mean_sup: median(&mean_sups).unwrap_or(f64::NAN),
        median_weight_sup: median(&weight_sups).unwrap_or(f64::NAN),
        fraction_mean_below: fraction_at_most(&mean_sups, constant),
        fraction_weight_below: fraction_at_most(&weight_sups, constant),
        mean_sups,
        weight_sups,
    })
}

/// `count` points on circles of radii in `(0, radius]` around the origin of the first two axes.
pub fn ring_grid(d: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    let rings = 5.min(count.max(1));
    let per_ring = count.div_ceil(rings);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let r = radius * ((i / per_ring) + 1) as f64 / rings as f64;
        let phi = 2.0 * std::f64::consts::PI * (i % per_ring) as f64 / per_ring as f64;
        let mut v = vec![0.0; d];
        v[0] = r * phi.cos();
        if d > 1 {
            v[1] = r * phi.sin();
        }
        out.push(v);
    }
    out
}
