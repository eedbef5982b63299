//! Deterministic property checks of the population maps and the estimators.
//!
//! Each check scans a fixed grid and reports the worst case it saw.

use serde::{Deserialize, Serialize};

use crate::empirical::{
    em_balanced_sign_corrected, em_mean_estimate, spectral_from_second_moment, EstimatorConfig, InitKind,
};
use crate::error::Result;
use crate::fixed_point::{find_fixed_points_1d, iterate, StopRule, DEFAULT_SCAN_POINTS};
use crate::model::{delta_to_beta, loss, mean_log_likelihood, sample, LossKind, MixtureParams};
use crate::population::{s_function, PopMeanMap1D, PopWeightMap, SignalOrthogonalMap};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }

    fn from_result(name: &str, r: Result<CheckOutcome>) -> Self {
        r.unwrap_or_else(|e| Self::new(name, false, format!("error: {e}")))
    }
}

pub const ETA_GRID: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const DELTA_GRID: [f64; 4] = [0.05, 0.2, 0.35, 0.45];

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn cells() -> impl Iterator<Item = (f64, f64)> {
    ETA_GRID.into_iter().flat_map(|e| DELTA_GRID.into_iter().map(move |d| (e, d)))
}

/// `|f(η) − η| ≤ 1e−7`.
pub fn check_consistency() -> CheckOutcome {
    let name = "consistency f(eta) = eta";
    CheckOutcome::from_result(
        name,
        (|| {
            let mut worst: f64 = 0.0;
            for (eta, delta) in cells() {
                let map = PopMeanMap1D::matched(eta, delta)?;
                worst = worst.max((map.eval(eta) - eta).abs());
            }
            Ok(CheckOutcome::new(name, worst <= 1e-7, format!("max |f(eta)-eta| = {worst:.3e} (bound 1e-7)")))
        })(),
    )
}

/// The only fixed point in `[0.01, 3]` is `η`, to 1e−6.
pub fn check_unique_positive_root() -> CheckOutcome {
    let name = "unique positive fixed point";
    CheckOutcome::from_result(
        name,
        (|| {
            let mut bad = Vec::new();
            let mut worst: f64 = 0.0;
            for (eta, delta) in cells() {
                let map = PopMeanMap1D::matched(eta, delta)?;
                let roots = find_fixed_points_1d(|t| map.eval(t), 0.01, 3.0, DEFAULT_SCAN_POINTS)?;
                if roots.len() != 1 || (roots[0] - eta).abs() > 1e-6 {
                    bad.push(format!("(eta={eta}, delta={delta}) -> {roots:?}"));
                } else {
                    worst = worst.max((roots[0] - eta).abs());
                }
            }
            let detail = if bad.is_empty() { format!("max |root-eta| = {worst:.3e}") } else { bad.join("; ") };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// Negative fixed points lie in `(−η, 0)`.
pub fn check_negative_roots_confined() -> CheckOutcome {
    let name = "negative fixed points in (-eta, 0)";
    CheckOutcome::from_result(
        name,
        (|| {
            let mut bad = Vec::new();
            let mut found = 0;
            for (eta, delta) in cells() {
                let map = PopMeanMap1D::matched(eta, delta)?;
                let roots = find_fixed_points_1d(|t| map.eval(t), -(eta + 2.0), -1e-6, DEFAULT_SCAN_POINTS)?;
                found += roots.len();
                if roots.iter().any(|&r| !(r > -eta && r < 0.0)) {
                    bad.push(format!("(eta={eta}, delta={delta}) -> {roots:?}"));
                }
            }
            let detail = if bad.is_empty() { format!("{found} negative roots, all inside") } else { bad.join("; ") };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// `∂f/∂δ` has the sign of `θ − η`, and vanishes to 1e−7 at `θ = η`.
pub fn check_delta_pivot() -> CheckOutcome {
    let name = "pivot at theta = eta under changes of delta";
    CheckOutcome::from_result(
        name,
        (|| {
            let h = 1e-4;
            let mut bad = Vec::new();
            let mut pivot_worst: f64 = 0.0;
            for eta in [0.5, 1.0] {
                for i in 0..20 {
                    let theta = 2.0 * eta * (i + 1) as f64 / 20.0;
                    for delta in linspace(0.025, 0.475, 20) {
                        let up = PopMeanMap1D::matched(eta, delta + h)?.eval(theta);
                        let down = PopMeanMap1D::matched(eta, delta - h)?.eval(theta);
                        let diff = (up - down) / (2.0 * h);
                        let ok = if i == 9 {
                            pivot_worst = pivot_worst.max(diff.abs());
                            diff.abs() <= 1e-7
                        } else if theta < eta {
                            diff < 0.0
                        } else {
                            diff > 0.0
                        };
                        if !ok {
                            bad.push(format!("(eta={eta}, theta={theta}, delta={delta}) -> {diff:.3e}"));
                        }
                    }
                }
            }
            let detail = if bad.is_empty() {
                format!("800 points; max |df/ddelta| at the pivot = {pivot_worst:.3e}")
            } else {
                bad.join("; ")
            };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// From `θ₀ = 0.2`, `η = 1`: the `δ = 0.1` trajectory is strictly closer to `η` than the
/// `δ = 0.4` one for `t = 1..50`.
pub fn check_delta_dominance() -> CheckOutcome {
    let name = "lower delta converges faster";
    CheckOutcome::from_result(
        name,
        (|| {
            let fast = PopMeanMap1D::matched(1.0, 0.1)?;
            let slow = PopMeanMap1D::matched(1.0, 0.4)?;
            // Errors e = η − θ, iterated without cancellation.
            let a = iterate(|e| vec![fast.error_step(e[0])], vec![0.8], StopRule::fixed(50))?;
            let b = iterate(|e| vec![slow.error_step(e[0])], vec![0.8], StopRule::fixed(50))?;
            let bad: Vec<usize> = (1..=50).filter(|&t| !(a.iterates[t][0].abs() < b.iterates[t][0].abs())).collect();
            let detail = format!(
                "|e_50| = {:.3e} (delta=0.1) vs {:.3e} (delta=0.4); violations at t = {bad:?}",
                a.iterates[50][0].abs(),
                b.iterates[50][0].abs()
            );
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// `G(a,0) = 0`, `G(a,b|η,δ) ≤ G(a,b|η,½) + 1e−9`, and `η ↦ G` decreasing on `[0, a + b²/a]`.
pub fn check_orthogonal_map() -> CheckOutcome {
    let name = "orthogonal map G";
    CheckOutcome::from_result(
        name,
        (|| {
            let grid = linspace(0.2, 2.0, 10);
            let deltas = [0.05, 0.2, 0.35, 0.45];
            let mut bad = Vec::new();
            let mut zero_worst: f64 = 0.0;
            for &delta in &deltas {
                let map = SignalOrthogonalMap::matched(1.0, delta)?;
                let half = SignalOrthogonalMap::matched(1.0, 0.5)?;
                for &a in &grid {
                    let g0 = map.orthogonal(a, 0.0);
                    zero_worst = zero_worst.max(g0.abs());
                    if g0.abs() > 1e-10 {
                        bad.push(format!("G({a},0|delta={delta}) = {g0:.3e}"));
                    }
                    for &b in &grid {
                        let (g, gh) = (map.orthogonal(a, b), half.orthogonal(a, b));
                        if g > gh + 1e-9 {
                            bad.push(format!("G({a},{b}|delta={delta}) = {g} > {gh}"));
                        }
                        let etas = linspace(0.0, a + b * b / a, 20);
                        let mut prev = f64::INFINITY;
                        for &eta in &etas {
                            let v = SignalOrthogonalMap::matched(eta, delta)?.orthogonal(a, b);
                            if v > prev + 1e-12 {
                                bad.push(format!("G({a},{b}|eta={eta}, delta={delta}) increased"));
                            }
                            prev = v;
                        }
                    }
                }
            }
            let detail = if bad.is_empty() {
                format!("400 (a,b,delta) points; max |G(a,0)| = {zero_worst:.3e}")
            } else {
                bad.truncate(10);
                bad.join("; ")
            };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// `s(u) < 0` on `[−20, 20]` with step 0.01.
pub fn check_s_negative() -> CheckOutcome {
    let name = "s(u) < 0";
    CheckOutcome::from_result(
        name,
        (|| {
            let mut worst = f64::NEG_INFINITY;
            for delta in [0.05, 0.2, 0.4] {
                let beta = delta_to_beta(delta)?;
                for i in 0..=4000 {
                    let u = -20.0 + 0.01 * i as f64;
                    worst = worst.max(s_function(u, beta, delta)?);
                }
            }
            Ok(CheckOutcome::new(name, worst < 0.0, format!("max s(u) = {worst:.3e}")))
        })(),
    )
}

/// `h` strictly increasing with at most one change of curvature, `ρ_# = ρ*` at `θ = θ*`
/// and `ρ_# < ρ*` at `θ = 1.5θ*`.
pub fn check_weight_map() -> CheckOutcome {
    let name = "weight map h";
    CheckOutcome::from_result(
        name,
        (|| {
            let star = [1.0, 0.0];
            let mut bad = Vec::new();
            let rhos = linspace(-0.995, 0.995, 200);
            let thetas: [[f64; 2]; 5] = [[1.0, 0.0], [1.5, 0.0], [0.5, 0.0], [0.6, 0.8], [-0.7, 0.3]];
            for theta in &thetas {
                for rho_star in [-0.4, 0.3, 0.6] {
                    let map = PopWeightMap::with_standard_grid(theta, &star, rho_star)?;
                    let h: Vec<f64> = rhos.iter().map(|&r| map.eval(r)).collect::<Result<_>>()?;
                    if h.windows(2).any(|w| !(w[1] > w[0])) {
                        bad.push(format!("h not increasing at theta={theta:?}, rho*={rho_star}"));
                    }
                    let signs: Vec<bool> = h
                        .windows(3)
                        .map(|w| w[2] - 2.0 * w[1] + w[0])
                        .filter(|d2| d2.abs() > 1e-12)
                        .map(|d2| d2 > 0.0)
                        .collect();
                    let changes = signs.windows(2).filter(|s| s[0] != s[1]).count();
                    if changes > 1 {
                        bad.push(format!("{changes} curvature changes at theta={theta:?}, rho*={rho_star}"));
                    }
                }
            }
            let rho_star = 0.6;
            let matched = PopWeightMap::with_standard_grid(&star, &star, rho_star)?.find_fixed_point()?;
            let over = PopWeightMap::with_standard_grid(&[1.5, 0.0], &star, rho_star)?.find_fixed_point()?;
            match matched {
                Some(r) if (r - rho_star).abs() <= 1e-7 => {}
                other => bad.push(format!("rho_# at theta=theta* is {other:?}")),
            }
            match over {
                Some(r) if r < rho_star => {}
                other => bad.push(format!("rho_# at theta=1.5 theta* is {other:?}")),
            }
            let detail = if bad.is_empty() {
                format!("rho_# = {:.10} (theta = theta*), {:.6} (theta = 1.5 theta*)", matched.unwrap(), over.unwrap())
            } else {
                bad.join("; ")
            };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// The average log-likelihood never drops by more than 1e−9 along EM mean traces on
/// `datasets` random datasets, from each start the mean estimators use.
pub fn check_likelihood_ascent(datasets: usize, base_seed: u64) -> CheckOutcome {
    let name = "likelihood ascent along EM traces";
    CheckOutcome::from_result(
        name,
        (|| {
            let mut bad = Vec::new();
            let mut traces = 0;
            for k in 0..datasets {
                let seed = derive_seed(base_seed, 0, k as u64);
                let d = 1 + k % 4;
                let eta = 0.2 + 0.1 * (k % 15) as f64;
                let rho = -0.8 + 1.6 * ((k * 7) % 20) as f64 / 19.0;
                let data = sample(&MixtureParams::along_first_axis(d, eta, rho)?, 400 + 100 * (k % 5), seed)?;
                let base = EstimatorConfig { max_iter: 300, seed: derive_seed(seed, 1, 0), ..Default::default() };
                let mut runs = vec![(em_balanced_sign_corrected(&data, &base.with_init(InitKind::RandomSphere))?, 0.0)];
                for init in [InitKind::Zero, InitKind::ScaledMean] {
                    runs.push((em_mean_estimate(&data, rho, &base.with_init(init))?, rho));
                }
                for (est, r) in runs {
                    traces += 1;
                    let ll: Vec<f64> =
                        est.trace.iterates.iter().map(|t| mean_log_likelihood(&data, t, r)).collect::<Result<_>>()?;
                    if let Some(w) = ll.windows(2).find(|w| w[1] < w[0] - 1e-9) {
                        bad.push(format!("dataset {k} ({}): {} -> {}", est.estimator, w[0], w[1]));
                    }
                }
            }
            let detail = if bad.is_empty() { format!("{traces} traces") } else { bad.join("; ") };
            Ok(CheckOutcome::new(name, bad.is_empty(), detail))
        })(),
    )
}

/// Exact second moments `I + θ*θ*ᵀ` give `±θ*` to 1e−8; `λ_max ≤ 1` gives `0`.
pub fn check_spectral() -> CheckOutcome {
    let name = "spectral estimator on exact moments";
    CheckOutcome::from_result(
        name,
        (|| {
            let stars: [&[f64]; 4] = [&[1.0, 0.0, 0.0], &[0.0, 2.0], &[0.3, -0.4, 1.2, 0.5], &[-0.7]];
            let mut worst: f64 = 0.0;
            for star in stars {
                let d = star.len();
                let m: Vec<f64> =
                    (0..d * d).map(|k| star[k / d] * star[k % d] + if k / d == k % d { 1.0 } else { 0.0 }).collect();
                let (v, _) = spectral_from_second_moment(&m, d)?;
                worst = worst.max(loss(&v, star, LossKind::L0)?);
            }
            let flat: Vec<f64> = vec![0.9, 0.1, 0.1, 0.5];
            let identity: Vec<f64> = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
            let zero_ok = spectral_from_second_moment(&flat, 2)?.0 == vec![0.0; 2]
                && spectral_from_second_moment(&identity, 3)?.0 == vec![0.0; 3];
            Ok(CheckOutcome::new(
                name,
                worst <= 1e-8 && zero_ok,
                format!("max l0 error = {worst:.3e}; lambda_max <= 1 gives zero: {zero_ok}"),
            ))
        })(),
    )
}

/// The deterministic suite: population properties, likelihood ascent and spectral sanity.
pub fn property_suite() -> Vec<CheckOutcome> {
    vec![
        check_consistency(),
        check_unique_positive_root(),
        check_negative_roots_confined(),
        check_delta_pivot(),
        check_delta_dominance(),
        check_orthogonal_map(),
        check_s_negative(),
        check_weight_map(),
        check_likelihood_ascent(20, 2024),
        check_spectral(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for outcome in property_suite() {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    #[test]
    fn errors_become_failures() {
        let o = CheckOutcome::from_result("x", Err(crate::error::Error::Domain("bad".into())));
        assert!(!o.passed);
        assert!(o.detail.contains("bad"));
    }
}
