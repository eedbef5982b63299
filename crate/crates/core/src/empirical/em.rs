use rand::Rng;
use rand_distr::StandardNormal;

use super::{emp_mean_iter, emp_weight_iter, Estimate, EstimatorConfig, InitKind};
use crate::error::{Error, Result};
use crate::fixed_point::{iterate, StopRule};
use crate::linalg::{dot, norm, scale};
use crate::model::{rho_to_beta, Dataset};
use crate::rng::rng_from_seed;
use crate::trace::IterationTrace;

/// `(d log n / n)^{1/4}`, the scale separating the balanced and unbalanced regimes.
fn quarter_rate(d: usize, n: usize) -> f64 {
    let n = n as f64;
    (d as f64 * n.ln() / n).powf(0.25)
}

/// `C₀·(d log n / n)^{1/4}·û` with `û` a normalized standard normal vector.
pub fn random_sphere_init(d: usize, n: usize, c0: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let len = norm(&u);
    let r = c0 * quarter_rate(d, n) / len;
    u.iter_mut().for_each(|v| *v *= r);
    u
}

fn run_mean(data: &Dataset, theta0: Vec<f64>, rho: f64, rule: StopRule) -> Result<IterationTrace> {
    rho_to_beta(rho)?;
    // The map cannot fail once ρ and the dimension are checked.
    iterate(|t| emp_mean_iter(data, t, rho).expect("validated arguments"), theta0, rule)
}

fn run_weight(data: &Dataset, theta: &[f64], rho0: f64, cap: f64, rule: StopRule) -> Result<IterationTrace> {
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    iterate(
        |r| {
            let h = emp_weight_iter(data, r[0], theta).expect("validated arguments");
            vec![h.clamp(-cap, cap)]
        },
        vec![rho0],
        rule,
    )
}

fn truncation(cfg: &EstimatorConfig) -> Result<f64> {
    cfg.truncation.ok_or_else(|| Error::InvalidArgument("the weight iteration needs a truncation level C_rho".into()))
}

/// Unbalanced mean EM with the weight fixed at the known `ρ*`.
pub fn em_mean_estimate(data: &Dataset, rho_star: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    rho_to_beta(rho_star)?;
    let theta0 = match cfg.init_kind {
        InitKind::Zero => vec![0.0; data.d()],
        InitKind::ScaledMean => {
            if rho_star == 0.0 {
                return Err(Error::Unidentifiable("scaled-mean start needs rho_star != 0".into()));
            }
            scale(&emp_mean_iter(data, &vec![0.0; data.d()], rho_star)?, 1.0 / (rho_star * rho_star))
        }
        InitKind::RandomSphere => {
            return Err(Error::InvalidArgument("em starts from zero or the scaled mean".into()));
        }
    };
    let trace = run_mean(data, theta0, rho_star, cfg.stop_rule())?;
    let value = trace.last().to_vec();
    Estimate::for_mean("em", data, value, trace)
}

/// Balanced EM (`ρ = 0` inside tanh) from a random-sphere start, followed by the
/// sign correction `s = sign⟨θ_T, E_n[X]⟩` applied to the whole trajectory.
pub fn em_balanced_sign_corrected(data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    if cfg.init_kind != InitKind::RandomSphere {
        return Err(Error::InvalidArgument("balanced em starts from a random point on the sphere".into()));
    }
    let theta0 = random_sphere_init(data.d(), data.n(), cfg.c0, cfg.seed);
    let mut trace = run_mean(data, theta0, 0.0, cfg.stop_rule())?;
    let inner = dot(trace.last(), &data.mean());
    if inner == 0.0 {
        trace.notes.push("sign-ambiguous: <theta_T, E_n[X]> = 0, kept s = +1".into());
    } else if inner < 0.0 {
        for x in trace.iterates.iter_mut() {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        trace.notes.push("sign flipped: s = -1".into());
    }
    let value = trace.last().to_vec();
    Estimate::for_mean("em-balanced", data, value, trace)
}

/// Truncated weight EM `ρ_{t+1} = [h_n(ρ_t, θ)]_{C_ρ}` from `ρ₀ = 0` with the mean frozen at `θ`.
pub fn em_weight_estimate(data: &Dataset, theta: &[f64], cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    let cap = truncation(cfg)?;
    let trace = run_weight(data, theta, 0.0, cap, cfg.stop_rule())?;
    let value = trace.last()[0];
    Ok(Estimate::for_weight("em-weight", data, value, trace))
}

/// `κ·(d log n / n)^{1/4}`
pub fn adaptive_threshold(d: usize, n: usize, kappa: f64) -> f64 {
    kappa * quarter_rate(d, n)
}

/// Unbalanced EM from the scaled mean when `|ρ*| ≥ κ(d log n/n)^{1/4}`, balanced EM with
/// sign correction otherwise. Ties go to the unbalanced branch.
pub fn adaptive_em(data: &Dataset, rho_star: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    rho_to_beta(rho_star)?;
    let unbalanced = rho_star.abs() >= adaptive_threshold(data.d(), data.n(), cfg.kappa);
    let (mut est, branch) = if unbalanced {
        (em_mean_estimate(data, rho_star, &cfg.with_init(InitKind::ScaledMean))?, "unbalanced")
    } else {
        (em_balanced_sign_corrected(data, &cfg.with_init(InitKind::RandomSphere))?, "balanced")
    };
    est.estimator = "em-adaptive".into();
    est.branch = Some(branch.into());
    Ok(est)
}

/// Balanced mean EM with sign correction, then truncated weight EM with the mean frozen.
/// Each further phase alternates a mean EM run at the current `ρ̂` and a weight run
/// started from the current `ρ̂`.
pub fn joint_alternating(data: &Dataset, cfg: &EstimatorConfig) -> Result<(Estimate, Estimate)> {
    cfg.validate()?;
    if cfg.phases < 2 {
        return Err(Error::InvalidArgument(format!("phases={} must be at least 2", cfg.phases)));
    }
    let cap = truncation(cfg)?;
    let mean = em_balanced_sign_corrected(data, &cfg.with_init(InitKind::RandomSphere))?;
    let weight = em_weight_estimate(data, mean.theta().expect("mean estimate"), cfg)?;
    let mut mean_trace = mean.trace;
    let mut weight_trace = weight.trace;
    for phase in 3..=cfg.phases {
        let rho = weight_trace.last()[0];
        if phase % 2 == 1 {
            let run = run_mean(data, mean_trace.last().to_vec(), rho, cfg.stop_rule())?;
            mean_trace.extend_with(&run);
        } else {
            let run = run_weight(data, mean_trace.last(), rho, cap, cfg.stop_rule())?;
            weight_trace.extend_with(&run);
        }
    }
    let theta = mean_trace.last().to_vec();
    let rho = weight_trace.last()[0];
    let mut mean = Estimate::for_mean("joint", data, theta, mean_trace)?;
    let weight = Estimate::for_weight("joint-weight", data, rho, weight_trace);
    mean.branch = Some(format!("phases={}", cfg.phases));
    Ok((mean, weight))
}
