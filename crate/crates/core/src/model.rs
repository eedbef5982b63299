//! The symmetric two-component Gaussian mixture
//! `(1+ρ)/2 · N(θ, I) + (1−ρ)/2 · N(−θ, I)`, its reparameterizations, and sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, dot, ln_cosh, norm};
use crate::rng::rng_from_seed;

/// Largest accepted `|ρ|`. Values beyond this make `β = atanh(ρ)` overflow
/// into territory where downstream tanh arithmetic stops being meaningful.
pub const RHO_LIMIT: f64 = 1.0 - 1e-12;

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho.abs() > RHO_LIMIT {
        return Err(Error::Domain(format!("weight imbalance rho={rho} must satisfy |rho| < 1")));
    }
    Ok(())
}

/// Inverse temperature `β = ½ log((1+ρ)/(1−ρ))`.
pub fn rho_to_beta(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(rho.atanh())
}

pub fn beta_to_rho(beta: f64) -> f64 {
    beta.tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    RhoToDelta,
    DeltaToRho,
}

/// Converts between the imbalance `ρ ∈ (−1,1)` and the minor weight `δ = (1−ρ)/2 ∈ (0,1)`.
pub fn delta_rho_convert(value: f64, direction: Direction) -> Result<f64> {
    match direction {
        Direction::RhoToDelta => {
            check_rho(value)?;
            Ok((1.0 - value) / 2.0)
        }
        Direction::DeltaToRho => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Domain(format!("weight delta={value} must lie in (0,1)")));
            }
            Ok(1.0 - 2.0 * value)
        }
    }
}

/// `β_δ = ½ log((1−δ)/δ)`, the inverse temperature written in terms of `δ`.
pub fn delta_to_beta(delta: f64) -> Result<f64> {
    rho_to_beta(delta_rho_convert(delta, Direction::DeltaToRho)?)
}

/// Ground truth of the mixture: component mean `θ*` and imbalance `ρ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub theta_star: Vec<f64>,
    pub rho_star: f64,
}

impl MixtureParams {
    pub fn new(theta_star: Vec<f64>, rho_star: f64) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("theta_star must be finite".into()));
        }
        check_rho(rho_star)?;
        Ok(Self { theta_star, rho_star })
    }

    /// `θ* = η·e₁` in `d` dimensions.
    pub fn along_first_axis(d: usize, eta: f64, rho_star: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(eta >= 0.0) {
            return Err(Error::Domain(format!("eta={eta} must be nonnegative")));
        }
        let mut theta = vec![0.0; d];
        theta[0] = eta;
        Self::new(theta, rho_star)
    }

    pub fn d(&self) -> usize {
        self.theta_star.len()
    }

    /// `η = ‖θ*‖`.
    pub fn eta(&self) -> f64 {
        norm(&self.theta_star)
    }

    pub fn delta_star(&self) -> f64 {
        (1.0 - self.rho_star) / 2.0
    }

    pub fn beta_star(&self) -> f64 {
        self.rho_star.atanh()
    }
}

/// Caps assumed on the truth: `‖θ*‖ ≤ c_theta` and `|ρ*| ≤ c_rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalBounds {
    pub c_theta: f64,
    pub c_rho: f64,
}

impl GlobalBounds {
    pub fn new(c_theta: f64, c_rho: f64) -> Result<Self> {
        if !(c_theta > 0.0) {
            return Err(Error::Domain(format!("c_theta={c_theta} must be positive")));
        }
        if !(c_rho > 0.0 && c_rho < 1.0) {
            return Err(Error::Domain(format!("c_rho={c_rho} must lie in (0,1)")));
        }
        Ok(Self { c_theta, c_rho })
    }

    pub fn c_beta(&self) -> f64 {
        0.5 * ((1.0 + self.c_rho) / (1.0 - self.c_rho)).ln()
    }

    pub fn admits(&self, params: &MixtureParams) -> bool {
        params.eta() <= self.c_theta && params.rho_star.abs() <= self.c_rho
    }
}

/// `n` samples in `d` dimensions, stored row-major, with the truth that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<f64>,
    n: usize,
    d: usize,
    pub seed: u64,
    pub params: MixtureParams,
}

impl Dataset {
    pub fn from_rows(samples: Vec<f64>, d: usize, seed: u64, params: MixtureParams) -> Result<Self> {
        if d == 0 || samples.is_empty() || !samples.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot be split into rows of length {d}",
                samples.len()
            )));
        }
        if params.d() != d {
            return Err(Error::DimensionMismatch { expected: d, got: params.d() });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
        }
        let n = samples.len() / d;
        Ok(Self { samples, n, d, seed, params })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.samples.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    /// `E_n[X]`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for x in self.rows() {
            for (acc, v) in m.iter_mut().zip(x) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// `E_n[X Xᵀ]`, row-major `d × d`.
    pub fn second_moment(&self) -> Vec<f64> {
        let d = self.d;
        let mut s = vec![0.0; d * d];
        for x in self.rows() {
            for j in 0..d {
                let xj = x[j];
                for k in j..d {
                    s[j * d + k] += xj * x[k];
                }
            }
        }
        let inv = 1.0 / self.n as f64;
        for j in 0..d {
            for k in j..d {
                let v = s[j * d + k] * inv;
                s[j * d + k] = v;
                s[k * d + j] = v;
            }
        }
        s
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }
}

/// Draws `n` samples `X = S·θ* + Z` with `P[S=1] = (1+ρ*)/2`, deterministically from `seed`.
pub fn sample(params: &MixtureParams, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let d = params.d();
    let p_plus = (1.0 + params.rho_star) / 2.0;
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(n * d);
    for _ in 0..n {
        let s = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
        for &t in &params.theta_star {
            let z: f64 = rng.sample(StandardNormal);
            samples.push(s * t + z);
        }
    }
    Dataset::from_rows(samples, d, seed, params.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// `‖θ̂ − θ*‖`
    L2,
    /// `min{‖θ̂ − θ*‖, ‖θ̂ + θ*‖}`
    L0,
}

pub fn loss(theta_hat: &[f64], theta_star: &[f64], kind: LossKind) -> Result<f64> {
    if theta_hat.len() != theta_star.len() {
        return Err(Error::DimensionMismatch { expected: theta_star.len(), got: theta_hat.len() });
    }
    let direct = distance(theta_hat, theta_star);
    Ok(match kind {
        LossKind::L2 => direct,
        LossKind::L0 => {
            let flipped = theta_hat.iter().zip(theta_star).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
            direct.min(flipped)
        }
    })
}

/// `E[S | X = x] = tanh(⟨θ,x⟩ + β_ρ)`.
pub fn posterior_sign(theta: &[f64], rho: f64, x: &[f64]) -> Result<f64> {
    let beta = rho_to_beta(rho)?;
    if theta.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: x.len() });
    }
    Ok((dot(theta, x) + beta).tanh())
}

/// Average observed-data log-likelihood `E_n[log p_{θ,ρ}(X)]`.
///
/// Uses `p(x) = φ(x)·e^{−‖θ‖²/2}·cosh(⟨θ,x⟩+β)/cosh(β)`.
pub fn mean_log_likelihood(data: &Dataset, theta: &[f64], rho: f64) -> Result<f64> {
    let beta = rho_to_beta(rho)?;
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    let log_norm = -0.5 * data.d() as f64 * (2.0 * std::f64::consts::PI).ln();
    let shift = -0.5 * dot(theta, theta) - ln_cosh(beta);
    let total: f64 = data.rows().map(|x| -0.5 * dot(x, x) + ln_cosh(dot(theta, x) + beta)).sum();
    Ok(total / data.n() as f64 + log_norm + shift)
}
