//! Sample EM iterations and the estimator family.
//!
//! All estimators take the known truth from [`Dataset::params`] where the
//! method assumes it (ρ* for the mean iterations, θ* as the default frozen mean
//! for the weight iterations) and report losses against it.

mod em;
mod moments;
pub mod registry;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_point::StopRule;
use crate::linalg::dot;
use crate::model::{loss, rho_to_beta, Dataset, LossKind};
use crate::trace::IterationTrace;

pub use em::{
    adaptive_em, adaptive_threshold, em_balanced_sign_corrected, em_mean_estimate, em_weight_estimate,
    joint_alternating, random_sphere_init,
};
pub use moments::{mom_mean, mom_weight};
pub use registry::{Estimator, EstimatorRegistry};
pub use spectral::{power_iteration, spectral_estimate, spectral_from_second_moment, PowerIteration};

/// `f_n(θ, ρ) = E_n[X·tanh(⟨θ,X⟩ + β_ρ)]`.
pub fn emp_mean_iter(data: &Dataset, theta: &[f64], rho: f64) -> Result<Vec<f64>> {
    let beta = rho_to_beta(rho)?;
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    if theta.iter().all(|v| *v == 0.0) {
        // tanh(β_ρ) = ρ exactly.
        return Ok(data.mean().into_iter().map(|m| rho * m).collect());
    }
    let mut acc = vec![0.0; data.d()];
    for x in data.rows() {
        let w = (dot(theta, x) + beta).tanh();
        for (a, v) in acc.iter_mut().zip(x) {
            *a += w * v;
        }
    }
    let inv = 1.0 / data.n() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

/// `h_n(ρ, θ) = E_n[tanh(⟨θ,X⟩ + β_ρ)]`.
pub fn emp_weight_iter(data: &Dataset, rho: f64, theta: &[f64]) -> Result<f64> {
    let beta = rho_to_beta(rho)?;
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    if theta.iter().all(|v| *v == 0.0) {
        return Ok(rho);
    }
    let total: f64 = data.rows().map(|x| (dot(theta, x) + beta).tanh()).sum();
    Ok(total / data.n() as f64)
}

/// `(f_n(θ, ρ), h_n(ρ, θ))` from a single pass over the data.
pub fn emp_maps(data: &Dataset, theta: &[f64], rho: f64) -> Result<(Vec<f64>, f64)> {
    let beta = rho_to_beta(rho)?;
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    if theta.iter().all(|v| *v == 0.0) {
        return Ok((data.mean().into_iter().map(|m| rho * m).collect(), rho));
    }
    let mut acc = vec![0.0; data.d()];
    let mut total = 0.0;
    for x in data.rows() {
        let w = (dot(theta, x) + beta).tanh();
        total += w;
        for (a, v) in acc.iter_mut().zip(x) {
            *a += w * v;
        }
    }
    let inv = 1.0 / data.n() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok((acc, total / data.n() as f64))
}

/// How the mean iteration is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// `θ₀ = 0`
    Zero,
    /// `θ₀ = (1/ρ*)·E_n[X]`
    ScaledMean,
    /// `θ₀ = C₀·(d log n / n)^{1/4}·û` with `û` uniform on the sphere.
    RandomSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub init_kind: InitKind,
    pub max_iter: usize,
    pub tol: f64,
    /// Run exactly `max_iter` steps instead of stopping on the residual.
    pub fixed_steps: bool,
    /// `C_ρ` for the truncated weight iteration.
    pub truncation: Option<f64>,
    pub seed: u64,
    /// Scale of the random-sphere start.
    pub c0: f64,
    /// Threshold multiplier of the adaptive branch rule.
    pub kappa: f64,
    /// Frozen mean for the weight estimators; `θ*` when absent.
    pub theta: Option<Vec<f64>>,
    /// Number of phases of the joint alternating scheme.
    pub phases: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            init_kind: InitKind::ScaledMean,
            max_iter: 10_000,
            tol: 1e-8,
            fixed_steps: false,
            truncation: None,
            seed: 0,
            c0: 1.0,
            kappa: 1.0,
            theta: None,
            phases: 2,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!("tol={} must be finite and nonnegative", self.tol)));
        }
        if let Some(c) = self.truncation {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidArgument(format!("truncation={c} must lie in (0,1)")));
            }
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(Error::InvalidArgument(format!("c0={} must be positive", self.c0)));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa={} must be positive", self.kappa)));
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        if self.fixed_steps {
            StopRule::fixed(self.max_iter)
        } else {
            StopRule { tol: self.tol, max_iter: self.max_iter, fixed: false }
        }
    }

    pub fn with_init(&self, init_kind: InitKind) -> Self {
        Self { init_kind, ..self.clone() }
    }
}

/// An estimate is either a mean vector or a scalar weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimateValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl EstimateValue {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Self::Vector(v) => Some(v),
            Self::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(v) => Some(*v),
            Self::Vector(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimator: String,
    pub value: EstimateValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_l0: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub branch: Option<String>,
    /// The weight half of a joint estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Box<Estimate>>,
    #[serde(skip, default = "empty_trace")]
    pub trace: IterationTrace,
}

fn empty_trace() -> IterationTrace {
    IterationTrace::start(Vec::new())
}

impl Estimate {
    /// A mean estimate with both losses against `θ*`.
    pub(crate) fn for_mean(name: &str, data: &Dataset, value: Vec<f64>, trace: IterationTrace) -> Result<Self> {
        let star = &data.params.theta_star;
        Ok(Self {
            estimator: name.to_string(),
            loss_l2: Some(loss(&value, star, LossKind::L2)?),
            loss_l0: Some(loss(&value, star, LossKind::L0)?),
            value: EstimateValue::Vector(value),
            iterations_used: trace.iterations_used,
            converged: trace.converged,
            branch: None,
            weight: None,
            trace,
        })
    }

    /// A weight estimate with `|ρ̂ − ρ*|` as its loss.
    pub(crate) fn for_weight(name: &str, data: &Dataset, value: f64, trace: IterationTrace) -> Self {
        Self {
            estimator: name.to_string(),
            loss_l2: Some((value - data.params.rho_star).abs()),
            loss_l0: None,
            value: EstimateValue::Scalar(value),
            iterations_used: trace.iterations_used,
            converged: trace.converged,
            branch: None,
            weight: None,
            trace,
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.value.as_vector()
    }

    pub fn rho(&self) -> Option<f64> {
        self.value.as_scalar()
    }
}
