use super::Estimate;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::model::Dataset;
use crate::trace::IterationTrace;

fn done(value: Vec<f64>) -> IterationTrace {
    let mut t = IterationTrace::start(value);
    t.converged = true;
    t
}

/// `(1/ρ*)·E_n[X]`.
pub fn mom_mean(data: &Dataset, rho_star: f64) -> Result<Estimate> {
    if rho_star == 0.0 || !rho_star.is_finite() {
        return Err(Error::Unidentifiable(format!("moment estimator needs rho_star != 0, got {rho_star}")));
    }
    let value: Vec<f64> = data.mean().iter().map(|m| m / rho_star).collect();
    Estimate::for_mean("mom-mean", data, value.clone(), done(value))
}

/// `⟨θ̂, E_n[X]⟩ / ‖θ‖`.
pub fn mom_weight(data: &Dataset, theta: &[f64]) -> Result<Estimate> {
    if theta.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: theta.len() });
    }
    let len = norm(theta);
    if len == 0.0 {
        return Err(Error::Unidentifiable("moment weight estimator needs theta != 0".into()));
    }
    let value = dot(theta, &data.mean()) / (len * len);
    Ok(Estimate::for_weight("mom-weight", data, value, done(vec![value])))
}
