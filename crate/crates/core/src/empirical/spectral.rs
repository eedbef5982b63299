use super::Estimate;
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};
use crate::model::{loss, Dataset, LossKind};
use crate::trace::IterationTrace;

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub trace: IterationTrace,
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    m.chunks_exact(v.len()).map(|row| dot(row, v)).collect()
}

/// Top eigenpair of a symmetric positive semidefinite row-major `d × d` matrix.
///
/// Starts from `e₁`, perturbed towards the other axes when `e₁` is itself an eigenvector.
pub fn power_iteration(m: &[f64], d: usize, tol: f64, max_iter: usize) -> Result<PowerIteration> {
    if d == 0 || m.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: m.len() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    let w = mat_vec(m, &v);
    let along = w[0];
    let off: f64 = w[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if d > 1 && off <= 1e-12 * along.abs().max(1.0) {
        let nudge = 0.1 / ((d - 1) as f64).sqrt();
        v[1..].iter_mut().for_each(|x| *x = nudge);
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
    }
    let mut trace = IterationTrace::start(v);
    for _ in 0..max_iter {
        let w = mat_vec(m, trace.last());
        let len = norm(&w);
        if len == 0.0 {
            let eigenvector = trace.last().to_vec();
            trace.converged = true;
            return Ok(PowerIteration { eigenvalue: 0.0, eigenvector, trace });
        }
        let next: Vec<f64> = w.iter().map(|x| x / len).collect();
        let residual = distance(&next, trace.last());
        trace.push(next, residual);
        if residual <= tol {
            trace.converged = true;
            let eigenvector = trace.last().to_vec();
            let eigenvalue = dot(&eigenvector, &mat_vec(m, &eigenvector));
            return Ok(PowerIteration { eigenvalue, eigenvector, trace });
        }
    }
    Err(Error::NonConvergence(format!("power iteration after {max_iter} steps")))
}

/// `√(max{λ_max − 1, 0})·v̂` from a second-moment matrix `E[XXᵀ]`.
///
/// An excess `λ_max − 1` below the rounding floor of the Rayleigh quotient counts as zero.
pub fn spectral_from_second_moment(m: &[f64], d: usize) -> Result<(Vec<f64>, PowerIteration)> {
    let pi = power_iteration(m, d, POWER_TOL, POWER_MAX_ITER)?;
    let excess = pi.eigenvalue - 1.0;
    let floor = 8.0 * d as f64 * f64::EPSILON * pi.eigenvalue.abs().max(1.0);
    let r = if excess <= floor { 0.0 } else { excess.sqrt() };
    Ok((pi.eigenvector.iter().map(|v| r * v).collect(), pi))
}

/// Spectral estimate from `Σ̂ = E_n[XXᵀ]`. Only the sign-free loss `ℓ₀` is reported.
pub fn spectral_estimate(data: &Dataset) -> Result<Estimate> {
    if data.n() < 2 {
        return Err(Error::InvalidArgument("spectral estimate needs n >= 2".into()));
    }
    let (value, pi) = spectral_from_second_moment(&data.second_moment(), data.d())?;
    let l0 = loss(&value, &data.params.theta_star, LossKind::L0)?;
    let mut est = Estimate::for_mean("spectral", data, value, pi.trace)?;
    est.loss_l2 = None;
    est.loss_l0 = Some(l0);
    Ok(est)
}
