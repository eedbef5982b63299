use crate::error::{Error, Result};
use crate::model::{loss, LossKind};
use crate::trace::IterationTrace;

/// First `t` with `loss(θ_t, target) ≤ tol_mult · loss(θ_T, target)`, or `None` if no iterate qualifies.
pub fn convergence_time(
    trace: &IterationTrace,
    target: &[f64],
    tol_mult: f64,
    kind: LossKind,
) -> Result<Option<usize>> {
    if !(tol_mult > 0.0) || !tol_mult.is_finite() {
        return Err(Error::InvalidArgument(format!("tol_mult={tol_mult} must be positive")));
    }
    let losses: Vec<f64> = trace.iterates.iter().map(|x| loss(x, target, kind)).collect::<Result<_>>()?;
    let threshold = tol_mult * losses.last().copied().expect("trace holds the starting point");
    Ok(losses.iter().position(|l| *l <= threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(points: &[f64]) -> IterationTrace {
        let mut t = IterationTrace::start(vec![points[0]]);
        for w in points.windows(2) {
            t.push(vec![w[1]], (w[1] - w[0]).abs());
        }
        t
    }

    #[test]
    fn starting_at_target_is_zero() {
        let t = trace(&[1.0, 1.0, 1.0]);
        assert_eq!(convergence_time(&t, &[1.0], 2.0, LossKind::L2).unwrap(), Some(0));
    }

    #[test]
    fn counts_steps_to_the_error_floor() {
        // Errors 1, 0.5, 0.1, 0.02, 0.01: the floor is 0.01 and 2× that is first met at t = 3.
        let t = trace(&[0.0, 0.5, 0.9, 0.98, 0.99]);
        assert_eq!(convergence_time(&t, &[1.0], 2.0, LossKind::L2).unwrap(), Some(3));
        assert_eq!(convergence_time(&t, &[1.0], 1.0, LossKind::L2).unwrap(), Some(4));
        assert_eq!(convergence_time(&t, &[1.0], 0.5, LossKind::L2).unwrap(), None);
        assert!(convergence_time(&t, &[1.0], 0.0, LossKind::L2).is_err());
    }

    #[test]
    fn sign_free_loss() {
        let t = trace(&[0.0, -0.9, -1.0]);
        assert_eq!(convergence_time(&t, &[1.0], 1.0, LossKind::L0).unwrap(), Some(2));
        assert_eq!(convergence_time(&t, &[1.0], 1.0, LossKind::L2).unwrap(), Some(0));
    }
}
