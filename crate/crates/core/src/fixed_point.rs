//! Generic drivers for fixed-point iterations and one-dimensional root scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::trace::IterationTrace;

/// Default number of scan points for [`find_fixed_points_1d`].
pub const DEFAULT_SCAN_POINTS: usize = 2000;
/// Roots closer than this are reported once.
pub const ROOT_MERGE_DISTANCE: f64 = 1e-6;

/// When an iteration stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub tol: f64,
    pub max_iter: usize,
    /// Run exactly `max_iter` steps and ignore `tol` for stopping.
    pub fixed: bool,
}

impl StopRule {
    pub fn residual(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, fixed: false }
    }

    pub fn fixed(steps: usize) -> Self {
        Self { tol: 0.0, max_iter: steps, fixed: true }
    }
}

/// Iterates `x_{t+1} = map(x_t)` until `‖x_{t+1} − x_t‖ ≤ tol` or `max_iter` steps.
pub fn iterate_map<F>(map: F, x0: Vec<f64>, tol: f64, max_iter: usize) -> Result<IterationTrace>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol={tol} must be positive")));
    }
    iterate(map, x0, StopRule::residual(tol, max_iter))
}

/// Runs an iteration under `rule`. A non-finite iterate aborts with
/// [`Error::Divergence`] carrying every finite step up to that point.
pub fn iterate<F>(mut map: F, x0: Vec<f64>, rule: StopRule) -> Result<IterationTrace>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if rule.tol < 0.0 || rule.tol.is_nan() {
        return Err(Error::InvalidArgument(format!("tol={} must be nonnegative", rule.tol)));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("starting point is not finite".into()));
    }
    let mut trace = IterationTrace::start(x0);
    for _ in 0..rule.max_iter {
        let next = map(trace.last());
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { trace: Box::new(trace) });
        }
        let residual = distance(&next, trace.last());
        trace.push(next, residual);
        trace.converged = residual <= rule.tol;
        if trace.converged && !rule.fixed {
            break;
        }
    }
    Ok(trace)
}

/// Finds the roots of `map(x) − x` on `[lo, hi]`.
///
/// Scans a uniform grid for sign changes, bisects every bracket down to
/// machine resolution, and merges roots closer than [`ROOT_MERGE_DISTANCE`].
/// Tangential roots without a sign change are not detected.
pub fn find_fixed_points_1d<F>(map: F, lo: f64, hi: f64, scan_points: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    if scan_points < 100 {
        return Err(Error::InvalidArgument(format!("scan_points={scan_points} must be at least 100")));
    }
    let g = |x: f64| map(x) - x;
    let step = (hi - lo) / (scan_points - 1) as f64;
    let xs: Vec<f64> = (0..scan_points).map(|i| if i + 1 == scan_points { hi } else { lo + step * i as f64 }).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut roots = Vec::new();
    for i in 0..scan_points {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i + 1 < scan_points && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
            roots.push(bisect(&g, xs[i], xs[i + 1], gs[i]));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|b, a| (*b - *a).abs() < ROOT_MERGE_DISTANCE);
    Ok(roots)
}

/// Bisection on a bracket where `g(lo)` has sign `g_lo` and `g(hi)` the opposite sign.
pub(crate) fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let lo_negative = g_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
