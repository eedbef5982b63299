use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_point::{find_fixed_points_1d, DEFAULT_SCAN_POINTS};
use crate::population::PopMeanMap1D;
use crate::quadrature::QuadratureGrid;

/// Smallest magnitude scanned; `0` is always a fixed point and is excluded.
pub const LANDSCAPE_INNER_EDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub delta: f64,
    pub eta: f64,
    pub count: usize,
    pub roots: Vec<f64>,
}

/// Negative fixed points of the matched one-dimensional map on `[−(η+1), −1e−6]`,
/// for every `(δ, η)` pair in `δ`-major order.
pub fn landscape_scan(deltas: &[f64], etas: &[f64], grid: Arc<QuadratureGrid>) -> Result<Vec<LandscapeRow>> {
    if deltas.is_empty() || etas.is_empty() {
        return Err(Error::InvalidArgument("landscape grids must be nonempty".into()));
    }
    let cells: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| etas.iter().map(move |&e| (d, e))).collect();
    cells
        .par_iter()
        .map(|&(delta, eta)| {
            let map = PopMeanMap1D::new(eta, delta, delta, grid.clone())?;
            let roots =
                find_fixed_points_1d(|t| map.eval(t), -(eta + 1.0), -LANDSCAPE_INNER_EDGE, DEFAULT_SCAN_POINTS)?;
            Ok(LandscapeRow { delta, eta, count: roots.len(), roots })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_map_has_the_mirror_root() {
        let rows = landscape_scan(&[0.5], &[1.0], QuadratureGrid::standard()).unwrap();
        assert_eq!(rows[0].count, 1);
        assert!((rows[0].roots[0] + 1.0).abs() < 1e-6, "{:?}", rows[0].roots);
    }

    #[test]
    fn strong_imbalance_removes_negative_roots() {
        let rows = landscape_scan(&[0.05], &[1.0], QuadratureGrid::standard()).unwrap();
        assert_eq!(rows[0].count, 0, "{:?}", rows[0].roots);
    }

    #[test]
    fn roots_stay_inside_the_signal_interval() {
        let deltas = [0.05, 0.15, 0.25, 0.35, 0.45, 0.49];
        let etas = [0.25, 0.5, 1.0, 1.5, 2.5];
        let rows = landscape_scan(&deltas, &etas, QuadratureGrid::standard()).unwrap();
        assert_eq!(rows.len(), 30);
        assert_eq!((rows[1].delta, rows[1].eta), (0.05, 0.5));
        for r in &rows {
            assert_eq!(r.count, r.roots.len());
            assert!(r.roots.iter().all(|&x| -r.eta < x && x < 0.0), "{r:?}");
        }
    }

    #[test]
    fn rejects_empty_grids() {
        assert!(landscape_scan(&[], &[1.0], QuadratureGrid::standard()).is_err());
        assert!(landscape_scan(&[0.2], &[], QuadratureGrid::standard()).is_err());
    }
}
