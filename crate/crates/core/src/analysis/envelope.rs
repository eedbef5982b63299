use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RHO_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Rate `η`: the trivial estimate `0` is already optimal.
    #[serde(rename = "low signal")]
    LowSignal,
    /// Rate `(1/ρ)√(d/n)`.
    #[serde(rename = "weight dominated")]
    WeightDominated,
    /// Rate `(1/η)√(d/n)`.
    #[serde(rename = "signal dominated")]
    SignalDominated,
    /// Rate `√(d/n)`.
    #[serde(rename = "high signal")]
    HighSignal,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::LowSignal => "low signal",
            Regime::WeightDominated => "weight dominated",
            Regime::SignalDominated => "signal dominated",
            Regime::HighSignal => "high signal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateTable {
    /// `|ρ| ≥ (d/n)^¼`.
    Unbalanced,
    /// `|ρ| < (d/n)^¼`.
    Balanced,
}

/// Minimax upper-bound rate for estimating the mean, up to constants and logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEnvelope {
    pub regime: Regime,
    pub table: RateTable,
    pub predicted_rate: f64,
}

pub fn rate_envelope(eta: f64, rho: f64, d: usize, n: usize) -> Result<RateEnvelope> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("eta={eta} must be finite and nonnegative")));
    }
    if !(rho.abs() <= RHO_LIMIT) {
        return Err(Error::Domain(format!("rho={rho} must satisfy |rho| < 1")));
    }
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("d and n must be positive".into()));
    }
    let root = (d as f64 / n as f64).sqrt();
    let pivot = root.sqrt();
    let rho = rho.abs();
    let (table, regime, rate) = if rho >= pivot {
        let (regime, rate) = if eta <= root / rho {
            (Regime::LowSignal, eta)
        } else if eta < rho {
            (Regime::WeightDominated, root / rho)
        } else if eta <= 1.0 {
            (Regime::SignalDominated, root / eta)
        } else {
            (Regime::HighSignal, root)
        };
        (RateTable::Unbalanced, regime, rate)
    } else {
        let (regime, rate) = if eta <= pivot {
            (Regime::LowSignal, eta)
        } else if eta <= 1.0 {
            (Regime::SignalDominated, root / eta)
        } else {
            (Regime::HighSignal, root)
        };
        (RateTable::Balanced, regime, rate)
    };
    Ok(RateEnvelope { regime, table, predicted_rate: rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_examples() {
        let r = rate_envelope(0.001, 0.6, 4, 100_000).unwrap();
        assert_eq!((r.regime, r.table), (Regime::LowSignal, RateTable::Unbalanced));
        assert_eq!(r.predicted_rate, 0.001);

        let r = rate_envelope(2.0, 0.6, 4, 100_000).unwrap();
        assert_eq!(r.regime, Regime::HighSignal);
        assert!((r.predicted_rate - 0.006_324_555_320_336_759).abs() < 1e-15);

        let root = (4.0f64 / 100_000.0).sqrt();
        let r = rate_envelope(0.3, 0.6, 4, 100_000).unwrap();
        assert_eq!(r.regime, Regime::WeightDominated);
        assert!((r.predicted_rate - root / 0.6).abs() < 1e-15);
        let r = rate_envelope(0.8, 0.6, 4, 100_000).unwrap();
        assert_eq!(r.regime, Regime::SignalDominated);
        assert!((r.predicted_rate - root / 0.8).abs() < 1e-15);
    }

    #[test]
    fn balanced_table() {
        // (d/n)^¼ = 0.1 here.
        let (d, n) = (1, 10_000);
        let r = rate_envelope(0.05, 0.05, d, n).unwrap();
        assert_eq!((r.regime, r.table), (Regime::LowSignal, RateTable::Balanced));
        assert_eq!(r.predicted_rate, 0.05);
        let r = rate_envelope(0.5, 0.0, d, n).unwrap();
        assert_eq!(r.regime, Regime::SignalDominated);
        assert!((r.predicted_rate - 0.02).abs() < 1e-15);
        let r = rate_envelope(3.0, -0.05, d, n).unwrap();
        assert_eq!(r.regime, Regime::HighSignal);
        assert!((r.predicted_rate - 0.01).abs() < 1e-15);
    }

    #[test]
    fn pivot_ties_use_the_unbalanced_table() {
        let r = rate_envelope(0.5, 0.1, 1, 10_000).unwrap();
        assert_eq!(r.table, RateTable::Unbalanced);
    }

    #[test]
    fn regime_names_serialize() {
        let r = rate_envelope(0.3, 0.6, 4, 100_000).unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["regime"], "weight dominated");
        assert_eq!(v["table"], "unbalanced");
        assert_eq!(r.regime.as_str(), "weight dominated");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_envelope(-1.0, 0.5, 2, 10).is_err());
        assert!(rate_envelope(1.0, 1.0, 2, 10).is_err());
        assert!(rate_envelope(1.0, 0.5, 0, 10).is_err());
        assert!(rate_envelope(f64::NAN, 0.5, 2, 10).is_err());
    }

    proptest! {
        #[test]
        fn rate_matches_the_closed_form(
            eta in 0.0f64..3.0,
            rho in -0.99f64..0.99,
            d in 1usize..50,
            n in 100usize..1_000_000,
        ) {
            // Both tables collapse to min{η, √(d/n) / max{|ρ|, min{η, 1}}}.
            let r = rate_envelope(eta, rho, d, n).unwrap();
            prop_assert!(r.predicted_rate.is_finite() && r.predicted_rate >= 0.0);
            let root = (d as f64 / n as f64).sqrt();
            let expected = eta.min(root / rho.abs().max(eta.min(1.0)));
            prop_assert!((r.predicted_rate - expected).abs() <= 1e-12 * expected, "{r:?} vs {expected}");
        }

        #[test]
        fn rate_is_monotone_in_n(eta in 0.0f64..3.0, rho in -0.99f64..0.99, d in 1usize..20, n in 1000usize..100_000) {
            let a = rate_envelope(eta, rho, d, n).unwrap().predicted_rate;
            let b = rate_envelope(eta, rho, d, 4 * n).unwrap().predicted_rate;
            prop_assert!(b <= a * (1.0 + 1e-12));
        }
    }
}
