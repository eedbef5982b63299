//! Monte Carlo harness: concentration, convergence times, error sweeps, rate envelopes
//! and the fixed-point landscape.

pub mod checks;
pub mod concentration;
pub mod convergence;
pub mod envelope;
pub mod landscape;
pub mod stats;
pub mod sweep;

pub use checks::{property_suite, CheckOutcome};
pub use concentration::{concentration_check, ring_grid, ConcentrationReport};
pub use convergence::convergence_time;
pub use envelope::{rate_envelope, RateEnvelope, RateTable, Regime};
pub use landscape::{landscape_scan, LandscapeRow};
pub use stats::{fraction_at_most, log_log_slope, median, ols_slope};
pub use sweep::{error_sweep, SweepResult, SweepRow, SweepSpec, SweepSummary};
