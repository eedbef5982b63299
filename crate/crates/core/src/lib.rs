//! EM estimation for the unbalanced symmetric two-component Gaussian mixture
//! `X = S·θ* + Z`, `P[S = 1] = (1+ρ*)/2`, `Z ~ N(0, I_d)`.
//!
//! * [`model`]: parameters, sampling, reparameterizations, losses, likelihood.
//! * [`population`]: quadrature evaluations of the infinite-sample EM maps.
//! * [`empirical`]: sample EM iterations and the estimator family, selectable by name.
//! * [`analysis`]: Monte Carlo harness (concentration, convergence time, sweeps, rate envelope).

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod empirical;
pub mod error;
pub mod fixed_point;
pub mod io;
pub mod linalg;
pub mod model;
pub mod population;
pub mod quadrature;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Dataset, MixtureParams};
pub use quadrature::QuadratureGrid;
pub use trace::IterationTrace;
