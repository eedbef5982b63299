//! Estimators behind a common trait, registered by name and selected at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    adaptive_em, em_balanced_sign_corrected, em_mean_estimate, em_weight_estimate, joint_alternating, mom_mean,
    mom_weight, spectral_estimate, Estimate, EstimatorConfig, InitKind,
};
use crate::error::{Error, Result};
use crate::model::Dataset;

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// One-line summary for listings.
    fn describe(&self) -> &'static str;

    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate>;
}

fn frozen_theta(data: &Dataset, cfg: &EstimatorConfig) -> Vec<f64> {
    cfg.theta.clone().unwrap_or_else(|| data.params.theta_star.clone())
}

struct UnbalancedEm;
struct BalancedEm;
struct AdaptiveEm;
struct WeightEm;
struct MomMean;
struct MomWeight;
struct Spectral;
struct Joint;

impl Estimator for UnbalancedEm {
    fn name(&self) -> &'static str {
        "em"
    }
    fn describe(&self) -> &'static str {
        "mean EM with the known weight, from zero or the scaled sample mean"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        em_mean_estimate(data, data.params.rho_star, cfg)
    }
}

impl Estimator for BalancedEm {
    fn name(&self) -> &'static str {
        "em-balanced"
    }
    fn describe(&self) -> &'static str {
        "balanced mean EM from a random sphere point, sign-corrected by the sample mean"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        em_balanced_sign_corrected(data, &cfg.with_init(InitKind::RandomSphere))
    }
}

impl Estimator for AdaptiveEm {
    fn name(&self) -> &'static str {
        "em-adaptive"
    }
    fn describe(&self) -> &'static str {
        "unbalanced or balanced mean EM depending on the weight imbalance"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        adaptive_em(data, data.params.rho_star, cfg)
    }
}

impl Estimator for WeightEm {
    fn name(&self) -> &'static str {
        "em-weight"
    }
    fn describe(&self) -> &'static str {
        "truncated weight EM with the mean frozen (theta* unless configured)"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        em_weight_estimate(data, &frozen_theta(data, cfg), cfg)
    }
}

impl Estimator for MomMean {
    fn name(&self) -> &'static str {
        "mom-mean"
    }
    fn describe(&self) -> &'static str {
        "sample mean divided by the known weight imbalance"
    }
    fn estimate(&self, data: &Dataset, _cfg: &EstimatorConfig) -> Result<Estimate> {
        mom_mean(data, data.params.rho_star)
    }
}

impl Estimator for MomWeight {
    fn name(&self) -> &'static str {
        "mom-weight"
    }
    fn describe(&self) -> &'static str {
        "projection of the sample mean on the frozen mean direction"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        mom_weight(data, &frozen_theta(data, cfg))
    }
}

impl Estimator for Spectral {
    fn name(&self) -> &'static str {
        "spectral"
    }
    fn describe(&self) -> &'static str {
        "top eigenpair of the sample second moment (sign-free)"
    }
    fn estimate(&self, data: &Dataset, _cfg: &EstimatorConfig) -> Result<Estimate> {
        spectral_estimate(data)
    }
}

impl Estimator for Joint {
    fn name(&self) -> &'static str {
        "joint"
    }
    fn describe(&self) -> &'static str {
        "balanced mean EM then truncated weight EM, alternating for further phases"
    }
    fn estimate(&self, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        let (mut mean, weight) = joint_alternating(data, cfg)?;
        mean.weight = Some(Box::new(weight));
        Ok(mean)
    }
}

#[derive(Clone)]
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Estimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Every built-in estimator.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        let all: [Arc<dyn Estimator>; 8] = [
            Arc::new(UnbalancedEm),
            Arc::new(BalancedEm),
            Arc::new(AdaptiveEm),
            Arc::new(WeightEm),
            Arc::new(MomMean),
            Arc::new(MomWeight),
            Arc::new(Spectral),
            Arc::new(Joint),
        ];
        for e in all {
            r.register(e);
        }
        r
    }

    /// Adds an estimator, replacing any previous one with the same name.
    pub fn register(&mut self, estimator: Arc<dyn Estimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Estimator>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownEstimator(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Names in sorted order.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn run(&self, name: &str, data: &Dataset, cfg: &EstimatorConfig) -> Result<Estimate> {
        self.get(name)?.estimate(data, cfg)
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
