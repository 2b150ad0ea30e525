use crate::csn::{FactorKind, Parametrization};
use crate::error::{CsnError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Euclidean gradients with Adam step sizes.
    #[default]
    EuclideanAdam,
    /// Natural gradients with a constant step.
    NaturalConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Initial skewness in `lambda` space: one value for every coordinate or
/// one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SkewInit {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Default for SkewInit {
    fn default() -> Self {
        SkewInit::Scalar(1.0)
    }
}

impl SkewInit {
    pub fn expand(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            SkewInit::Scalar(v) => Ok(vec![*v; d]),
            SkewInit::Vector(v) if v.len() == d => Ok(v.clone()),
            SkewInit::Vector(v) => Err(CsnError::Config(format!("skew_init has {} entries, model has {d}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub mode: GradientMode,
    /// Adam base step, or the constant natural-gradient step.
    pub step: f64,
    pub adam: AdamConfig,
    pub iterations: usize,
    pub mc_samples_per_step: usize,
    pub trace_window: usize,
    pub seed: u64,
    pub skew_init: SkewInit,
    pub parametrization: Parametrization,
    pub factor: FactorKind,
    /// Update the skewness block; off reduces the fit to a Gaussian one.
    pub update_skew: bool,
    /// Stop once the windowed ELBO changes by less than `1e-4` (relative)
    /// over five windows.
    pub plateau_stop: bool,
    /// Record the full parameter vector with every trace window.
    pub snapshot_params: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            mode: GradientMode::EuclideanAdam,
            step: 1e-3,
            adam: AdamConfig::default(),
            iterations: 50_000,
            mc_samples_per_step: 1,
            trace_window: 1000,
            seed: 0,
            skew_init: SkewInit::default(),
            parametrization: Parametrization::AlphaCubed,
            factor: FactorKind::Cholesky,
            update_skew: true,
            plateau_stop: false,
            snapshot_params: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CsnError::Config(format!("step must be positive, got {}", self.step)));
        }
        if self.trace_window == 0 {
            return Err(CsnError::Config("trace_window must be at least 1".into()));
        }
        if self.mc_samples_per_step == 0 {
            return Err(CsnError::Config("mc_samples_per_step must be at least 1".into()));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return Err(CsnError::Config(format!("invalid Adam settings {a:?}")));
        }
        Ok(())
    }
}
