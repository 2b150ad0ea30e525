//! Run configuration read from TOML.

use crate::error::{CsnError, Result};
use crate::models::Link;
use crate::optim::OptimizerConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Variational family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    #[default]
    CsnCholesky,
    CsnLu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NormalSample,
    NormalVariance,
    PoissonGlm,
    Logistic,
    Zinb,
    Survival,
    Glmm,
}

/// Sizes for generated data when no CSV is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Rows, or subjects for the GLMM.
    pub n: Option<usize>,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    /// Covariates including the intercept (logistic only).
    pub columns: Option<usize>,
    /// Rows per subject (logit GLMM only).
    pub visits: Option<usize>,
    /// Random-effect standard deviation (GLMM only).
    pub sigma_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// CSV input; relative paths resolve against the config file's directory.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: SyntheticSpec,
    /// Prepend a column of ones to `X` and `Z`.
    #[serde(default = "yes")]
    pub intercept: bool,
    /// Prior variance of the mean or of regression coefficients.
    #[serde(default)]
    pub sigma0_sq: Option<f64>,
    /// Inverse-gamma prior on the variance (normal models).
    #[serde(default)]
    pub a0: Option<f64>,
    #[serde(default)]
    pub b0: Option<f64>,
    #[serde(default)]
    pub link: Option<Link>,
    /// Prior standard deviation of the random-effect covariance parameters.
    #[serde(default)]
    pub sigma_zeta: Option<f64>,
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("csnvi-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Drives the optimiser and synthetic data; overrides `optimizer.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub family: Family,
    /// Fit the Gaussian first and start the CSN fit from it.
    #[serde(default = "yes")]
    pub warm_start: bool,
    pub model: ModelSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| CsnError::Config(e.to_string()))
    }

    /// Parse a config file and resolve the data path against its directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CsnError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let (Some(data), Some(dir)) = (&cfg.model.data, path.parent()) {
            if data.is_relative() {
                cfg.model.data = Some(dir.join(data));
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.optimizer.seed)
    }

    /// The optimiser settings actually used: seed and factor form filled in.
    pub fn resolved_optimizer(&self) -> OptimizerConfig {
        let mut o = self.optimizer.clone();
        o.seed = self.seed();
        o.factor = match self.family {
            Family::CsnLu => crate::csn::FactorKind::Lu,
            _ => crate::csn::FactorKind::Cholesky,
        };
        o
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_optimizer().validate()?;
        let m = &self.model;
        for (name, v) in [("sigma0_sq", m.sigma0_sq), ("a0", m.a0), ("b0", m.b0), ("sigma_zeta", m.sigma_zeta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CsnError::Config(format!("model.{name} must be positive, got {v}")));
                }
            }
        }
        if m.link.is_some() && m.kind != ModelKind::Glmm {
            return Err(CsnError::Config("model.link applies to the glmm model only".into()));
        }
        if self.family == Family::CsnLu && m.kind == ModelKind::Glmm {
            return Err(CsnError::Config("the glmm model uses block-diagonal Cholesky factors; use csn-cholesky".into()));
        }
        if let Some(s) = m.synthetic.sigma_b {
            if !(s.is_finite() && s >= 0.0) {
                return Err(CsnError::Config(format!("model.synthetic.sigma_b must be non-negative, got {s}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_toml("[model]\nkind = \"normal-sample\"\n").unwrap();
        assert_eq!(c.family, Family::CsnCholesky);
        assert_eq!(c.optimizer.iterations, 50_000);
        assert!(c.warm_start);
        c.validate().unwrap();
    }

    #[test]
    fn seed_precedence_and_family_factor() {
        let c = RunConfig::from_toml(
            "seed = 4\nfamily = \"csn-lu\"\n[model]\nkind = \"normal-sample\"\n[optimizer]\nseed = 9\nparametrization = \"lambda\"\n",
        )
        .unwrap();
        let o = c.resolved_optimizer();
        assert_eq!(o.seed, 4);
        assert_eq!(o.factor, crate::csn::FactorKind::Lu);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml("[model]\nkind = \"normal-sample\"\nfoo = 1\n").is_err());
        assert!(RunConfig::from_toml("[model]\nkind = \"banana\"\n").is_err());
        let c = RunConfig::from_toml("[model]\nkind = \"normal-sample\"\n[optimizer]\nstep = -1.0\n").unwrap();
        assert!(matches!(c.validate(), Err(CsnError::Config(_))));
    }
}
