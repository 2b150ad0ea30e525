//! Target posteriors: log joint densities, their gradients and closed-form
//! expected log joints where available.

pub mod glmm;
pub mod logistic;
pub mod meanfield;
pub mod normal;
pub mod poisson;
pub mod synthetic;
pub mod weibull;
pub mod zinb;

pub use glmm::{GlmmModel, Link};
pub use logistic::LogisticModel;
pub use meanfield::{meanfield_structure, BlockLayout, BlockParams};
pub use normal::{exact_posterior_normalizer_2d, NormalPriors, NormalSampleModel, NormalVarianceModel, PosteriorGrid2d};
pub use poisson::PoissonGlmModel;
pub use synthetic::Dataset;
pub use weibull::WeibullModel;
pub use zinb::ZinbModel;

use crate::csn::SkewParams;
use crate::error::{CsnError, Result};
use nalgebra::{DMatrix, DVector};

/// Prior variance for regression coefficients unless overridden.
pub const DEFAULT_SIGMA0_SQ: f64 = 100.0;

/// An unnormalised posterior `p(y, theta)` over `theta` in `R^d`.
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    fn log_joint(&self, theta: &DVector<f64>) -> f64;

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64>;

    fn log_joint_and_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.log_joint(theta), self.grad_log_joint(theta))
    }

    /// `E_q ln p(y, theta)` in closed form, when the model has one.
    fn closed_form_expected_logp(&self, _params: &SkewParams) -> Option<f64> {
        None
    }

    /// Block structure of the variational family; dense by default.
    fn block_layout(&self) -> BlockLayout {
        BlockLayout::dense(self.dim())
    }

    /// Coordinates held at their starting values when searching for a
    /// posterior mode, for models whose joint mode is degenerate.
    fn frozen_for_mode(&self) -> Vec<usize> {
        Vec::new()
    }

    fn name(&self) -> &str;
}

/// Central-difference gradient of `model.log_joint`, step scaled per coordinate.
pub fn finite_difference_gradient(model: &dyn TargetModel, theta: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(theta.len(), |i, _| {
        let h = 1e-5 * theta[i].abs().max(1.0);
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[i] += h;
        dn[i] -= h;
        (model.log_joint(&up) - model.log_joint(&dn)) / (2.0 * h)
    })
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln N(theta | 0, s2 I)` summed over the entries of `theta`.
pub(crate) fn gaussian_log_prior(theta: &[f64], s2: f64) -> f64 {
    let k = theta.len() as f64;
    -0.5 * k * (2.0 * std::f64::consts::PI * s2).ln() - theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * s2)
}

pub(crate) fn check_rows(what: &str, n: usize, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != n {
        return Err(CsnError::Dimension(format!("{what} has {} rows, expected {n}", m.nrows())));
    }
    Ok(())
}

pub(crate) fn check_counts(what: &str, y: &[f64]) -> Result<()> {
    if let Some(k) = y.iter().position(|v| !(*v >= 0.0) || v.fract() != 0.0) {
        return Err(CsnError::Data(format!("{what}[{k}] = {} is not a non-negative integer", y[k])));
    }
    Ok(())
}

pub(crate) fn check_prior(s2: f64) -> Result<()> {
    if !(s2 > 0.0 && s2.is_finite()) {
        return Err(CsnError::InvalidArgument(format!("prior variance must be positive, got {s2}")));
    }
    Ok(())
}
