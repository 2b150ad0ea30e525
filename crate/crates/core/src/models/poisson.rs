//! Poisson regression with a log link and exposure offset.

use super::{check_counts, check_prior, check_rows, gaussian_log_prior, TargetModel};
use crate::csn::{cgf, SkewParams};
use crate::error::{CsnError, Result};
use crate::special::ln_gamma;
use nalgebra::{DMatrix, DVector};

/// `y_i ~ Poisson(T_i exp(x_i^T theta))`, `theta ~ N(0, sigma0_sq I)`.
#[derive(Debug, Clone)]
pub struct PoissonGlmModel {
    y: DVector<f64>,
    x: DMatrix<f64>,
    log_offset: DVector<f64>,
    sigma0_sq: f64,
    c: f64,
}

impl PoissonGlmModel {
    /// `log_offset` holds `ln T_i`; pass zeros for unit exposure.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, log_offset: Vec<f64>, sigma0_sq: f64) -> Result<PoissonGlmModel> {
        check_counts("y", &y)?;
        check_rows("X", y.len(), &x)?;
        check_prior(sigma0_sq)?;
        if log_offset.len() != y.len() {
            return Err(CsnError::Dimension(format!("offset has {} entries, expected {}", log_offset.len(), y.len())));
        }
        let c = y.iter().zip(&log_offset).map(|(yi, lt)| yi * lt - ln_gamma(yi + 1.0)).sum();
        Ok(PoissonGlmModel { y: DVector::from_vec(y), x, log_offset: DVector::from_vec(log_offset), sigma0_sq, c })
    }

    pub fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.x * theta;
        self.c
            + (0..self.y.len())
                .map(|i| self.y[i] * eta[i] - (eta[i] + self.log_offset[i]).exp())
                .sum::<f64>()
    }
}

impl TargetModel for PoissonGlmModel {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.log_likelihood(theta) + gaussian_log_prior(theta.as_slice(), self.sigma0_sq)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * theta;
        let resid = DVector::from_fn(self.y.len(), |i, _| self.y[i] - (eta[i] + self.log_offset[i]).exp());
        self.x.transpose() * resid - theta / self.sigma0_sq
    }

    /// Uses `E exp(x^T theta) = exp(K(x))` with the family's cumulant
    /// generating function `K`.
    fn closed_form_expected_logp(&self, params: &SkewParams) -> Option<f64> {
        if params.dim() != self.dim() {
            return None;
        }
        let mu = params.mu();
        let xmu = &self.x * mu;
        let mut total = self.c + self.y.dot(&xmu);
        for i in 0..self.y.len() {
            let xi = self.x.row(i).transpose();
            total -= (self.log_offset[i] + cgf(params, &xi)).exp();
        }
        let d = self.dim() as f64;
        let tr = params.sigma().trace();
        Some(total - 0.5 * d * (2.0 * std::f64::consts::PI * self.sigma0_sq).ln() - (tr + mu.dot(mu)) / (2.0 * self.sigma0_sq))
    }

    fn name(&self) -> &str {
        "poisson-glm"
    }
}
