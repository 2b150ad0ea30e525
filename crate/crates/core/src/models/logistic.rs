//! Binomial regression with a logit link.

use super::{check_counts, check_prior, check_rows, gaussian_log_prior, sigmoid, softplus, TargetModel};
use crate::error::{CsnError, Result};
use crate::special::ln_binomial;
use nalgebra::{DMatrix, DVector};

/// `y_i ~ Binomial(n_i, logit^{-1}(x_i^T theta))`, `theta ~ N(0, sigma0_sq I)`.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    y: DVector<f64>,
    trials: DVector<f64>,
    x: DMatrix<f64>,
    sigma0_sq: f64,
    c: f64,
}

impl LogisticModel {
    pub fn new(y: Vec<f64>, trials: Vec<f64>, x: DMatrix<f64>, sigma0_sq: f64) -> Result<LogisticModel> {
        check_counts("y", &y)?;
        check_counts("trials", &trials)?;
        check_rows("X", y.len(), &x)?;
        check_prior(sigma0_sq)?;
        if trials.len() != y.len() {
            return Err(CsnError::Dimension(format!("{} trial counts for {} responses", trials.len(), y.len())));
        }
        if let Some(i) = (0..y.len()).find(|&i| y[i] > trials[i]) {
            return Err(CsnError::Data(format!("y[{i}] = {} exceeds its trial count {}", y[i], trials[i])));
        }
        let c = y.iter().zip(&trials).map(|(&k, &n)| ln_binomial(n, k)).sum();
        Ok(LogisticModel { y: DVector::from_vec(y), trials: DVector::from_vec(trials), x, sigma0_sq, c })
    }

    /// Bernoulli responses.
    pub fn binary(y: Vec<f64>, x: DMatrix<f64>, sigma0_sq: f64) -> Result<LogisticModel> {
        let n = y.len();
        LogisticModel::new(y, vec![1.0; n], x, sigma0_sq)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.x * theta;
        self.c + (0..self.y.len()).map(|i| self.y[i] * eta[i] - self.trials[i] * softplus(eta[i])).sum::<f64>()
    }

    /// Success probabilities times trial counts at `theta`.
    pub fn fitted(&self, theta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * theta;
        DVector::from_fn(self.y.len(), |i, _| self.trials[i] * sigmoid(eta[i]))
    }
}

impl TargetModel for LogisticModel {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.log_likelihood(theta) + gaussian_log_prior(theta.as_slice(), self.sigma0_sq)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.x.transpose() * (&self.y - self.fitted(theta)) - theta / self.sigma0_sq
    }

    fn name(&self) -> &str {
        "logistic"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic::{self, Dataset};
    use crate::models::testing::check_gradient;

    fn bioassay_like() -> LogisticModel {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -0.86, 1.0, -0.3, 1.0, -0.05, 1.0, 0.73]);
        LogisticModel::new(vec![0.0, 1.0, 3.0, 5.0], vec![5.0; 4], x, 100.0).unwrap()
    }

    #[test]
    fn gradient() {
        check_gradient(&bioassay_like(), &DVector::from_vec(vec![0.8, 7.0]), 2.0, 20, 5);
        let Dataset::Logistic { y, trials, x } = synthetic::logistic(2, 200, 4) else { unreachable!() };
        let m = LogisticModel::new(y, trials, x, 100.0).unwrap();
        check_gradient(&m, &DVector::zeros(4), 1.0, 20, 6);
    }

    #[test]
    fn zero_coefficients() {
        let m = bioassay_like();
        let want: f64 = [0.0, 1.0, 3.0, 5.0].iter().map(|&k| ln_binomial(5.0, k)).sum::<f64>() - 20.0 * 2f64.ln();
        assert!((m.log_likelihood(&DVector::zeros(2)) - want).abs() < 1e-12);
    }

    #[test]
    fn extreme_linear_predictor_is_finite() {
        let m = bioassay_like();
        let t = DVector::from_vec(vec![0.0, 2000.0]);
        assert!(m.log_joint(&t).is_finite());
        assert!(m.grad_log_joint(&t).iter().all(|g| g.is_finite()));
    }

    #[test]
    fn mode_matches_newton_iterations() {
        let m = bioassay_like();
        // Iteratively reweighted least squares with the Gaussian prior.
        let mut beta = DVector::zeros(2);
        for _ in 0..50 {
            let p = m.fitted(&beta);
            let w = DVector::from_fn(4, |i, _| p[i] * (1.0 - p[i] / m.trials[i]));
            let h = m.x.transpose() * DMatrix::from_diagonal(&w) * &m.x + DMatrix::identity(2, 2) / 100.0;
            let g = m.grad_log_joint(&beta);
            beta += h.lu().solve(&g).unwrap();
        }
        let mode = crate::optim::laplace::find_mode(&m, &DVector::zeros(2)).unwrap();
        assert!((&mode - &beta).amax() < 1e-6, "{mode} vs {beta}");
    }

    #[test]
    fn rejects_inconsistent_data() {
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(LogisticModel::new(vec![3.0, 0.0], vec![2.0, 2.0], x.clone(), 1.0).is_err());
        assert!(LogisticModel::new(vec![1.0], vec![2.0], x, 1.0).is_err());
    }
}
