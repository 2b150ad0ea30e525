//! Weibull proportional-hazards survival regression with right censoring.

use super::{check_prior, check_rows, gaussian_log_prior, TargetModel};
use crate::error::{CsnError, Result};
use nalgebra::{DMatrix, DVector};

/// Hazard `rho t^{rho - 1} exp(x^T beta)` with shape `rho = exp(z^T gamma)`.
///
/// `theta = (beta, gamma)`; `events[i]` is 1 for an observed failure and 0
/// for a censored time.
#[derive(Debug, Clone)]
pub struct WeibullModel {
    log_t: DVector<f64>,
    events: DVector<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    sigma0_sq: f64,
}

impl WeibullModel {
    pub fn new(t: Vec<f64>, events: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64>, sigma0_sq: f64) -> Result<WeibullModel> {
        if let Some(i) = t.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(CsnError::Data(format!("survival time t[{i}] = {} must be positive", t[i])));
        }
        if events.len() != t.len() {
            return Err(CsnError::Dimension(format!("{} event indicators for {} times", events.len(), t.len())));
        }
        if let Some(i) = events.iter().position(|d| *d != 0.0 && *d != 1.0) {
            return Err(CsnError::Data(format!("event indicator d[{i}] = {} is not 0 or 1", events[i])));
        }
        check_rows("X", t.len(), &x)?;
        check_rows("Z", t.len(), &z)?;
        check_prior(sigma0_sq)?;
        let log_t = DVector::from_iterator(t.len(), t.iter().map(|v| v.ln()));
        Ok(WeibullModel { log_t, events: DVector::from_vec(events), x, z, sigma0_sq })
    }

    fn evaluate(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let p = self.x.ncols();
        let q = self.z.ncols();
        let ex = &self.x * theta.rows(0, p);
        let ez = &self.z * theta.rows(p, q);
        let n = self.log_t.len();
        let mut ll = 0.0;
        let mut g_ex = DVector::zeros(n);
        let mut g_ez = DVector::zeros(n);
        for i in 0..n {
            let rho = ez[i].exp();
            let lt = self.log_t[i];
            let d = self.events[i];
            let cum = (ex[i] + rho * lt).exp();
            ll += d * (ez[i] + (rho - 1.0) * lt + ex[i]) - cum;
            g_ex[i] = d - cum;
            g_ez[i] = d * (1.0 + rho * lt) - cum * rho * lt;
        }
        let mut grad = DVector::zeros(p + q);
        grad.rows_mut(0, p).copy_from(&(self.x.transpose() * g_ex));
        grad.rows_mut(p, q).copy_from(&(self.z.transpose() * g_ez));
        (ll, grad)
    }

    pub fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        self.evaluate(theta).0
    }
}

impl TargetModel for WeibullModel {
    fn dim(&self) -> usize {
        self.x.ncols() + self.z.ncols()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.log_likelihood(theta) + gaussian_log_prior(theta.as_slice(), self.sigma0_sq)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.evaluate(theta).1 - theta / self.sigma0_sq
    }

    fn log_joint_and_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (ll, g) = self.evaluate(theta);
        (ll + gaussian_log_prior(theta.as_slice(), self.sigma0_sq), g - theta / self.sigma0_sq)
    }

    fn name(&self) -> &str {
        "weibull"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic::{self, Dataset};
    use crate::models::testing::check_gradient;

    fn fixture() -> (Vec<f64>, Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
        let Dataset::Survival { t, events, x, z } = synthetic::survival(5, 120) else { unreachable!() };
        (t, events, x, z)
    }

    #[test]
    fn gradient() {
        let (t, d, x, z) = fixture();
        let m = WeibullModel::new(t, d, x, z, 100.0).unwrap();
        check_gradient(&m, &DVector::from_vec(vec![-1.0, 0.5, 0.2, -0.1]), 0.2, 20, 9);
    }

    #[test]
    fn unit_shape_is_exponential() {
        let (t, d, x, _) = fixture();
        let z = DMatrix::from_element(t.len(), 1, 1.0);
        let m = WeibullModel::new(t.clone(), d.clone(), x.clone(), z, 100.0).unwrap();
        let beta = DVector::from_vec(vec![-0.7, 0.4]);
        let theta = DVector::from_vec(vec![-0.7, 0.4, 0.0]);
        let eta = &x * &beta;
        let want: f64 = (0..t.len()).map(|i| d[i] * eta[i] - eta[i].exp() * t[i]).sum();
        assert!((m.log_likelihood(&theta) - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn all_censored() {
        let (t, _, x, z) = fixture();
        let m = WeibullModel::new(t.clone(), vec![0.0; t.len()], x.clone(), z.clone(), 100.0).unwrap();
        let theta = DVector::from_vec(vec![-1.0, 0.5, 0.2, -0.1]);
        let ex = &x * theta.rows(0, 2);
        let ez = &z * theta.rows(2, 2);
        let want: f64 = -(0..t.len()).map(|i| ex[i].exp() * t[i].powf(ez[i].exp())).sum::<f64>()
            + gaussian_log_prior(theta.as_slice(), 100.0);
        assert!((m.log_joint(&theta) - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(WeibullModel::new(vec![1.0, 0.0], vec![1.0, 0.0], x.clone(), x.clone(), 1.0).is_err());
        assert!(WeibullModel::new(vec![1.0, 2.0], vec![1.0, 0.5], x.clone(), x, 1.0).is_err());
    }
}
