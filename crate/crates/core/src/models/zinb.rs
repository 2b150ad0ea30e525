//! Zero-inflated negative binomial regression.

use super::{check_counts, check_prior, check_rows, gaussian_log_prior, sigmoid, softplus, TargetModel};
use crate::error::Result;
use crate::special::{digamma, ln_gamma};
use nalgebra::{DMatrix, DVector};

/// Zero with probability `logit^{-1}(z_i^T gamma)`, otherwise negative
/// binomial with mean `exp(x_i^T beta)` and dispersion `alpha`.
///
/// `theta = (beta, gamma, ln alpha)`.
#[derive(Debug, Clone)]
pub struct ZinbModel {
    y: Vec<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    sigma0_sq: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl ZinbModel {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64>, sigma0_sq: f64) -> Result<ZinbModel> {
        check_counts("y", &y)?;
        check_rows("X", y.len(), &x)?;
        check_rows("Z", y.len(), &z)?;
        check_prior(sigma0_sq)?;
        Ok(ZinbModel { y, x, z, sigma0_sq })
    }

    fn split(&self, theta: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
        let p = self.x.ncols();
        let q = self.z.ncols();
        (theta.rows(0, p).into_owned(), theta.rows(p, q).into_owned(), theta[p + q])
    }

    /// Log-likelihood and its gradient.
    fn evaluate(&self, theta: &DVector<f64>, want_grad: bool) -> (f64, DVector<f64>) {
        let (beta, gamma, omega) = self.split(theta);
        let (p, q) = (beta.len(), gamma.len());
        let ex = &self.x * &beta;
        let ez = &self.z * &gamma;
        let alpha = omega.exp();
        let r = 1.0 / alpha;
        let mut ll = 0.0;
        let mut g_ex = DVector::zeros(self.y.len());
        let mut g_ez = DVector::zeros(self.y.len());
        let mut g_omega = 0.0;
        for i in 0..self.y.len() {
            let y = self.y[i];
            let mu = ex[i].exp();
            // ln(1 + alpha mu), kept accurate for tiny alpha mu.
            let l1p = (omega + ex[i]).exp().ln_1p();
            let am = alpha * mu / (1.0 + alpha * mu);
            ll -= softplus(ez[i]);
            if want_grad {
                g_ez[i] -= sigmoid(ez[i]);
            }
            if y == 0.0 {
                let log_p0 = -r * l1p;
                let lse = log_add_exp(ez[i], log_p0);
                ll += lse;
                if want_grad {
                    let w0 = (log_p0 - lse).exp();
                    g_ez[i] += (ez[i] - lse).exp();
                    g_ex[i] += -w0 * mu / (1.0 + alpha * mu);
                    g_omega += w0 * r * (l1p - am);
                }
            } else {
                // ln(mu + r) = ln r + ln(1 + alpha mu).
                let log_mu_r = -omega + l1p;
                ll += y * ex[i] - r * omega + ln_gamma(y + r) - ln_gamma(r) - ln_gamma(y + 1.0) - (y + r) * log_mu_r;
                if want_grad {
                    g_ex[i] += (y - mu) / (1.0 + alpha * mu);
                    let dr = -omega + 1.0 + digamma(y + r) - digamma(r) - log_mu_r - (y + r) / (mu + r);
                    g_omega += -r * dr;
                }
            }
        }
        let mut grad = DVector::zeros(p + q + 1);
        if want_grad {
            grad.rows_mut(0, p).copy_from(&(self.x.transpose() * g_ex));
            grad.rows_mut(p, q).copy_from(&(self.z.transpose() * g_ez));
            grad[p + q] = g_omega;
        }
        (ll, grad)
    }

    pub fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        self.evaluate(theta, false).0
    }
}

impl TargetModel for ZinbModel {
    fn dim(&self) -> usize {
        self.x.ncols() + self.z.ncols() + 1
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.log_likelihood(theta) + gaussian_log_prior(theta.as_slice(), self.sigma0_sq)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.evaluate(theta, true).1 - theta / self.sigma0_sq
    }

    fn log_joint_and_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (ll, g) = self.evaluate(theta, true);
        (ll + gaussian_log_prior(theta.as_slice(), self.sigma0_sq), g - theta / self.sigma0_sq)
    }

    fn name(&self) -> &str {
        "zinb"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic::{self, Dataset};
    use crate::models::testing::check_gradient;

    fn fixture() -> ZinbModel {
        let Dataset::Zinb { y, x, z } = synthetic::zinb(4, 150) else { unreachable!() };
        ZinbModel::new(y, x, z, 100.0).unwrap()
    }

    #[test]
    fn gradient() {
        let m = fixture();
        let centre = DVector::from_vec(vec![0.5, 0.8, -0.4, -0.5, 0.7, 0.0, 0.0]);
        check_gradient(&m, &centre, 0.3, 20, 8);
    }

    #[test]
    fn all_zero_counts() {
        let m = fixture();
        let y0 = vec![0.0; m.y.len()];
        let m0 = ZinbModel::new(y0, m.x.clone(), m.z.clone(), 100.0).unwrap();
        let theta = DVector::from_vec(vec![0.3, -0.2, 0.1, 0.4, -0.6, 0.2, -0.3]);
        let (beta, gamma, omega) = m0.split(&theta);
        let alpha = omega.exp();
        let ex = &m0.x * beta;
        let ez = &m0.z * gamma;
        let want: f64 = (0..m0.y.len())
            .map(|i| (ez[i].exp() + (alpha * ex[i].exp() + 1.0).powf(-1.0 / alpha)).ln() - (1.0 + ez[i].exp()).ln())
            .sum();
        assert!((m0.log_likelihood(&theta) - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn small_dispersion_approaches_zip() {
        let m = fixture();
        let theta = DVector::from_vec(vec![0.5, 0.8, -0.4, -0.5, 0.7, 0.0, (1e-7f64).ln()]);
        let (beta, gamma, _) = m.split(&theta);
        let ex = &m.x * beta;
        let ez = &m.z * gamma;
        let zip: f64 = (0..m.y.len())
            .map(|i| {
                let phi = 1.0 / (1.0 + (-ez[i]).exp());
                let mu = ex[i].exp();
                if m.y[i] == 0.0 {
                    (phi + (1.0 - phi) * (-mu).exp()).ln()
                } else {
                    (1.0 - phi).ln() + m.y[i] * ex[i] - mu - ln_gamma(m.y[i] + 1.0)
                }
            })
            .sum();
        assert!((m.log_likelihood(&theta) - zip).abs() < 1e-3);
    }

    #[test]
    fn rejects_negative_counts() {
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(ZinbModel::new(vec![-1.0, 2.0], x.clone(), x, 100.0).is_err());
    }
}
