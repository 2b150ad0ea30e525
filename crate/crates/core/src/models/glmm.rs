//! Generalized linear mixed models with canonical links.

use super::meanfield::{meanfield_structure, BlockLayout};
use super::{check_prior, check_rows, gaussian_log_prior, sigmoid, softplus, TargetModel};
use crate::error::{CsnError, Result};
use crate::linalg::{tri_len, vech, vech_inv};
use crate::special::{ln_gamma, HALF_LN_2PI};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Bernoulli responses, `A(eta) = ln(1 + e^eta)`.
    Logit,
    /// Poisson responses, `A(eta) = e^eta`.
    Log,
}

impl Link {
    fn log_partition(self, eta: f64) -> f64 {
        match self {
            Link::Logit => softplus(eta),
            Link::Log => eta.exp(),
        }
    }

    fn mean(self, eta: f64) -> f64 {
        match self {
            Link::Logit => sigmoid(eta),
            Link::Log => eta.exp(),
        }
    }
}

/// `eta_ij = x_ij^T beta + z_ij^T b_i`, `b_i ~ N(0, (W W^T)^{-1})`.
///
/// `theta = (b_1, ..., b_n, beta, zeta)` where `zeta = vech(W*)` and `W*`
/// is `W` with its diagonal on the log scale.
#[derive(Debug, Clone)]
pub struct GlmmModel {
    y: DVector<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    subjects: Vec<Range<usize>>,
    link: Link,
    sigma_beta: f64,
    sigma_zeta: f64,
    c: f64,
}

impl GlmmModel {
    /// `groups[k]` is the subject of row `k`; rows of one subject must be
    /// contiguous and subjects numbered `0, 1, ...` in order.
    pub fn new(
        y: Vec<f64>,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        groups: &[usize],
        link: Link,
        sigma_beta: f64,
        sigma_zeta: f64,
    ) -> Result<GlmmModel> {
        check_rows("X", y.len(), &x)?;
        check_rows("Z", y.len(), &z)?;
        check_prior(sigma_beta)?;
        check_prior(sigma_zeta)?;
        if groups.len() != y.len() {
            return Err(CsnError::Dimension(format!("{} group labels for {} rows", groups.len(), y.len())));
        }
        let mut subjects: Vec<Range<usize>> = Vec::new();
        for (k, &g) in groups.iter().enumerate() {
            let count = subjects.len();
            match subjects.last_mut() {
                Some(r) if g + 1 == count => r.end = k + 1,
                _ if g == count => subjects.push(k..k + 1),
                _ => {
                    return Err(CsnError::Data(format!(
                        "group labels must be contiguous and numbered in order; row {k} has label {g}"
                    )))
                }
            }
        }
        for (k, &v) in y.iter().enumerate() {
            let ok = match link {
                Link::Logit => v == 0.0 || v == 1.0,
                Link::Log => v >= 0.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(CsnError::Data(format!("y[{k}] = {v} is not a valid {link:?}-link response")));
            }
        }
        let c = match link {
            Link::Logit => 0.0,
            Link::Log => -y.iter().map(|v| ln_gamma(v + 1.0)).sum::<f64>(),
        };
        Ok(GlmmModel { y: DVector::from_vec(y), x, z, subjects, link, sigma_beta, sigma_zeta, c })
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    /// Random-effect dimension.
    pub fn r(&self) -> usize {
        self.z.ncols()
    }

    /// Fixed-effect dimension.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Mean-field layout: one block per `b_i`, then `(beta, zeta)`.
    pub fn layout(&self) -> BlockLayout {
        meanfield_structure(self.n_subjects(), self.r(), self.p() + tri_len(self.r()))
    }

    /// `W` from `zeta`.
    pub fn w_from_zeta(zeta: &DVector<f64>, r: usize) -> DMatrix<f64> {
        let mut w = vech_inv(zeta, r);
        for i in 0..r {
            w[(i, i)] = w[(i, i)].exp();
        }
        w
    }

    fn evaluate(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (n, r, p) = (self.n_subjects(), self.r(), self.p());
        let beta = theta.rows(n * r, p).into_owned();
        let zeta = theta.rows(n * r + p, tri_len(r)).into_owned();
        let w = Self::w_from_zeta(&zeta, r);
        let g = &w * w.transpose();
        let xb = &self.x * &beta;
        let mut grad = DVector::zeros(theta.len());
        let mut ll = self.c;
        let mut g_beta = DVector::zeros(p);
        let mut bbw = DMatrix::zeros(r, r);
        let mut quad = 0.0;
        for (i, rows) in self.subjects.iter().enumerate() {
            let b = theta.rows(i * r, r).into_owned();
            let mut g_b = -(&g * &b);
            for k in rows.clone() {
                let eta = xb[k] + self.z.row(k).dot(&b.transpose());
                ll += self.y[k] * eta - self.link.log_partition(eta);
                let resid = self.y[k] - self.link.mean(eta);
                g_b += resid * self.z.row(k).transpose();
                g_beta += resid * self.x.row(k).transpose();
            }
            quad += b.dot(&(&g * &b));
            bbw += &b * (b.transpose() * &w);
            grad.rows_mut(i * r, r).copy_from(&g_b);
        }
        let log_det_w: f64 = (0..r).map(|i| zeta[vech_diag_index(i, r)]).sum();
        let nf = n as f64;
        let log_h = ll + nf * log_det_w - 0.5 * quad - nf * r as f64 * HALF_LN_2PI
            + gaussian_log_prior(beta.as_slice(), self.sigma_beta.powi(2))
            + gaussian_log_prior(zeta.as_slice(), self.sigma_zeta.powi(2));
        grad.rows_mut(n * r, p).copy_from(&(g_beta - &beta / self.sigma_beta.powi(2)));
        let mut g_zeta = -vech(&bbw);
        for i in 0..r {
            let k = vech_diag_index(i, r);
            g_zeta[k] = g_zeta[k] * w[(i, i)] + nf;
        }
        g_zeta -= &zeta / self.sigma_zeta.powi(2);
        grad.rows_mut(n * r + p, tri_len(r)).copy_from(&g_zeta);
        (log_h, grad)
    }
}

/// Position of `(i, i)` in the column-wise `vech` of an `r x r` matrix.
fn vech_diag_index(i: usize, r: usize) -> usize {
    (0..i).map(|j| r - j).sum()
}

impl TargetModel for GlmmModel {
    fn dim(&self) -> usize {
        self.n_subjects() * self.r() + self.p() + tri_len(self.r())
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.evaluate(theta).0
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.evaluate(theta).1
    }

    fn log_joint_and_grad(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        self.evaluate(theta)
    }

    fn block_layout(&self) -> BlockLayout {
        self.layout()
    }

    /// The joint mode sends the random-effect precision to infinity, so
    /// `zeta` stays at its starting value.
    fn frozen_for_mode(&self) -> Vec<usize> {
        let start = self.n_subjects() * self.r() + self.p();
        (start..start + tri_len(self.r())).collect()
    }

    fn name(&self) -> &str {
        match self.link {
            Link::Logit => "glmm-logit",
            Link::Log => "glmm-poisson",
        }
    }
}
