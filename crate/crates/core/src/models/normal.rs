//! Normal observations with unknown mean and log-variance, its
//! known-mean special case, and their exact posteriors.

use super::TargetModel;
use crate::csn::{tilted_moments, SkewParams};
use crate::error::{CsnError, Result};
use crate::metrics::DensityGrid;
use crate::quadrature::{composite_gl_nodes, log_level_bounds};
use crate::special::{ln_gamma, norm_cdf, norm_log_pdf, B, HALF_LN_2PI};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `theta_1 ~ N(0, sigma0_sq)` and `exp(theta_2) ~ IG(a0, b0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPriors {
    pub a0: f64,
    pub b0: f64,
    pub sigma0_sq: f64,
}

impl Default for NormalPriors {
    fn default() -> Self {
        NormalPriors { a0: 0.01, b0: 0.01, sigma0_sq: 1e4 }
    }
}

impl NormalPriors {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("a0", self.a0), ("b0", self.b0), ("sigma0_sq", self.sigma0_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CsnError::InvalidArgument(format!("prior {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sufficient statistics: `n`, mean, and the centred sum of squares.
#[derive(Debug, Clone, Copy)]
struct Summary {
    n: f64,
    mean: f64,
    ss: f64,
}

impl Summary {
    fn of(y: &[f64]) -> Summary {
        let n = y.len() as f64;
        if y.is_empty() {
            return Summary { n, mean: 0.0, ss: 0.0 };
        }
        let mean = y.iter().sum::<f64>() / n;
        let ss = y.iter().map(|v| (v - mean).powi(2)).sum();
        Summary { n, mean, ss }
    }

    /// `sum_i (y_i - a)^2`.
    fn ss_about(&self, a: f64) -> f64 {
        self.ss + self.n * (self.mean - a).powi(2)
    }
}

/// `y_i ~ N(theta_1, exp(theta_2))`, `theta = (theta_1, theta_2)`.
#[derive(Debug, Clone)]
pub struct NormalSampleModel {
    y: Vec<f64>,
    priors: NormalPriors,
    stats: Summary,
    c_star: f64,
}

impl NormalSampleModel {
    pub fn new(y: Vec<f64>, priors: NormalPriors) -> Result<NormalSampleModel> {
        if y.is_empty() {
            return Err(CsnError::Data("normal-sample model needs at least one observation".into()));
        }
        priors.validate()?;
        let stats = Summary::of(&y);
        let n = stats.n;
        let c_star = priors.a0 * priors.b0.ln() - ln_gamma(priors.a0)
            - 0.5 * priors.sigma0_sq.ln()
            - (n + 1.0) * HALF_LN_2PI;
        Ok(NormalSampleModel { y, priors, stats, c_star })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn priors(&self) -> NormalPriors {
        self.priors
    }
}

impl TargetModel for NormalSampleModel {
    fn dim(&self) -> usize {
        2
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        let NormalPriors { a0, b0, sigma0_sq } = self.priors;
        let (t1, t2) = (theta[0], theta[1]);
        self.c_star - (a0 + 0.5 * self.stats.n) * t2 - (-t2).exp() * (b0 + 0.5 * self.stats.ss_about(t1))
            - t1 * t1 / (2.0 * sigma0_sq)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        let NormalPriors { a0, b0, sigma0_sq } = self.priors;
        let (t1, t2) = (theta[0], theta[1]);
        let e = (-t2).exp();
        let s = &self.stats;
        DVector::from_vec(vec![
            e * s.n * (s.mean - t1) - t1 / sigma0_sq,
            -(a0 + 0.5 * s.n) + e * (b0 + 0.5 * s.ss_about(t1)),
        ])
    }

    fn closed_form_expected_logp(&self, params: &SkewParams) -> Option<f64> {
        if params.dim() != 2 {
            return None;
        }
        let NormalPriors { a0, b0, sigma0_sq } = self.priors;
        let tilt = tilted_moments(params, &DVector::from_vec(vec![0.0, -1.0]));
        let t = self.stats.ss_about(tilt.mean[0]) + self.stats.n * tilt.cov[(0, 0)];
        let mu = params.mu();
        let s11 = params.sigma()[(0, 0)];
        Some(
            self.c_star - (a0 + 0.5 * self.stats.n) * mu[1] - tilt.log_m.exp() * (b0 + 0.5 * t)
                - (s11 + mu[0] * mu[0]) / (2.0 * sigma0_sq),
        )
    }

    fn name(&self) -> &str {
        "normal-sample"
    }
}

/// `y_i ~ N(0, exp(theta))` with `exp(theta) ~ IG(a0, b0)`.
///
/// The posterior of `exp(theta)` is `IG(a0 + n/2, b0 + sum y^2 / 2)`.
#[derive(Debug, Clone)]
pub struct NormalVarianceModel {
    y: Vec<f64>,
    priors: NormalPriors,
    shape: f64,
    rate: f64,
    c: f64,
}

impl NormalVarianceModel {
    /// Only `a0` and `b0` of `priors` are used.
    pub fn new(y: Vec<f64>, priors: NormalPriors) -> Result<NormalVarianceModel> {
        priors.validate()?;
        let n = y.len() as f64;
        let shape = priors.a0 + 0.5 * n;
        let rate = priors.b0 + 0.5 * y.iter().map(|v| v * v).sum::<f64>();
        let c = priors.a0 * priors.b0.ln() - ln_gamma(priors.a0) - n * HALF_LN_2PI;
        Ok(NormalVarianceModel { y, priors, shape, rate, c })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn priors(&self) -> NormalPriors {
        self.priors
    }

    /// Posterior `(A, B)` of the inverse-gamma law of `exp(theta)`.
    pub fn posterior_shape_rate(&self) -> (f64, f64) {
        (self.shape, self.rate)
    }

    pub fn exact_log_posterior(&self, theta: f64) -> f64 {
        let (a, b) = (self.shape, self.rate);
        a * b.ln() - ln_gamma(a) - a * theta - b * (-theta).exp()
    }

    /// `ln p(y)`.
    pub fn log_evidence(&self) -> f64 {
        self.c + ln_gamma(self.shape) - self.shape * self.rate.ln()
    }

    /// The exact posterior on `points` abscissae covering the region where
    /// it exceeds `e^{-40}` times its mode.
    pub fn exact_posterior_grid(&self, points: usize) -> DensityGrid {
        let mode = (self.rate / self.shape).ln();
        let f = |t: f64| self.exact_log_posterior(t + mode);
        let (_, _, lo, hi) = log_level_bounds(f, 50.0, 40.0);
        DensityGrid::from_fn(lo + mode, hi + mode, points, |t| self.exact_log_posterior(t).exp())
    }

    /// `ln E e^{-sigma z}` for the standardized skew normal `z`.
    fn log_mgf_neg(sigma: f64, lambda: f64) -> f64 {
        let kappa2 = 1.0 / (1.0 + (1.0 - 2.0 / PI) * lambda * lambda);
        let alpha = lambda * kappa2.sqrt();
        let var = kappa2 + alpha * alpha;
        0.5 * sigma * sigma * var + B * sigma * alpha + (2.0 * norm_cdf(-sigma * alpha)).ln()
    }

    /// The location maximising the ELBO for fixed `(sigma, lambda)`.
    pub fn profile_mu(&self, sigma: f64, lambda: f64) -> f64 {
        Self::log_mgf_neg(sigma, lambda) - self.shape.ln() + self.rate.ln()
    }

    /// The ELBO maximised over the location, as a function of `(sigma, lambda)`.
    pub fn profile_elbo(&self, sigma: f64, lambda: f64) -> f64 {
        let mu = self.profile_mu(sigma, lambda);
        let params = SkewParams::cholesky(
            DVector::from_element(1, mu),
            DMatrix::from_element(1, 1, sigma),
            DVector::from_element(1, lambda),
            crate::csn::Parametrization::Lambda,
        )
        .expect("sigma must be non-zero");
        self.c - self.shape * (mu + 1.0) + crate::csn::entropy(&params)
    }
}

impl TargetModel for NormalVarianceModel {
    fn dim(&self) -> usize {
        1
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        self.c - self.shape * theta[0] - (-theta[0]).exp() * self.rate
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, -self.shape + (-theta[0]).exp() * self.rate)
    }

    fn closed_form_expected_logp(&self, params: &SkewParams) -> Option<f64> {
        if params.dim() != 1 {
            return None;
        }
        let tilt = tilted_moments(params, &DVector::from_element(1, -1.0));
        Some(self.c - self.shape * params.mu()[0] - self.rate * tilt.log_m.exp())
    }

    fn name(&self) -> &str {
        "normal-variance"
    }
}

/// The normal-sample posterior on a tensor grid.
#[derive(Debug, Clone)]
pub struct PosteriorGrid2d {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// `density[(i, j)]` is the posterior at `(theta1[i], theta2[j])`.
    pub density: DMatrix<f64>,
    pub log_evidence: f64,
    /// Marginal of `theta_1` by quadrature over `theta_2`.
    pub marginal_theta1: DensityGrid,
    pub marginal_theta2: DensityGrid,
}

impl PosteriorGrid2d {
    pub fn marginal(&self, i: usize) -> &DensityGrid {
        if i == 0 {
            &self.marginal_theta1
        } else {
            &self.marginal_theta2
        }
    }
}

/// `theta_1 | theta_2, y ~ N(m, v)` and `ln p(y, theta_2)`.
struct Collapsed {
    stats: Summary,
    priors: NormalPriors,
    k: f64,
}

impl Collapsed {
    fn new(y: &[f64], priors: NormalPriors) -> Collapsed {
        let stats = Summary::of(y);
        let k = priors.a0 * priors.b0.ln() - ln_gamma(priors.a0) - stats.n * HALF_LN_2PI - 0.5 * priors.sigma0_sq.ln();
        Collapsed { stats, priors, k }
    }

    fn conditional(&self, t2: f64) -> (f64, f64) {
        if self.stats.n == 0.0 {
            return (0.0, self.priors.sigma0_sq);
        }
        let e = (-t2).exp();
        let v = 1.0 / (self.stats.n * e + 1.0 / self.priors.sigma0_sq);
        (v * self.stats.n * self.stats.mean * e, v)
    }

    fn log_marginal(&self, t2: f64) -> f64 {
        let NormalPriors { a0, b0, sigma0_sq } = self.priors;
        let s = &self.stats;
        let e = (-t2).exp();
        let (_, v) = self.conditional(t2);
        let shrink = if s.n == 0.0 { 0.0 } else { s.n * s.mean * s.mean * e * v / (2.0 * sigma0_sq) };
        self.k + 0.5 * v.ln() - (a0 + 0.5 * s.n) * t2 - (b0 + 0.5 * s.ss) * e - shrink
    }
}

/// Exact normal-sample posterior: `theta_1` is integrated analytically and
/// `theta_2` by quadrature, giving `ln p(y)` and the posterior on a
/// `points x points` grid.
pub fn exact_posterior_normalizer_2d(y: &[f64], priors: NormalPriors, points: usize) -> Result<PosteriorGrid2d> {
    priors.validate()?;
    if points < 2 {
        return Err(CsnError::InvalidArgument("grid needs at least two points".into()));
    }
    let col = Collapsed::new(y, priors);
    let lg = |t: f64| col.log_marginal(t);
    let (_, gmax, lo, hi) = log_level_bounds(lg, 200.0, 60.0);
    let nodes = composite_gl_nodes(lo, hi, 400);
    let mass: f64 = nodes.iter().map(|&(t, w)| w * (lg(t) - gmax).exp()).sum();
    let log_evidence = gmax + mass.ln();

    let post2 = |t: f64| (lg(t) - log_evidence).exp();
    let (_, _, dlo, dhi) = log_level_bounds(lg, 200.0, 25.0);
    let marginal_theta2 = DensityGrid::from_fn(dlo, dhi, points, post2);

    let weights: Vec<(f64, f64, f64)> = nodes
        .iter()
        .map(|&(t, w)| {
            let (m, v) = col.conditional(t);
            (m, v, w * post2(t))
        })
        .collect();
    let mean1: f64 = weights.iter().map(|(m, _, w)| w * m).sum();
    let second1: f64 = weights.iter().map(|(m, v, w)| w * (v + m * m)).sum();
    let sd1 = (second1 - mean1 * mean1).max(0.0).sqrt();
    let mix = |t1: f64| {
        weights
            .iter()
            .map(|&(m, v, w)| w * (norm_log_pdf((t1 - m) / v.sqrt()) - 0.5 * v.ln()).exp())
            .sum::<f64>()
    };
    let marginal_theta1 = DensityGrid::from_fn(mean1 - 20.0 * sd1, mean1 + 20.0 * sd1, points, mix);

    let theta1 = marginal_theta1.x.clone();
    let theta2 = marginal_theta2.x.clone();
    let density = DMatrix::from_fn(points, points, |i, j| {
        let (m, v) = col.conditional(theta2[j]);
        marginal_theta2.density[j] * (norm_log_pdf((theta1[i] - m) / v.sqrt()) - 0.5 * v.ln()).exp()
    });
    Ok(PosteriorGrid2d { theta1, theta2, density, log_evidence, marginal_theta1, marginal_theta2 })
}
