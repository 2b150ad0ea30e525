//! Seeded simulated datasets for every model family.

use super::glmm::Link;
use super::sigmoid;
use crate::rng::{stream, Stream};
use nalgebra::DMatrix;
use rand::RngExt;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal, StandardUniform};

/// Mean and variance of the simulated normal sample.
pub const NORMAL_SAMPLE_MEAN: f64 = 100.0;
pub const NORMAL_SAMPLE_VARIANCE: f64 = 225.0;
pub const NORMAL_SAMPLE_SIZE: usize = 6;

/// Observations per subject and fixed effects of the sparse Poisson GLMM.
pub const POISSON_GLMM_VISITS: usize = 7;
pub const POISSON_GLMM_BETA: [f64; 2] = [-2.5, -2.0];

/// Generating coefficients of the non-GLMM fixtures.
pub const POISSON_GLM_BETA: [f64; 2] = [0.5, -0.3];
pub const ZINB_BETA: [f64; 3] = [0.5, 0.8, -0.4];
pub const ZINB_GAMMA: [f64; 3] = [-0.5, 0.7, 0.0];
pub const ZINB_ALPHA: f64 = 1.0;
pub const SURVIVAL_BETA: [f64; 2] = [-1.0, 0.5];
pub const SURVIVAL_GAMMA: [f64; 2] = [0.2, -0.1];

/// Response, covariates and structure for one model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    NormalSample { y: Vec<f64> },
    PoissonGlm { y: Vec<f64>, x: DMatrix<f64>, log_offset: Vec<f64> },
    Logistic { y: Vec<f64>, trials: Vec<f64>, x: DMatrix<f64> },
    Zinb { y: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64> },
    Survival { t: Vec<f64>, events: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64> },
    Glmm { y: Vec<f64>, x: DMatrix<f64>, z: DMatrix<f64>, groups: Vec<usize>, link: Link },
}

fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform(rng: &mut Stream) -> f64 {
    rng.sample(StandardUniform)
}

fn poisson(rng: &mut Stream, mean: f64) -> f64 {
    Poisson::new(mean.max(1e-300)).expect("finite Poisson mean").sample(rng)
}

/// Covariate matrix with an intercept column and `cols - 1` standard normal columns.
fn design(rng: &mut Stream, n: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_element(n, cols, 1.0);
    for i in 0..n {
        for j in 1..cols {
            m[(i, j)] = normal(rng);
        }
    }
    m
}

/// `n` draws from `N(mean, variance)`.
pub fn normal_sample(seed: u64, n: usize, mean: f64, variance: f64) -> Dataset {
    let mut rng = stream(seed, 1);
    let sd = variance.sqrt();
    Dataset::NormalSample { y: (0..n).map(|_| mean + sd * normal(&mut rng)).collect() }
}

/// Six draws with mean 100 and variance 225.
pub fn normal_sample_default(seed: u64) -> Dataset {
    normal_sample(seed, NORMAL_SAMPLE_SIZE, NORMAL_SAMPLE_MEAN, NORMAL_SAMPLE_VARIANCE)
}

/// Six zero-mean draws with variance 225, for the known-mean model.
pub fn normal_variance_default(seed: u64) -> Dataset {
    normal_sample(seed, NORMAL_SAMPLE_SIZE, 0.0, NORMAL_SAMPLE_VARIANCE)
}

/// Poisson regression on `(1, u)` with `u ~ U(-1, 1)` and exposures in `[1, 3]`.
pub fn poisson_glm(seed: u64, n: usize) -> Dataset {
    let mut rng = stream(seed, 2);
    let mut x = DMatrix::from_element(n, 2, 1.0);
    let mut log_offset = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        x[(i, 1)] = 2.0 * uniform(&mut rng) - 1.0;
        let lt = (1.0 + 2.0 * uniform(&mut rng)).ln();
        let eta = POISSON_GLM_BETA[0] + POISSON_GLM_BETA[1] * x[(i, 1)];
        y.push(poisson(&mut rng, (lt + eta).exp()));
        log_offset.push(lt);
    }
    Dataset::PoissonGlm { y, x, log_offset }
}

/// The generating coefficients of [`logistic`]: `0.5, -0.5, 0.5, ...`.
pub fn logistic_beta(d: usize) -> Vec<f64> {
    (0..d).map(|j| if j % 2 == 0 { 0.5 } else { -0.5 }).collect()
}

/// Binary logistic regression with an intercept and `d - 1` normal covariates.
pub fn logistic(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = stream(seed, 3);
    let x = design(&mut rng, n, d);
    let beta = logistic_beta(d);
    let y = (0..n)
        .map(|i| {
            let eta: f64 = (0..d).map(|j| x[(i, j)] * beta[j]).sum();
            (uniform(&mut rng) < sigmoid(eta)) as u8 as f64
        })
        .collect();
    Dataset::Logistic { y, trials: vec![1.0; n], x }
}

/// Zero-inflated negative binomial counts with three-column `X` and `Z`.
pub fn zinb(seed: u64, n: usize) -> Dataset {
    let mut rng = stream(seed, 4);
    let x = design(&mut rng, n, 3);
    let z = design(&mut rng, n, 3);
    let y = (0..n)
        .map(|i| {
            let ex: f64 = (0..3).map(|j| x[(i, j)] * ZINB_BETA[j]).sum();
            let ez: f64 = (0..3).map(|j| z[(i, j)] * ZINB_GAMMA[j]).sum();
            let zero = uniform(&mut rng) < sigmoid(ez);
            let rate = Gamma::new(1.0 / ZINB_ALPHA, ZINB_ALPHA * ex.exp()).expect("valid gamma").sample(&mut rng);
            let count = poisson(&mut rng, rate);
            if zero {
                0.0
            } else {
                count
            }
        })
        .collect();
    Dataset::Zinb { y, x, z }
}

/// Weibull survival times with independent exponential censoring.
pub fn survival(seed: u64, n: usize) -> Dataset {
    let mut rng = stream(seed, 5);
    let x = design(&mut rng, n, 2);
    let z = design(&mut rng, n, 2);
    let mut t = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let ex = SURVIVAL_BETA[0] + SURVIVAL_BETA[1] * x[(i, 1)];
        let rho = (SURVIVAL_GAMMA[0] + SURVIVAL_GAMMA[1] * z[(i, 1)]).exp();
        let e: f64 = Exp1.sample(&mut rng);
        let fail = (e / ex.exp()).powf(1.0 / rho);
        let c: f64 = Exp1.sample(&mut rng);
        let censor = 4.0 * c;
        t.push(fail.min(censor));
        events.push((fail <= censor) as u8 as f64);
    }
    Dataset::Survival { t, events, x, z }
}

/// Random-intercept Poisson GLMM: `ln mu_ij = -2.5 - 2 x_ij + b_i`,
/// `x_ij = (j - 4) / 10` for `j = 1..7` and `b_i ~ N(0, sigma_b^2)`.
pub fn poisson_glmm(seed: u64, n_subjects: usize, sigma_b: f64) -> Dataset {
    let mut rng = stream(seed, 6);
    let rows = n_subjects * POISSON_GLMM_VISITS;
    let mut x = DMatrix::from_element(rows, 2, 1.0);
    let z = DMatrix::from_element(rows, 1, 1.0);
    let mut y = Vec::with_capacity(rows);
    let mut groups = Vec::with_capacity(rows);
    for i in 0..n_subjects {
        let b = sigma_b * normal(&mut rng);
        for j in 1..=POISSON_GLMM_VISITS {
            let k = i * POISSON_GLMM_VISITS + j - 1;
            x[(k, 1)] = (j as f64 - 4.0) / 10.0;
            let eta = POISSON_GLMM_BETA[0] + POISSON_GLMM_BETA[1] * x[(k, 1)] + b;
            y.push(poisson(&mut rng, eta.exp()));
            groups.push(i);
        }
    }
    Dataset::Glmm { y, x, z, groups, link: Link::Log }
}

/// Random-intercept logistic GLMM with `visits` rows per subject, one
/// normal covariate, `beta = (-1, 1)` and `b_i ~ N(0, sigma_b^2)`.
pub fn bernoulli_glmm(seed: u64, n_subjects: usize, visits: usize, sigma_b: f64) -> Dataset {
    let mut rng = stream(seed, 7);
    let rows = n_subjects * visits;
    let x = design(&mut rng, rows, 2);
    let z = DMatrix::from_element(rows, 1, 1.0);
    let mut y = Vec::with_capacity(rows);
    let mut groups = Vec::with_capacity(rows);
    for i in 0..n_subjects {
        let b = sigma_b * normal(&mut rng);
        for k in i * visits..(i + 1) * visits {
            let eta = -1.0 + x[(k, 1)] + b;
            y.push((uniform(&mut rng) < sigmoid(eta)) as u8 as f64);
            groups.push(i);
        }
    }
    Dataset::Glmm { y, x, z, groups, link: Link::Logit }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn glmm_covariate_grid() {
        let Dataset::Glmm { x, groups, .. } = poisson_glmm(1, 3, 1.0) else { unreachable!() };
        let grid: Vec<f64> = (0..7).map(|k| x[(k, 1)]).collect();
        for (k, g) in grid.iter().enumerate() {
            assert!((g - (-0.3 + 0.1 * k as f64)).abs() < 1e-15);
        }
        assert_eq!(groups, vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn seeds_reproduce() {
        assert_eq!(poisson_glmm(9, 20, 1.0), poisson_glmm(9, 20, 1.0));
        assert_eq!(zinb(9, 50), zinb(9, 50));
        assert_eq!(survival(9, 50), survival(9, 50));
        assert_ne!(logistic(9, 50, 3), logistic(10, 50, 3));
    }

    #[test]
    fn glmm_means_match_generator() {
        let sigma_b: f64 = 0.5;
        let Dataset::Glmm { y, x, .. } = poisson_glmm(2, 5000, sigma_b) else { unreachable!() };
        for j in 0..7 {
            let col: Vec<f64> = (0..5000).map(|i| y[i * 7 + j]).collect();
            let (m, se) = mean_se(&col);
            let want = (POISSON_GLMM_BETA[0] + POISSON_GLMM_BETA[1] * x[(j, 1)] + 0.5 * sigma_b * sigma_b).exp();
            assert!((m - want).abs() < 4.0 * se, "visit {j}: {m} vs {want}");
        }
    }

    #[test]
    fn regression_means_match_generator() {
        let Dataset::Zinb { y, .. } = zinb(3, 5000) else { unreachable!() };
        // Covariates are independent standard normals, so the marginal mean
        // is E[1 - sigmoid(z gamma)] E[exp(x beta)]; estimate the first
        // factor by Monte Carlo with a separate stream.
        let mut rng = stream(77, 0);
        let keep: f64 = (0..400_000)
            .map(|_| 1.0 - sigmoid(ZINB_GAMMA[0] + ZINB_GAMMA[1] * normal(&mut rng)))
            .sum::<f64>()
            / 400_000.0;
        let want = keep * (ZINB_BETA[0] + 0.5 * (ZINB_BETA[1].powi(2) + ZINB_BETA[2].powi(2))).exp();
        let (m, se) = mean_se(&y);
        assert!((m - want).abs() < 4.0 * se, "{m} vs {want}");

        let Dataset::Logistic { y, x, .. } = logistic(4, 5000, 1) else { unreachable!() };
        assert_eq!(x.ncols(), 1);
        let (m, se) = mean_se(&y);
        assert!((m - sigmoid(0.5)).abs() < 4.0 * se);
    }
}
