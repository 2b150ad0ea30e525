//! Block-diagonal (mean-field) variational families: one independent CSN
//! factor per block of coordinates.

use crate::csn::density::{grad_theta_log_density, log_density};
use crate::csn::{entropy, reparam_draw, FactorForm, FactorKind, SkewParam, SkewParams};
use crate::error::{CsnError, Result};
use crate::gradient::NoisePair;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Sizes of consecutive coordinate blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub sizes: Vec<usize>,
}

impl BlockLayout {
    /// A single block covering all `d` coordinates.
    pub fn dense(d: usize) -> BlockLayout {
        BlockLayout { sizes: vec![d] }
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut at = 0;
        self.sizes
            .iter()
            .map(|&s| {
                at += s;
                at - s..at
            })
            .collect()
    }
}

/// `n_subjects` blocks of size `r` for the local effects, then one block of
/// size `global_dim`.
pub fn meanfield_structure(n_subjects: usize, r: usize, global_dim: usize) -> BlockLayout {
    let mut sizes = vec![r; n_subjects];
    if global_dim > 0 {
        sizes.push(global_dim);
    }
    BlockLayout { sizes }
}

/// Independent CSN factors, one per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub blocks: Vec<SkewParams>,
}

impl BlockParams {
    pub fn new(blocks: Vec<SkewParams>) -> Result<BlockParams> {
        if blocks.is_empty() {
            return Err(CsnError::Dimension("at least one block is required".into()));
        }
        Ok(BlockParams { blocks })
    }

    pub fn dense(params: SkewParams) -> BlockParams {
        BlockParams { blocks: vec![params] }
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout { sizes: self.blocks.iter().map(|b| b.dim()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (b, r) in self.blocks.iter().zip(self.layout().ranges()) {
            out.rows_mut(r.start, r.len()).copy_from(b.mu());
        }
        out
    }

    pub fn log_density(&self, theta: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .zip(self.layout().ranges())
            .map(|(b, r)| log_density(b, &theta.rows(r.start, r.len()).into_owned()))
            .sum()
    }

    pub fn grad_theta_log_density(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (b, r) in self.blocks.iter().zip(self.layout().ranges()) {
            let g = grad_theta_log_density(b, &theta.rows(r.start, r.len()).into_owned());
            out.rows_mut(r.start, r.len()).copy_from(&g);
        }
        out
    }

    pub fn entropy(&self) -> f64 {
        self.blocks.iter().map(entropy).sum()
    }

    /// Reparametrized draw; `noise` covers all coordinates.
    pub fn draw(&self, noise: &NoisePair) -> DVector<f64> {
        let parts = noise.split(&self.layout().sizes);
        let mut out = DVector::zeros(self.dim());
        for ((b, r), nz) in self.blocks.iter().zip(self.layout().ranges()).zip(&parts) {
            out.rows_mut(r.start, r.len()).copy_from(&reparam_draw(b, nz));
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DVector<f64>> {
        let d = self.dim();
        (0..n).map(|_| self.draw(&NoisePair::draw(rng, d))).collect()
    }

    /// The equivalent single factor with block-diagonal `L` (and `U`).
    pub fn to_dense(&self) -> Result<SkewParams> {
        if self.blocks.len() == 1 {
            return Ok(self.blocks[0].clone());
        }
        let kind = self.blocks[0].factor().kind();
        let param = self.blocks[0].parametrization();
        if self.blocks.iter().any(|b| b.factor().kind() != kind || b.parametrization() != param) {
            return Err(CsnError::InvalidArgument("blocks mix factor forms or parametrizations".into()));
        }
        let d = self.dim();
        let mut l = DMatrix::zeros(d, d);
        let mut u = DMatrix::identity(d, d);
        let mut skew = DVector::zeros(d);
        for (b, r) in self.blocks.iter().zip(self.layout().ranges()) {
            l.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(b.l());
            if let Some(bu) = b.u() {
                u.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(bu);
            }
            skew.rows_mut(r.start, r.len()).copy_from(b.skew().values());
        }
        let factor = match kind {
            FactorKind::Cholesky => FactorForm::Cholesky { l },
            FactorKind::Lu => FactorForm::Lu { l, u },
        };
        let skew = match param {
            crate::csn::Parametrization::Lambda => SkewParam::Lambda(skew),
            crate::csn::Parametrization::LambdaCubed => SkewParam::LambdaCubed(skew),
            crate::csn::Parametrization::AlphaCubed => SkewParam::AlphaCubed(skew),
        };
        SkewParams::new(self.mean(), factor, skew)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csn::Parametrization;
    use crate::linalg::mean_and_cov;
    use crate::rng::stream;
    use rand::RngExt;
    use rand_distr::StandardNormal;

    fn random_block(rng: &mut crate::rng::Stream, d: usize, form: FactorKind) -> SkewParams {
        let mut n = || rng.sample::<f64, _>(StandardNormal);
        let mu = DVector::from_fn(d, |_, _| n());
        let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5 + 0.5 * n().abs(),
            std::cmp::Ordering::Greater => 0.3 * n(),
        });
        let lambda = DVector::from_fn(d, |_, _| 2.0 * n());
        match form {
            FactorKind::Cholesky => SkewParams::cholesky(mu, l, lambda, Parametrization::AlphaCubed).unwrap(),
            FactorKind::Lu => {
                let u = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else if i < j { 0.4 * n() } else { 0.0 });
                SkewParams::lu(mu, l, u, lambda, Parametrization::AlphaCubed).unwrap()
            }
        }
    }

    fn glmm_like(seed: u64, form: FactorKind) -> BlockParams {
        let mut rng = stream(seed, 0);
        let layout = meanfield_structure(3, 2, 4);
        BlockParams::new(layout.sizes.iter().map(|&s| random_block(&mut rng, s, form)).collect()).unwrap()
    }

    #[test]
    fn structure() {
        let l = meanfield_structure(3, 2, 5);
        assert_eq!(l.sizes, vec![2, 2, 2, 5]);
        assert_eq!(l.dim(), 11);
        assert_eq!(l.ranges()[3], 6..11);
    }

    #[test]
    fn blockwise_log_density_matches_dense() {
        for form in [FactorKind::Cholesky, FactorKind::Lu] {
            let bp = glmm_like(1, form);
            let dense = bp.to_dense().unwrap();
            let mut rng = stream(2, 0);
            for _ in 0..100 {
                let theta = DVector::from_fn(bp.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let a = bp.log_density(&theta);
                let b = log_density(&dense, &theta);
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
            assert!((bp.entropy() - entropy(&dense)).abs() < 1e-12);
        }
    }

    #[test]
    fn draws_match_dense_and_blocks_are_uncorrelated() {
        let bp = glmm_like(3, FactorKind::Cholesky);
        let dense = bp.to_dense().unwrap();
        let mut rng = stream(4, 0);
        let nz = NoisePair::draw(&mut rng, bp.dim());
        assert!((bp.draw(&nz) - reparam_draw(&dense, &nz)).amax() < 1e-12);

        let n = 200_000;
        let draws = bp.sample(&mut stream(5, 0), n);
        let (_, cov) = mean_and_cov(&draws);
        // Coordinates 0 and 2 sit in different blocks.
        let xs: Vec<f64> = draws.iter().map(|t| t[0]).collect();
        let ys: Vec<f64> = draws.iter().map(|t| t[2]).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n as f64, ys.iter().sum::<f64>() / n as f64);
        let prods: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
        let var = prods.iter().map(|p| (p - cov[(0, 2)]).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(cov[(0, 2)].abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn single_block_is_dense() {
        let mut rng = stream(6, 0);
        let p = random_block(&mut rng, 3, FactorKind::Lu);
        let bp = BlockParams::dense(p.clone());
        assert_eq!(bp.to_dense().unwrap(), p);
        let nz = NoisePair::draw(&mut rng, 3);
        assert_eq!(bp.draw(&nz), reparam_draw(&p, &nz));
    }
}
