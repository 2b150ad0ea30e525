//! Posterior mode and Laplace approximation, used to initialise fits.

use crate::error::{CsnError, Result};
use crate::models::{BlockLayout, TargetModel};
use nalgebra::{DMatrix, DVector};

/// Mode and, per block, the Cholesky factor of the inverse negative Hessian.
#[derive(Debug, Clone)]
pub struct Laplace {
    pub mode: DVector<f64>,
    pub factors: Vec<DMatrix<f64>>,
}

/// Negative Hessian with arrow structure: diagonal blocks plus the coupling
/// between every earlier block and the last one.
///
/// With more than one block, every block but the last is assumed to
/// interact only with the last one (the mean-field GLMM structure), so one
/// coordinate of all local blocks can be perturbed at once.
#[derive(Debug, Clone)]
pub struct ArrowHessian {
    pub blocks: Vec<DMatrix<f64>>,
    /// Rows: all coordinates before the last block; columns: the last block.
    pub coupling: DMatrix<f64>,
}

pub fn neg_hessian_arrow(model: &dyn TargetModel, theta: &DVector<f64>, layout: &BlockLayout) -> ArrowHessian {
    let ranges = layout.ranges();
    let mut blocks: Vec<DMatrix<f64>> = layout.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
    let diff = |dirs: &[(usize, f64)]| {
        let mut up = theta.clone();
        let mut dn = theta.clone();
        for &(k, h) in dirs {
            up[k] += h;
            dn[k] -= h;
        }
        model.grad_log_joint(&up) - model.grad_log_joint(&dn)
    };
    let step = |k: usize| 1e-5 * theta[k].abs().max(1.0);
    let last = ranges.len() - 1;
    let locals = &ranges[..last];
    let global = &ranges[last];
    let widest = locals.iter().map(|r| r.len()).max().unwrap_or(0);
    for k in 0..widest {
        let dirs: Vec<(usize, f64)> =
            locals.iter().filter(|r| r.len() > k).map(|r| (r.start + k, step(r.start + k))).collect();
        let g = diff(&dirs);
        for (b, r) in locals.iter().enumerate().filter(|(_, r)| r.len() > k) {
            let h = step(r.start + k);
            for l in 0..r.len() {
                blocks[b][(l, k)] = -g[r.start + l] / (2.0 * h);
            }
        }
    }
    let mut coupling = DMatrix::zeros(global.start, global.len());
    for k in 0..global.len() {
        let h = step(global.start + k);
        let g = diff(&[(global.start + k, h)]);
        for l in 0..global.len() {
            blocks[last][(l, k)] = -g[global.start + l] / (2.0 * h);
        }
        for l in 0..global.start {
            coupling[(l, k)] = -g[l] / (2.0 * h);
        }
    }
    for m in &mut blocks {
        *m = (&*m + m.transpose()) * 0.5;
    }
    ArrowHessian { blocks, coupling }
}

/// Negative Hessian blocks by central differences of the gradient.
pub fn neg_hessian_blocks(model: &dyn TargetModel, theta: &DVector<f64>, layout: &BlockLayout) -> Vec<DMatrix<f64>> {
    neg_hessian_arrow(model, theta, layout).blocks
}

/// Cholesky of `a + damping I` with the smallest damping in a geometric
/// ladder that makes it positive definite.
fn damped_cholesky(a: &DMatrix<f64>) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    let scale = a.diagonal().amax().max(1e-8);
    let mut damping = 0.0;
    loop {
        let m = a + DMatrix::identity(a.nrows(), a.nrows()) * damping;
        if let Some(ch) = m.cholesky() {
            return ch;
        }
        damping = if damping == 0.0 { 1e-8 * scale } else { damping * 10.0 };
    }
}

/// Newton direction for an arrow-structured system via the Schur
/// complement of the local blocks.
fn arrow_newton(h: &ArrowHessian, g: &DVector<f64>, layout: &BlockLayout) -> DVector<f64> {
    let ranges = layout.ranges();
    let last = ranges.len() - 1;
    let global = &ranges[last];
    let mut schur = h.blocks[last].clone();
    let mut rhs = g.rows(global.start, global.len()).into_owned();
    let mut solved = Vec::with_capacity(last);
    for (b, r) in ranges[..last].iter().enumerate() {
        let ch = damped_cholesky(&h.blocks[b]);
        let bi = h.coupling.rows(r.start, r.len()).into_owned();
        let ainv_b = ch.solve(&bi);
        let ainv_g = ch.solve(&g.rows(r.start, r.len()).into_owned());
        schur -= bi.transpose() * &ainv_b;
        rhs -= bi.transpose() * &ainv_g;
        solved.push((ainv_b, ainv_g));
    }
    let y = damped_cholesky(&schur).solve(&rhs);
    let mut dir = DVector::zeros(g.len());
    for (r, (ainv_b, ainv_g)) in ranges[..last].iter().zip(solved) {
        dir.rows_mut(r.start, r.len()).copy_from(&(ainv_g - ainv_b * &y));
    }
    dir.rows_mut(global.start, global.len()).copy_from(&y);
    dir
}

/// Remove coordinate `k` from the Newton system so its step is zero.
fn freeze(h: &mut ArrowHessian, g: &mut DVector<f64>, layout: &BlockLayout, k: usize) {
    let ranges = layout.ranges();
    let b = ranges.iter().position(|r| r.contains(&k)).expect("index inside layout");
    let r = &ranges[b];
    let l = k - r.start;
    h.blocks[b].row_mut(l).fill(0.0);
    h.blocks[b].column_mut(l).fill(0.0);
    h.blocks[b][(l, l)] = 1.0;
    if b + 1 == ranges.len() {
        h.coupling.column_mut(l).fill(0.0);
    } else {
        h.coupling.row_mut(k).fill(0.0);
    }
    g[k] = 0.0;
}

/// Damped Newton ascent on `log_joint` with backtracking. Coordinates in
/// `frozen` keep their starting values.
pub fn find_mode_blocks(
    model: &dyn TargetModel,
    start: &DVector<f64>,
    layout: &BlockLayout,
    frozen: &[usize],
) -> Result<DVector<f64>> {
    let mut theta = start.clone();
    let mut f = model.log_joint(&theta);
    if !f.is_finite() {
        return Err(CsnError::Numerical(format!("log joint is {f} at the starting point")));
    }
    for _ in 0..500 {
        let mut g = model.grad_log_joint(&theta);
        for &k in frozen {
            g[k] = 0.0;
        }
        if g.amax() < 1e-10 * f.abs().max(1.0) {
            break;
        }
        let mut h = neg_hessian_arrow(model, &theta, layout);
        for &k in frozen {
            freeze(&mut h, &mut g, layout, k);
        }
        let mut dir = arrow_newton(&h, &g, layout);
        if !(dir.dot(&g) > 0.0) {
            dir = g.clone();
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand = &theta + &dir * t;
            let fc = model.log_joint(&cand);
            if fc.is_finite() && fc >= f + 1e-4 * t * dir.dot(&g) {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let moved = (&cand - &theta).amax();
        theta = cand;
        f = fc;
        if moved < 1e-13 * theta.amax().max(1.0) {
            break;
        }
    }
    Ok(theta)
}

pub fn find_mode(model: &dyn TargetModel, start: &DVector<f64>) -> Result<DVector<f64>> {
    find_mode_blocks(model, start, &BlockLayout::dense(model.dim()), &[])
}

/// Mode over the coordinates the model does not hold fixed (see
/// [`TargetModel::frozen_for_mode`]) plus per-block Laplace covariance
/// factors; curvature that is not negative definite is damped.
pub fn laplace(model: &dyn TargetModel, start: &DVector<f64>, layout: &BlockLayout) -> Result<Laplace> {
    let mode = find_mode_blocks(model, start, layout, &model.frozen_for_mode())?;
    let factors = neg_hessian_blocks(model, &mode, layout)
        .into_iter()
        .map(|h| {
            let inv = damped_cholesky(&h).inverse();
            damped_cholesky(&((&inv + inv.transpose()) * 0.5)).l()
        })
        .collect();
    Ok(Laplace { mode, factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic::{self, Dataset};
    use crate::models::{GlmmModel, NormalPriors, NormalSampleModel};

    #[test]
    fn normal_sample_mode() {
        let Dataset::NormalSample { y } = synthetic::normal_sample_default(1) else { unreachable!() };
        let m = NormalSampleModel::new(y, NormalPriors::default()).unwrap();
        let lap = laplace(&m, &DVector::from_vec(vec![90.0, 5.0]), &BlockLayout::dense(2)).unwrap();
        assert!(m.grad_log_joint(&lap.mode).amax() < 1e-7);
        let l = &lap.factors[0];
        assert!(l[(0, 0)] > 0.0 && l[(1, 1)] > 0.0 && l[(0, 1)] == 0.0);
    }

    #[test]
    fn arrow_hessian_matches_dense() {
        let Dataset::Glmm { y, x, z, groups, link } = synthetic::poisson_glmm(2, 6, 1.0) else { unreachable!() };
        let m = GlmmModel::new(y, x, z, &groups, link, 10.0, 10.0).unwrap();
        let theta = DVector::from_fn(m.dim(), |i, _| 0.1 * (i as f64).sin());
        let dense = neg_hessian_blocks(&m, &theta, &BlockLayout::dense(m.dim())).remove(0);
        let arrow = neg_hessian_arrow(&m, &theta, &m.layout());
        let ranges = m.layout().ranges();
        for (b, r) in arrow.blocks.iter().zip(&ranges) {
            let want = dense.view((r.start, r.start), (r.len(), r.len()));
            assert!((b - want).amax() < 1e-6 * want.amax().max(1.0));
        }
        let g = ranges.last().unwrap();
        let want = dense.view((0, g.start), (g.start, g.len()));
        assert!((&arrow.coupling - want).amax() < 1e-6 * want.amax().max(1.0));
        let frozen = m.frozen_for_mode();
        assert_eq!(frozen, vec![m.dim() - 1]);
        let mode = find_mode_blocks(&m, &DVector::zeros(m.dim()), &m.layout(), &frozen).unwrap();
        let g = m.grad_log_joint(&mode);
        assert!(g.rows(0, m.dim() - 1).amax() < 1e-6, "{g}");
        assert_eq!(mode[m.dim() - 1], 0.0);
    }
}
