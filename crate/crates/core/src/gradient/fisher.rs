//! Dense Fisher information of `q(theta, w)` assembled from Kronecker
//! products, and the score of `ln q(theta, w)`.
//!
//! Both are verification tools: the production natural gradients use the
//! closed forms in [`super::natural`].

use super::param_gradient::ParamGradient;
use crate::csn::{FactorKind, SkewParams};
use crate::error::{CsnError, Result};
use crate::linalg::{tri_len, vech, vech_u};
use crate::special::{B, ONE_MINUS_B2};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Largest `d` accepted by [`fisher_oracle`].
pub const FISHER_ORACLE_DIM_CAP: usize = 6;

/// Elimination and commutation matrices plus the assembled blocks.
#[derive(Debug, Clone)]
pub struct FisherOracleWorkspace {
    /// `E_l vec(X) = vech(X)`.
    pub e_l: DMatrix<f64>,
    /// `E_u vec(X) = vech_u(X)`.
    pub e_u: DMatrix<f64>,
    /// `E_d vec(X) = diag(X)`.
    pub e_d: DMatrix<f64>,
    /// `K vec(X) = vec(X^T)`.
    pub k_comm: DMatrix<f64>,
    pub i11: DMatrix<f64>,
    pub i22: DMatrix<f64>,
    pub i32: DMatrix<f64>,
    pub i33: DMatrix<f64>,
}

fn vec_index(d: usize, i: usize, j: usize) -> usize {
    j * d + i
}

pub fn elimination_lower(d: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(tri_len(d), d * d);
    let mut r = 0;
    for j in 0..d {
        for i in j..d {
            e[(r, vec_index(d, i, j))] = 1.0;
            r += 1;
        }
    }
    e
}

pub fn elimination_strict_upper(d: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(d * (d - 1) / 2, d * d);
    let mut r = 0;
    for j in 0..d {
        for i in 0..j {
            e[(r, vec_index(d, i, j))] = 1.0;
            r += 1;
        }
    }
    e
}

pub fn elimination_diag(d: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(d, d * d);
    for i in 0..d {
        e[(i, vec_index(d, i, i))] = 1.0;
    }
    e
}

pub fn commutation(d: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            k[(vec_index(d, j, i), vec_index(d, i, j))] = 1.0;
        }
    }
    k
}

impl FisherOracleWorkspace {
    pub fn assemble(params: &SkewParams) -> Result<FisherOracleWorkspace> {
        let d = params.dim();
        if d > FISHER_ORACLE_DIM_CAP {
            return Err(CsnError::UnsupportedDimension { dim: d, cap: FISHER_ORACLE_DIM_CAP });
        }
        let aux = params.aux();
        let eye = DMatrix::<f64>::identity(d, d);
        let c = params.c();
        let c_inv = params.c_inverse();
        let c_inv_t = c_inv.transpose();
        let k2 = aux.kappa.map(|k| k * k);
        let e_l = elimination_lower(d);
        let e_u = elimination_strict_upper(d);
        let e_d = elimination_diag(d);
        let k_comm = commutation(d);
        let n_core = &k_comm + eye.kronecker(&DMatrix::from_diagonal(&k2.map(|v| 1.0 / v)));
        let ak = DMatrix::from_diagonal(&aux.alpha.component_mul(&aux.kappa));

        let i11 = (c * DMatrix::from_diagonal(&k2) * c.transpose())
            .try_inverse()
            .ok_or_else(|| CsnError::Numerical("C D_kappa^2 C^T is singular".into()))?;
        let i22 = DMatrix::from_diagonal(&k2.map(|v| ONE_MINUS_B2 * (2.0 * v - v * v)));

        let (i32, i33) = match params.u() {
            None => {
                let left = &e_l * eye.kronecker(&c_inv_t);
                let i32 = -ONE_MINUS_B2 * &left * e_d.transpose() * &ak;
                let i33 = &left * &n_core * eye.kronecker(&c_inv) * e_l.transpose();
                (i32, i33)
            }
            Some(u) => {
                let u_inv = u.clone().try_inverse().expect("unit triangular U is invertible");
                let left_l = &e_l * u.kronecker(&c_inv_t);
                let top = -ONE_MINUS_B2 * &left_l * e_d.transpose() * &ak;
                let nu = d * (d - 1) / 2;
                let mut i32 = DMatrix::zeros(tri_len(d) + nu, d);
                i32.rows_mut(0, tri_len(d)).copy_from(&top);
                let ll = &left_l * &n_core * u.transpose().kronecker(&c_inv) * e_l.transpose();
                let lu = &left_l * &n_core * eye.kronecker(&u_inv) * e_u.transpose();
                let uu = &e_u * eye.kronecker(&u_inv.transpose()) * eye.kronecker(&DMatrix::from_diagonal(&k2.map(|v| 1.0 / v)))
                    * eye.kronecker(&u_inv) * e_u.transpose();
                let n3 = tri_len(d) + nu;
                let mut i33 = DMatrix::zeros(n3, n3);
                i33.view_mut((0, 0), (tri_len(d), tri_len(d))).copy_from(&ll);
                i33.view_mut((0, tri_len(d)), (tri_len(d), nu)).copy_from(&lu);
                i33.view_mut((tri_len(d), 0), (nu, tri_len(d))).copy_from(&lu.transpose());
                i33.view_mut((tri_len(d), tri_len(d)), (nu, nu)).copy_from(&uu);
                (i32, i33)
            }
        };
        Ok(FisherOracleWorkspace { e_l, e_u, e_d, k_comm, i11, i22, i32, i33 })
    }

    /// The full information matrix in `(mu, lambda, vech(L), vech_u(U))` order.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.i11.nrows();
        let n3 = self.i33.nrows();
        let n = 2 * d + n3;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (d, d)).copy_from(&self.i11);
        m.view_mut((d, d), (d, d)).copy_from(&self.i22);
        m.view_mut((2 * d, d), (n3, d)).copy_from(&self.i32);
        m.view_mut((d, 2 * d), (d, n3)).copy_from(&self.i32.transpose());
        m.view_mut((2 * d, 2 * d), (n3, n3)).copy_from(&self.i33);
        m
    }
}

/// `I_{theta,w}(eta)` for the factor form of `params`.
pub fn fisher_oracle(params: &SkewParams) -> Result<DMatrix<f64>> {
    Ok(FisherOracleWorkspace::assemble(params)?.matrix())
}

/// `I^{-1} grad` by a dense solve, in [`ParamGradient`] layout.
pub fn oracle_natural_gradient(params: &SkewParams, grad: &ParamGradient) -> Result<ParamGradient> {
    let m = fisher_oracle(params)?;
    let x = m
        .lu()
        .solve(&grad.to_vec())
        .ok_or_else(|| CsnError::Numerical("Fisher information is singular".into()))?;
    Ok(ParamGradient::from_vec(&x, params.dim(), params.factor().kind()))
}

/// `ln q(theta, w)` for the joint of the draw and its half-normal noise.
pub fn log_q_joint(params: &SkewParams, theta: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let d = params.dim() as f64;
    let aux = params.aux();
    let lam = params.lambda();
    let z = params.solve_c(&(theta - params.mu()));
    let wt = w.map(|v| v.abs() - B);
    let mut s = -d * (2.0 * PI).ln() - params.log_abs_det_c() - 0.5 * w.dot(w);
    for i in 0..params.dim() {
        let k = aux.kappa[i];
        s += -k.ln() - 0.5 * z[i] * z[i] / (k * k) - 0.5 * lam[i] * lam[i] * wt[i] * wt[i] + z[i] * lam[i] / k * wt[i];
    }
    s
}

/// `grad_eta ln q(theta, w)` in [`ParamGradient`] layout (skew block in `lambda`).
pub fn score_logq_joint(params: &SkewParams, theta: &DVector<f64>, w: &DVector<f64>) -> ParamGradient {
    let d = params.dim();
    let aux = params.aux();
    let lam = params.lambda();
    let z = params.solve_c(&(theta - params.mu()));
    let wt = w.map(|v| v.abs() - B);
    let inner = DVector::from_fn(d, |i, _| (z[i] / aux.kappa[i] - lam[i] * wt[i]) / aux.kappa[i]);
    let d_mu = params.solve_c_transpose(&inner);
    let d_skew = DVector::from_fn(d, |i, _| {
        let k = aux.kappa[i];
        ONE_MINUS_B2 * aux.alpha[i] * k - lam[i] * (ONE_MINUS_B2 * z[i] * z[i] + wt[i] * wt[i]) + (2.0 / k - k) * z[i] * wt[i]
    });
    let l_inv_t = params
        .l()
        .clone()
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .expect("L is nonsingular")
        .transpose();
    let (d_vech_l, d_vech_u) = match params.u() {
        None => (vech(&(&d_mu * z.transpose() - l_inv_t)), None),
        Some(u) => {
            let uz = u * &z;
            let dl = vech(&(&d_mu * uz.transpose() - l_inv_t));
            let du = vech_u(&(params.l().transpose() * &d_mu * z.transpose()));
            (dl, Some(du))
        }
    };
    ParamGradient { d_mu, d_skew, d_vech_l, d_vech_u }
}

/// Form of `params`, for callers building gradients from vectors.
pub fn factor_kind(params: &SkewParams) -> FactorKind {
    params.factor().kind()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csn::{FactorForm, Parametrization, SkewParam};
    use crate::gradient::natural::{natural_grad_cholesky, natural_grad_lu};
    use crate::linalg::{vech_inv, vech_u_inv};
    use crate::rng::stream;
    use rand::RngExt;

    fn random_params(rng: &mut crate::rng::Stream, d: usize, lu: bool) -> SkewParams {
        let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => rng.random_range(0.5..1.5) * if rng.random_bool(0.2) { -1.0 } else { 1.0 },
            std::cmp::Ordering::Greater => rng.random_range(-0.8..0.8),
        });
        let lam = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let mu = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        if lu {
            let u = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else if i < j { rng.random_range(-0.8..0.8) } else { 0.0 });
            SkewParams::lu(mu, l, u, lam, Parametrization::Lambda).unwrap()
        } else {
            SkewParams::cholesky(mu, l, lam, Parametrization::Lambda).unwrap()
        }
    }

    fn random_grad(rng: &mut crate::rng::Stream, p: &SkewParams) -> ParamGradient {
        let n = ParamGradient::zeros_like(p).len();
        let v = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        ParamGradient::from_vec(&v, p.dim(), p.factor().kind())
    }

    #[test]
    fn elimination_matrices_act_as_documented() {
        let d = 3;
        let x = DMatrix::from_fn(d, d, |i, j| (1 + 3 * i + 7 * j) as f64);
        let v = DVector::from_column_slice(x.as_slice());
        assert_eq!(elimination_lower(d) * &v, vech(&x));
        assert_eq!(elimination_strict_upper(d) * &v, vech_u(&x));
        assert_eq!(elimination_diag(d) * &v, x.diagonal());
        assert_eq!(commutation(d) * &v, DVector::from_column_slice(x.transpose().as_slice()));
    }

    #[test]
    fn standard_one_dimensional_blocks() {
        let p = SkewParams::standard(1, FactorKind::Cholesky, Parametrization::Lambda);
        let m = fisher_oracle(&p).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m[(1, 1)] - 0.363_380_227_632_418_7).abs() < 1e-15);
        assert!((m[(2, 2)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_the_oracle() {
        let mut rng = stream(5, 0);
        for d in 1..=4 {
            for lu in [false, true] {
                if lu && d < 2 {
                    continue;
                }
                for _ in 0..20 {
                    let p = random_params(&mut rng, d, lu);
                    let g = random_grad(&mut rng, &p);
                    let want = oracle_natural_gradient(&p, &g).unwrap().to_vec();
                    let got = if lu { natural_grad_lu(&g, &p) } else { natural_grad_cholesky(&g, &p) }.to_vec();
                    let err = (&got - &want).abs().max();
                    assert!(err < 1e-8 * want.abs().max().max(1.0), "d={d} lu={lu}: err {err}");
                }
            }
        }
    }

    #[test]
    fn oracle_is_symmetric_positive_definite() {
        let mut rng = stream(6, 0);
        for d in 1..=4 {
            let p = random_params(&mut rng, d, false);
            let m = fisher_oracle(&p).unwrap();
            assert!((&m - m.transpose()).abs().max() < 1e-12);
            assert!(m.symmetric_eigen().eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn score_matches_differences_of_joint_log_density() {
        let mut rng = stream(8, 0);
        for lu in [false, true] {
            let p = random_params(&mut rng, 3, lu);
            let theta = p.mu() + DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let w = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let s = score_logq_joint(&p, &theta, &w).to_vec();
            let eta = ParamGradient {
                d_mu: p.mu().clone(),
                d_skew: p.lambda().clone(),
                d_vech_l: vech(p.l()),
                d_vech_u: p.u().map(vech_u),
            };
            let base = eta.to_vec();
            let f = |v: &DVector<f64>| {
                let g = ParamGradient::from_vec(v, 3, p.factor().kind());
                let l = vech_inv(&g.d_vech_l, 3);
                let factor = match g.d_vech_u {
                    None => FactorForm::Cholesky { l },
                    Some(u) => FactorForm::Lu { l, u: vech_u_inv(&u, 3) + DMatrix::identity(3, 3) },
                };
                let q = SkewParams::new(g.d_mu, factor, SkewParam::Lambda(g.d_skew)).unwrap();
                log_q_joint(&q, &theta, &w)
            };
            for k in 0..base.len() {
                let mut a = base.clone();
                a[k] += 1e-6;
                let mut b = base.clone();
                b[k] -= 1e-6;
                let fd = (f(&a) - f(&b)) / 2e-6;
                assert!((fd - s[k]).abs() < 1e-6 * s[k].abs().max(1.0), "lu={lu} k={k}: {fd} vs {}", s[k]);
            }
        }
    }

    #[test]
    fn score_lambda_block_at_zero_skew() {
        let p = SkewParams::standard(2, FactorKind::Cholesky, Parametrization::Lambda);
        let theta = DVector::from_vec(vec![0.4, -1.1]);
        let w = DVector::from_vec(vec![-0.3, 1.7]);
        let s = score_logq_joint(&p, &theta, &w);
        let wt = w.map(|v| v.abs() - B);
        assert!((s.d_skew - theta.component_mul(&wt)).abs().max() < 1e-15);
    }

    #[test]
    fn natural_gradient_is_an_ascent_direction() {
        let mut rng = stream(10, 0);
        for _ in 0..50 {
            let p = random_params(&mut rng, 3, false);
            let g = random_grad(&mut rng, &p);
            assert!(g.dot(&natural_grad_cholesky(&g, &p)) > 0.0);
        }
    }

    #[test]
    fn lu_reduces_to_cholesky_at_identity_u() {
        let mut rng = stream(12, 0);
        for _ in 0..10 {
            let ch = random_params(&mut rng, 3, false);
            let lu = ch.with_factor_kind(FactorKind::Lu).unwrap();
            let mut g = random_grad(&mut rng, &lu);
            g.d_vech_u = Some(DVector::zeros(3));
            let a = natural_grad_lu(&g, &lu);
            let gc = ParamGradient { d_vech_u: None, ..g.clone() };
            let b = natural_grad_cholesky(&gc, &ch);
            assert!((a.d_mu - b.d_mu).abs().max() < 1e-10);
            assert!((a.d_skew - b.d_skew).abs().max() < 1e-10);
        }
    }
}
