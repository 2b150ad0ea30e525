use crate::csn::{FactorKind, SkewParams};
use crate::linalg::tri_len;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Gradient blocks aligned with `(mu, skew, vech(L), vech_u(U))`.
///
/// The skew block is with respect to `lambda` unless a chain rule has been
/// applied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGradient {
    pub d_mu: DVector<f64>,
    pub d_skew: DVector<f64>,
    pub d_vech_l: DVector<f64>,
    pub d_vech_u: Option<DVector<f64>>,
}

impl ParamGradient {
    pub fn zeros(d: usize, form: FactorKind) -> ParamGradient {
        ParamGradient {
            d_mu: DVector::zeros(d),
            d_skew: DVector::zeros(d),
            d_vech_l: DVector::zeros(tri_len(d)),
            d_vech_u: match form {
                FactorKind::Cholesky => None,
                FactorKind::Lu => Some(DVector::zeros(d * (d - 1) / 2)),
            },
        }
    }

    pub fn zeros_like(params: &SkewParams) -> ParamGradient {
        ParamGradient::zeros(params.dim(), params.factor().kind())
    }

    pub fn dim(&self) -> usize {
        self.d_mu.len()
    }

    pub fn form(&self) -> FactorKind {
        if self.d_vech_u.is_some() {
            FactorKind::Lu
        } else {
            FactorKind::Cholesky
        }
    }

    /// Total number of coordinates.
    pub fn len(&self) -> usize {
        2 * self.dim() + self.d_vech_l.len() + self.d_vech_u.as_ref().map_or(0, |u| u.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stack the blocks in `(mu, skew, vech(L), vech_u(U))` order.
    pub fn to_vec(&self) -> DVector<f64> {
        let mut v: Vec<f64> = Vec::with_capacity(self.len());
        v.extend(self.d_mu.iter());
        v.extend(self.d_skew.iter());
        v.extend(self.d_vech_l.iter());
        if let Some(u) = &self.d_vech_u {
            v.extend(u.iter());
        }
        DVector::from_vec(v)
    }

    /// Inverse of [`ParamGradient::to_vec`].
    pub fn from_vec(v: &DVector<f64>, d: usize, form: FactorKind) -> ParamGradient {
        let t = tri_len(d);
        let d_mu = v.rows(0, d).into_owned();
        let d_skew = v.rows(d, d).into_owned();
        let d_vech_l = v.rows(2 * d, t).into_owned();
        let d_vech_u = match form {
            FactorKind::Cholesky => None,
            FactorKind::Lu => Some(v.rows(2 * d + t, d * (d - 1) / 2).into_owned()),
        };
        ParamGradient { d_mu, d_skew, d_vech_l, d_vech_u }
    }

    pub fn scale(&self, s: f64) -> ParamGradient {
        ParamGradient {
            d_mu: &self.d_mu * s,
            d_skew: &self.d_skew * s,
            d_vech_l: &self.d_vech_l * s,
            d_vech_u: self.d_vech_u.as_ref().map(|u| u * s),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGradient) {
        self.d_mu += &other.d_mu;
        self.d_skew += &other.d_skew;
        self.d_vech_l += &other.d_vech_l;
        if let (Some(a), Some(b)) = (self.d_vech_u.as_mut(), other.d_vech_u.as_ref()) {
            *a += b;
        }
    }

    pub fn dot(&self, other: &ParamGradient) -> f64 {
        self.to_vec().dot(&other.to_vec())
    }
}
