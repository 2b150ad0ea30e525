//! Variational parameters, skew parametrizations and derived auxiliaries.

use crate::error::{CsnError, Result};
use crate::special::{B, ONE_MINUS_B2};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Open bound on `|alpha^3|`, `(1 - b^2)^(-3/2)`.
pub const ALPHA_CUBED_BOUND: f64 = 4.565_181_630_213_467;

/// Relative safety margin kept inside [`ALPHA_CUBED_BOUND`].
pub const ALPHA_CUBED_MARGIN: f64 = 1e-6;

/// Largest admissible `|alpha^3|` after the safety margin.
pub fn alpha_cubed_limit() -> f64 {
    ALPHA_CUBED_BOUND * (1.0 - ALPHA_CUBED_MARGIN)
}

/// Which skewness coordinates are stored and optimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Parametrization {
    Lambda,
    #[serde(alias = "lambda_cubed")]
    LambdaCubed,
    #[default]
    #[serde(alias = "alpha_cubed")]
    AlphaCubed,
}

/// Skewness vector tagged with its parametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SkewParam {
    Lambda(DVector<f64>),
    LambdaCubed(DVector<f64>),
    AlphaCubed(DVector<f64>),
}

impl SkewParam {
    pub fn kind(&self) -> Parametrization {
        match self {
            SkewParam::Lambda(_) => Parametrization::Lambda,
            SkewParam::LambdaCubed(_) => Parametrization::LambdaCubed,
            SkewParam::AlphaCubed(_) => Parametrization::AlphaCubed,
        }
    }

    pub fn values(&self) -> &DVector<f64> {
        match self {
            SkewParam::Lambda(v) | SkewParam::LambdaCubed(v) | SkewParam::AlphaCubed(v) => v,
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    /// Express a `lambda` vector in the requested parametrization.
    pub fn from_lambda(lambda: &DVector<f64>, kind: Parametrization) -> SkewParam {
        match kind {
            Parametrization::Lambda => SkewParam::Lambda(lambda.clone()),
            Parametrization::LambdaCubed => SkewParam::LambdaCubed(lambda.map(|l| l * l * l)),
            Parametrization::AlphaCubed => SkewParam::AlphaCubed(lambda.map(alpha_cubed_from_lambda)),
        }
    }

    /// Recover `lambda`, validating the alpha-cubed domain.
    pub fn to_lambda(&self) -> Result<DVector<f64>> {
        match self {
            SkewParam::Lambda(v) => Ok(v.clone()),
            SkewParam::LambdaCubed(v) => Ok(v.map(f64::cbrt)),
            SkewParam::AlphaCubed(v) => {
                let mut out = DVector::zeros(v.len());
                for (i, &a3) in v.iter().enumerate() {
                    out[i] = lambda_from_alpha_cubed(a3).ok_or(CsnError::SkewDomain {
                        index: i,
                        value: a3,
                        bound: ALPHA_CUBED_BOUND,
                    })?;
                }
                Ok(out)
            }
        }
    }
}

/// `alpha = lambda kappa`.
pub fn alpha_from_lambda(lambda: f64) -> f64 {
    lambda / (1.0 + ONE_MINUS_B2 * lambda * lambda).sqrt()
}

pub fn alpha_cubed_from_lambda(lambda: f64) -> f64 {
    alpha_from_lambda(lambda).powi(3)
}

/// Inverse of [`alpha_from_lambda`]; `None` outside `|alpha| < (1 - b^2)^(-1/2)`.
pub fn lambda_from_alpha(alpha: f64) -> Option<f64> {
    let s = 1.0 - ONE_MINUS_B2 * alpha * alpha;
    if s > 0.0 && alpha.is_finite() {
        Some(alpha / s.sqrt())
    } else {
        None
    }
}

pub fn lambda_from_alpha_cubed(alpha_cubed: f64) -> Option<f64> {
    if alpha_cubed.abs() < ALPHA_CUBED_BOUND {
        lambda_from_alpha(alpha_cubed.cbrt())
    } else {
        None
    }
}

/// Per-coordinate derived quantities `delta`, `tau`, `alpha`, `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxQuantities {
    pub delta: DVector<f64>,
    pub tau: DVector<f64>,
    pub alpha: DVector<f64>,
    pub kappa: DVector<f64>,
}

impl AuxQuantities {
    pub fn from_lambda(lambda: &DVector<f64>) -> AuxQuantities {
        let delta = lambda.map(|l| l / (1.0 + l * l).sqrt());
        let tau = delta.map(|d| (1.0 - B * B * d * d).sqrt());
        let kappa = lambda.map(|l| 1.0 / (1.0 + ONE_MINUS_B2 * l * l).sqrt());
        let alpha = lambda.component_mul(&kappa);
        AuxQuantities { delta, tau, alpha, kappa }
    }
}

/// Auxiliary quantities for a tagged skew vector.
pub fn derive_aux(skew: &SkewParam) -> Result<AuxQuantities> {
    Ok(AuxQuantities::from_lambda(&skew.to_lambda()?))
}

/// Which factorisation of `C` is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    #[default]
    Cholesky,
    Lu,
}

/// The linear map `C`, either `L` or `L U` with unit-diagonal `U`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorForm {
    Cholesky { l: DMatrix<f64> },
    Lu { l: DMatrix<f64>, u: DMatrix<f64> },
}

impl FactorForm {
    pub fn kind(&self) -> FactorKind {
        match self {
            FactorForm::Cholesky { .. } => FactorKind::Cholesky,
            FactorForm::Lu { .. } => FactorKind::Lu,
        }
    }

    pub fn l(&self) -> &DMatrix<f64> {
        match self {
            FactorForm::Cholesky { l } | FactorForm::Lu { l, .. } => l,
        }
    }

    pub fn u(&self) -> Option<&DMatrix<f64>> {
        match self {
            FactorForm::Cholesky { .. } => None,
            FactorForm::Lu { u, .. } => Some(u),
        }
    }

    pub fn dim(&self) -> usize {
        self.l().nrows()
    }

    /// Effective `C`.
    pub fn c(&self) -> DMatrix<f64> {
        match self {
            FactorForm::Cholesky { l } => l.clone(),
            FactorForm::Lu { l, u } => l * u,
        }
    }

    fn validate(&self) -> Result<()> {
        let l = self.l();
        let d = l.nrows();
        if l.ncols() != d {
            return Err(CsnError::Dimension(format!("L is {}x{}", d, l.ncols())));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if l[(i, j)] != 0.0 {
                    return Err(CsnError::InvalidArgument(format!("L has nonzero upper entry ({i}, {j})")));
                }
            }
            let v = l[(i, i)];
            if v == 0.0 || !v.is_finite() {
                return Err(CsnError::SingularFactor { index: i, value: v });
            }
        }
        if let Some(u) = self.u() {
            if u.nrows() != d || u.ncols() != d {
                return Err(CsnError::Dimension(format!("U is {}x{}, expected {d}x{d}", u.nrows(), u.ncols())));
            }
            for i in 0..d {
                for j in 0..=i {
                    let want = if i == j { 1.0 } else { 0.0 };
                    if u[(i, j)] != want {
                        return Err(CsnError::NotUnitUpper { row: i, col: j, value: u[(i, j)] });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parameters of one CSN-subclass factor.
///
/// `lambda` and the auxiliaries are cached on construction; use the
/// constructors rather than building the struct literally.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewParams {
    mu: DVector<f64>,
    factor: FactorForm,
    skew: SkewParam,
    lambda: DVector<f64>,
    aux: AuxQuantities,
    c: DMatrix<f64>,
}

impl SkewParams {
    pub fn new(mu: DVector<f64>, factor: FactorForm, skew: SkewParam) -> Result<SkewParams> {
        let d = mu.len();
        if d == 0 {
            return Err(CsnError::Dimension("d must be at least 1".into()));
        }
        if factor.dim() != d || skew.len() != d {
            return Err(CsnError::Dimension(format!(
                "mu has length {d}, factor is {}x{}, skew has length {}",
                factor.dim(),
                factor.dim(),
                skew.len()
            )));
        }
        factor.validate()?;
        if let SkewParam::AlphaCubed(v) = &skew {
            let lim = alpha_cubed_limit();
            for (i, &a3) in v.iter().enumerate() {
                if !(a3.abs() <= lim) {
                    return Err(CsnError::SkewDomain { index: i, value: a3, bound: ALPHA_CUBED_BOUND });
                }
            }
        }
        let lambda = skew.to_lambda()?;
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(CsnError::Numerical("non-finite skewness".into()));
        }
        let aux = AuxQuantities::from_lambda(&lambda);
        let c = factor.c();
        Ok(SkewParams { mu, factor, skew, lambda, aux, c })
    }

    /// Cholesky-form parameters with `lambda` stored in parametrization `kind`.
    pub fn cholesky(mu: DVector<f64>, l: DMatrix<f64>, lambda: DVector<f64>, kind: Parametrization) -> Result<SkewParams> {
        let skew = SkewParam::from_lambda(&lambda, kind);
        SkewParams::new(mu, FactorForm::Cholesky { l }, skew)
    }

    /// LU-form parameters with `lambda` stored in parametrization `kind`.
    pub fn lu(mu: DVector<f64>, l: DMatrix<f64>, u: DMatrix<f64>, lambda: DVector<f64>, kind: Parametrization) -> Result<SkewParams> {
        let skew = SkewParam::from_lambda(&lambda, kind);
        SkewParams::new(mu, FactorForm::Lu { l, u }, skew)
    }

    /// Standard Gaussian `N(0, I_d)` in the given form and parametrization.
    pub fn standard(d: usize, form: FactorKind, kind: Parametrization) -> SkewParams {
        let mu = DVector::zeros(d);
        let l = DMatrix::identity(d, d);
        let lambda = DVector::zeros(d);
        match form {
            FactorKind::Cholesky => SkewParams::cholesky(mu, l, lambda, kind),
            FactorKind::Lu => SkewParams::lu(mu, l, DMatrix::identity(d, d), lambda, kind),
        }
        .expect("standard parameters are valid")
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn factor(&self) -> &FactorForm {
        &self.factor
    }
    pub fn skew(&self) -> &SkewParam {
        &self.skew
    }
    pub fn parametrization(&self) -> Parametrization {
        self.skew.kind()
    }
    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }
    pub fn aux(&self) -> &AuxQuantities {
        &self.aux
    }
    /// Effective `C`.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn l(&self) -> &DMatrix<f64> {
        self.factor.l()
    }
    pub fn u(&self) -> Option<&DMatrix<f64>> {
        self.factor.u()
    }

    /// Covariance `C C^T`.
    pub fn sigma(&self) -> DMatrix<f64> {
        &self.c * self.c.transpose()
    }

    /// `ln |det C|`.
    pub fn log_abs_det_c(&self) -> f64 {
        self.l().diagonal().iter().map(|v| v.abs().ln()).sum()
    }

    /// `C^{-1} x`.
    pub fn solve_c(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = self.l().solve_lower_triangular(x).expect("L is nonsingular");
        match self.u() {
            None => y,
            Some(u) => u.solve_upper_triangular(&y).expect("U is unit triangular"),
        }
    }

    /// `C^{-T} x`.
    pub fn solve_c_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = match self.u() {
            None => x.clone(),
            Some(u) => u.tr_solve_upper_triangular(x).expect("U is unit triangular"),
        };
        self.l().tr_solve_lower_triangular(&y).expect("L is nonsingular")
    }

    /// `C^{-1}` as a dense matrix.
    pub fn c_inverse(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            out.set_column(j, &self.solve_c(&e));
        }
        out
    }

    /// Same distribution with the skew vector re-expressed in `kind`.
    pub fn with_parametrization(&self, kind: Parametrization) -> Result<SkewParams> {
        let skew = SkewParam::from_lambda(&self.lambda, kind);
        SkewParams::new(self.mu.clone(), self.factor.clone(), skew)
    }

    /// Same `mu` and `C` with a new `lambda` in the current parametrization.
    pub fn with_lambda(&self, lambda: &DVector<f64>) -> Result<SkewParams> {
        let skew = SkewParam::from_lambda(lambda, self.parametrization());
        SkewParams::new(self.mu.clone(), self.factor.clone(), skew)
    }

    /// Gaussian counterpart: same `mu` and `C`, `lambda = 0`.
    pub fn gaussian_part(&self) -> SkewParams {
        self.with_lambda(&DVector::zeros(self.dim())).expect("zero skew is admissible")
    }

    /// Convert to the LU form with `U = I`, or the Cholesky form when `C`
    /// is lower triangular (errors otherwise).
    pub fn with_factor_kind(&self, kind: FactorKind) -> Result<SkewParams> {
        let d = self.dim();
        let factor = match (kind, &self.factor) {
            (FactorKind::Cholesky, FactorForm::Cholesky { .. }) | (FactorKind::Lu, FactorForm::Lu { .. }) => {
                self.factor.clone()
            }
            (FactorKind::Lu, FactorForm::Cholesky { l }) => FactorForm::Lu { l: l.clone(), u: DMatrix::identity(d, d) },
            (FactorKind::Cholesky, FactorForm::Lu { l, u }) => {
                if *u != DMatrix::identity(d, d) {
                    return Err(CsnError::InvalidArgument("cannot drop a non-identity U".into()));
                }
                FactorForm::Cholesky { l: l.clone() }
            }
        };
        SkewParams::new(self.mu.clone(), factor, self.skew.clone())
    }
}

/// Plain serialisable mirror of [`SkewParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkewParamsRecord {
    pub mu: Vec<f64>,
    pub factor: FactorKind,
    /// Rows of `L`.
    pub l: Vec<Vec<f64>>,
    /// Rows of `U` (LU form only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    pub skew: Parametrization,
    pub skew_values: Vec<f64>,
    /// Derived `lambda`, written for convenience and ignored on read.
    #[serde(default)]
    pub lambda: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = r.len();
    if r.iter().any(|row| row.len() != n) {
        return Err(CsnError::Dimension("matrix rows must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| r[i][j]))
}

impl From<&SkewParams> for SkewParamsRecord {
    fn from(p: &SkewParams) -> Self {
        SkewParamsRecord {
            mu: p.mu.iter().copied().collect(),
            factor: p.factor.kind(),
            l: rows(p.l()),
            u: p.u().map(rows),
            skew: p.parametrization(),
            skew_values: p.skew.values().iter().copied().collect(),
            lambda: p.lambda.iter().copied().collect(),
        }
    }
}

impl TryFrom<SkewParamsRecord> for SkewParams {
    type Error = CsnError;
    fn try_from(r: SkewParamsRecord) -> Result<Self> {
        let l = from_rows(&r.l)?;
        let factor = match (r.factor, r.u) {
            (FactorKind::Cholesky, _) => FactorForm::Cholesky { l },
            (FactorKind::Lu, Some(u)) => FactorForm::Lu { l, u: from_rows(&u)? },
            (FactorKind::Lu, None) => return Err(CsnError::InvalidArgument("LU form requires u".into())),
        };
        let v = DVector::from_vec(r.skew_values);
        let skew = match r.skew {
            Parametrization::Lambda => SkewParam::Lambda(v),
            Parametrization::LambdaCubed => SkewParam::LambdaCubed(v),
            Parametrization::AlphaCubed => SkewParam::AlphaCubed(v),
        };
        SkewParams::new(DVector::from_vec(r.mu), factor, skew)
    }
}

impl Serialize for SkewParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SkewParamsRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SkewParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SkewParamsRecord::deserialize(d)?;
        SkewParams::try_from(r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_case() {
        let a = AuxQuantities::from_lambda(&DVector::from_element(1, 0.0));
        assert_eq!((a.delta[0], a.tau[0], a.alpha[0], a.kappa[0]), (0.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn unit_lambda_reference() {
        // 40-digit reference values.
        let a = AuxQuantities::from_lambda(&DVector::from_element(1, 1.0));
        assert!((a.delta[0] - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert!((a.tau[0] - 0.825_645_271_176_556_4).abs() < 1e-15);
        assert!((a.alpha[0] - 0.856_429_275_224_831_4).abs() < 1e-15);
        assert!((a.kappa[0] - 0.856_429_275_224_831_4).abs() < 1e-15);
        assert!((a.alpha[0] - a.delta[0] / a.tau[0]).abs() < 1e-15);
    }

    #[test]
    fn bound_constant() {
        assert!((ALPHA_CUBED_BOUND - ONE_MINUS_B2.powf(-1.5)).abs() < 1e-14);
        assert!((ALPHA_CUBED_BOUND - 4.565).abs() < 1e-3);
    }

    #[test]
    fn out_of_domain_alpha_cubed_names_component() {
        let skew = SkewParam::AlphaCubed(DVector::from_vec(vec![0.5, -4.6]));
        match derive_aux(&skew) {
            Err(CsnError::SkewDomain { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        let p = SkewParams::new(
            DVector::zeros(1),
            FactorForm::Cholesky { l: DMatrix::identity(1, 1) },
            SkewParam::AlphaCubed(DVector::from_element(1, ALPHA_CUBED_BOUND * (1.0 - 1e-8))),
        );
        assert!(matches!(p, Err(CsnError::SkewDomain { .. })));
    }

    #[test]
    fn singular_and_non_unit_factors_are_rejected() {
        let mut l = DMatrix::identity(2, 2);
        l[(1, 1)] = 0.0;
        let p = SkewParams::cholesky(DVector::zeros(2), l, DVector::zeros(2), Parametrization::Lambda);
        assert!(matches!(p, Err(CsnError::SingularFactor { index: 1, .. })));
        let mut u = DMatrix::identity(2, 2);
        u[(0, 0)] = 1.5;
        let p = SkewParams::lu(DVector::zeros(2), DMatrix::identity(2, 2), u, DVector::zeros(2), Parametrization::Lambda);
        assert!(matches!(p, Err(CsnError::NotUnitUpper { .. })));
    }

    #[test]
    fn json_round_trip() {
        let l = DMatrix::from_row_slice(2, 2, &[1.3, 0.0, -0.4, 0.7]);
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.0, 1.0]);
        let p = SkewParams::lu(DVector::from_vec(vec![0.1, -2.0]), l, u, DVector::from_vec(vec![1.2, -0.3]), Parametrization::AlphaCubed).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: SkewParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    proptest! {
        #[test]
        fn parametrizations_round_trip(lambda in -50.0f64..50.0) {
            let a3 = alpha_cubed_from_lambda(lambda);
            let back = lambda_from_alpha_cubed(a3).unwrap();
            prop_assert!((back - lambda).abs() <= 1e-12 * lambda.abs().max(1.0));
            let l3 = lambda.powi(3).cbrt();
            prop_assert!((l3 - lambda).abs() <= 1e-12 * lambda.abs().max(1.0));
            prop_assert!(a3.abs() < ALPHA_CUBED_BOUND);
        }

        #[test]
        fn aux_invariants(lambda in -1e3f64..1e3) {
            let a = AuxQuantities::from_lambda(&DVector::from_element(1, lambda));
            prop_assert!(a.delta[0].abs() < 1.0 || lambda.abs() > 1e7);
            prop_assert!(a.tau[0] > ONE_MINUS_B2.sqrt() - 1e-15 && a.tau[0] <= 1.0);
            prop_assert!(a.kappa[0] > 0.0 && a.kappa[0] <= 1.0);
            prop_assert!((a.alpha[0] * a.tau[0] - a.delta[0]).abs() < 1e-12);
        }
    }
}
