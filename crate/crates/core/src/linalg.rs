//! Half-vectorisation helpers and triangular-part operators.

use nalgebra::{DMatrix, DVector};

/// `d (d + 1) / 2`.
pub fn tri_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Column-major stack of the lower triangle, diagonal included.
pub fn vech(x: &DMatrix<f64>) -> DVector<f64> {
    let d = x.nrows();
    let mut out = Vec::with_capacity(tri_len(d));
    for j in 0..d {
        for i in j..d {
            out.push(x[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vech`]: a lower-triangular matrix.
pub fn vech_inv(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), tri_len(d));
    let mut x = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            x[(i, j)] = v[k];
            k += 1;
        }
    }
    x
}

/// Column-major stack of the strict upper triangle.
pub fn vech_u(x: &DMatrix<f64>) -> DVector<f64> {
    let d = x.nrows();
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for j in 0..d {
        for i in 0..j {
            out.push(x[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vech_u`]: a strictly upper-triangular matrix.
pub fn vech_u_inv(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), d * d.saturating_sub(1) / 2);
    let mut x = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..j {
            x[(i, j)] = v[k];
            k += 1;
        }
    }
    x
}

/// Lower triangle including the diagonal.
pub fn lower(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = x.clone();
    y.fill_upper_triangle(0.0, 1);
    y
}

/// Strict upper triangle.
pub fn strict_upper(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = x.clone();
    y.fill_lower_triangle(0.0, 0);
    y
}

/// Sample mean and unbiased covariance of the rows of `xs`.
pub fn mean_and_cov(xs: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mut m = DVector::zeros(d);
    for x in xs {
        m += x;
    }
    m /= n;
    let mut c = DMatrix::zeros(d, d);
    for x in xs {
        let r = x - &m;
        c += &r * r.transpose();
    }
    c /= n - 1.0;
    (m, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_round_trips() {
        let x = DMatrix::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        assert_eq!(vech_inv(&vech(&x), 4), lower(&x));
        assert_eq!(vech_u_inv(&vech_u(&x), 4), strict_upper(&x));
        assert_eq!(vech(&x).as_slice(), &[0.0, 10.0, 20.0, 30.0, 11.0, 21.0, 31.0, 22.0, 32.0, 33.0]);
        assert_eq!(vech_u(&x).as_slice(), &[1.0, 2.0, 12.0, 3.0, 13.0, 23.0]);
    }
}
