//! Density, draws, moments and entropy of a bivariate skew-normal factor.

use csnvi::csn::{entropy, log_density, marginal_log_density, marginal_skewness, mean_cov, sample, Parametrization, SkewParams};
use csnvi::linalg::mean_and_cov;
use csnvi::rng::stream;
use nalgebra::{DMatrix, DVector};

fn main() -> csnvi::Result<()> {
    let q = SkewParams::cholesky(
        DVector::from_vec(vec![1.0, -0.5]),
        DMatrix::from_row_slice(2, 2, &[1.2, 0.0, -0.4, 0.7]),
        DVector::from_vec(vec![3.0, -1.0]),
        Parametrization::AlphaCubed,
    )?;
    let (m, c) = mean_cov(&q);
    println!("mean {:?}\ncovariance {:?}", m.as_slice(), c.as_slice());
    println!("entropy {:.6}", entropy(&q));
    for i in 0..2 {
        println!("skewness of theta{} {:.4}", i + 1, marginal_skewness(&q, i));
    }

    let draws = sample(&q, &mut stream(7, 0), 200_000);
    let (em, ec) = mean_and_cov(&draws);
    println!("empirical mean {:?}\nempirical covariance {:?}", em.as_slice(), ec.as_slice());

    let theta = DVector::from_vec(vec![1.5, -1.0]);
    println!("log q({:?}) = {:.6}", theta.as_slice(), log_density(&q, &theta));
    for x in [-1.0, 0.0, 1.0, 2.0, 3.0] {
        println!("marginal density of theta1 at {x:>4}: {:.6}", marginal_log_density(&q, 0, x)?.exp());
    }
    Ok(())
}
