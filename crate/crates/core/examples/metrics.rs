//! Kernel density estimates, integrated absolute error and MMD.

use csnvi::csn::{log_density, sample, Parametrization, SkewParams};
use csnvi::metrics::{iae_accuracy, kde_1d, mmd_mstar, DensityGrid};
use csnvi::rng::stream;
use nalgebra::{DMatrix, DVector};

fn main() -> csnvi::Result<()> {
    let skewed = SkewParams::cholesky(DVector::zeros(1), DMatrix::identity(1, 1), DVector::from_element(1, 4.0), Parametrization::Lambda)?;
    let gaussian = skewed.gaussian_part();
    let exact = DensityGrid::from_fn(-6.0, 6.0, 1024, |x| log_density(&skewed, &DVector::from_element(1, x)).exp());
    let normal = DensityGrid::from_fn(-6.0, 6.0, 1024, |x| log_density(&gaussian, &DVector::from_element(1, x)).exp());
    let (iae, acc) = iae_accuracy(&normal, &exact);
    println!("gaussian vs skewed, same mean and variance: IAE {iae:.4}, accuracy {acc:.1}%");

    let draws: Vec<f64> = sample(&skewed, &mut stream(1, 0), 100_000).iter().map(|t| t[0]).collect();
    let kde = kde_1d(&draws, None)?;
    let (iae, acc) = iae_accuracy(&kde, &exact);
    println!("KDE of 1e5 draws vs exact: IAE {iae:.4}, accuracy {acc:.1}%");

    let a = sample(&skewed, &mut stream(2, 0), 1000);
    let b = sample(&skewed, &mut stream(3, 0), 1000);
    let g = sample(&gaussian, &mut stream(4, 0), 1000);
    let same = mmd_mstar(&a, &b, None)?;
    let diff = mmd_mstar(&a, &g, None)?;
    println!("MMD same law {:.5} (se {:.5}), M* {:.2}", same.mmd, same.std_error, same.m_star);
    println!("MMD skewed vs gaussian {:.5} (se {:.5}), M* {:.2}", diff.mmd, diff.std_error, diff.m_star);
    Ok(())
}
