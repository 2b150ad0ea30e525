use crate::special::B;
use nalgebra::DVector;
use rand::Rng;
use rand::RngExt;
use rand_distr::StandardNormal;

/// Base randomness `(w1, w2)` for one reparametrized draw.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    pub w1: DVector<f64>,
    pub w2: DVector<f64>,
}

impl NoisePair {
    /// Draws `w1` then `w2`, each `N(0, I_d)`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, d: usize) -> NoisePair {
        let w1 = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        let w2 = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        NoisePair { w1, w2 }
    }

    /// `|w1| - b`.
    pub fn w1_tilde(&self) -> DVector<f64> {
        self.w1.map(|w| w.abs() - B)
    }

    /// Split into consecutive per-block pieces of the given sizes.
    pub fn split(&self, sizes: &[usize]) -> Vec<NoisePair> {
        let mut out = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &s in sizes {
            out.push(NoisePair { w1: self.w1.rows(at, s).into_owned(), w2: self.w2.rows(at, s).into_owned() });
            at += s;
        }
        out
    }
}
