use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::{norm, DenseMatrix};

/// Seeded random source. All randomness in the crate flows through this type;
/// ChaCha8 keeps streams identical across platforms for a given seed.
#[derive(Clone, Debug)]
pub struct SketchRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SketchRng {
    pub fn new(seed: u64) -> Self {
        SketchRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Standard normal draw (ziggurat).
    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.inner.random_bool(p)
    }

    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.inner.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

/// Matrix of i.i.d. standard normal entries, filled in row-major order.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SketchRng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gaussian()).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("shape matches length")
}

/// Uniform point on the unit sphere in `d` dimensions (normalized Gaussian).
pub fn unit_sphere_vector(d: usize, rng: &mut SketchRng) -> Vec<f64> {
    assert!(d >= 1, "sphere dimension must be positive");
    loop {
        let mut x: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let n = norm(&x);
        if n > 0.0 && n.is_finite() {
            x.iter_mut().for_each(|v| *v /= n);
            return x;
        }
    }
}
