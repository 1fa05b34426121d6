use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexGrid, Grid, RealGrid};
use crate::error::{Error, Result};

/// Seeded ChaCha stream. Identical seeds give bit-identical samples on every
/// platform.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, e.g. one per Monte-Carlo trial.
    pub fn fork(&mut self) -> SeededRng {
        SeededRng::new(self.inner.random())
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    fn sample<D: rand::distr::Distribution<f64>>(&mut self, d: D) -> f64 {
        self.inner.sample(d)
    }

    /// I.i.d. `N(0, std²)` samples.
    pub fn white_gaussian(&mut self, height: usize, width: usize, std: f64) -> Result<RealGrid> {
        if !(std >= 0.0) || !std.is_finite() {
            return Err(Error::invalid(format!(
                "noise standard deviation must be finite and nonnegative, got {std}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("white noise grid must be non-empty"));
        }
        let data = (0..height * width).map(|_| std * self.standard_normal()).collect();
        Ok(Grid::from_raw(height, width, data))
    }

    /// Circular complex Gaussian with `std` per channel.
    pub fn complex_gaussian(&mut self, height: usize, width: usize, std: f64) -> Result<ComplexGrid> {
        let re = self.white_gaussian(height, width, std)?;
        let im = self.white_gaussian(height, width, std)?;
        re.zip_map(&im, Complex64::new)
    }
}

/// `std`-scaled white Gaussian grid drawn from `rng`.
pub fn sample_white_gaussian(rng: &mut SeededRng, height: usize, width: usize, std: f64) -> Result<RealGrid> {
    rng.white_gaussian(height, width, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_gives_zero_grid() {
        let g = sample_white_gaussian(&mut SeededRng::new(1), 4, 4, 0.0).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_std_rejected() {
        assert!(sample_white_gaussian(&mut SeededRng::new(1), 4, 4, -1.0).is_err());
    }

    #[test]
    fn same_seed_same_grid() {
        let a = sample_white_gaussian(&mut SeededRng::new(42), 16, 16, 1.0).unwrap();
        let b = sample_white_gaussian(&mut SeededRng::new(42), 16, 16, 1.0).unwrap();
        assert_eq!(a, b);
        let c = sample_white_gaussian(&mut SeededRng::new(43), 16, 16, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn moments_on_256x256() {
        // N = 65536: std error of the mean is 1/256 ≈ 0.0039, so ±0.02 is a
        // ~5σ bound; the sample variance has std error √(2/N) ≈ 0.0055, so
        // [0.97, 1.03] is also ~5σ.
        let g = sample_white_gaussian(&mut SeededRng::new(7), 256, 256, 1.0).unwrap();
        let mean = g.mean();
        let var = g.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.97..=1.03).contains(&var), "var {var}");
    }
}
