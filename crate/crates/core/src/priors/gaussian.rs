use crate::error::{Error, Result};
use crate::grid::{Grid, Sample};

use super::Denoiser;

/// Exact MMSE denoiser for the prior `N(μ₀, τ²I)`:
/// `D_σ(v) = (τ²v + σ²μ₀) / (τ² + σ²)`.
///
/// It coincides with `prox_{σ²φ}` for `φ(x) = ‖x − μ₀‖² / (2τ²)`, and its
/// score is known in closed form, which makes it the reference case for the
/// fixed-point certificates.
#[derive(Clone, Debug)]
pub struct GaussianPriorDenoiser<T> {
    mean: Grid<T>,
    tau: f64,
}

impl<T: Sample> GaussianPriorDenoiser<T> {
    pub fn new(mean: Grid<T>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || tau.is_nan() {
            return Err(Error::invalid(format!("prior std must be positive, got {tau}")));
        }
        mean.ensure_finite("gaussian prior mean")?;
        Ok(Self { mean, tau })
    }

    pub fn mean(&self) -> &Grid<T> {
        &self.mean
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Score of the σ-smoothed prior `N(μ₀, (τ²+σ²)I)` at `v`.
    pub fn smoothed_score(&self, v: &Grid<T>, sigma: f64) -> Result<Grid<T>> {
        let s = 1.0 / (self.tau * self.tau + sigma * sigma);
        self.mean.zip_map(v, |m, x| (m - x) * s)
    }

    /// Gradient of `φ(x) = ‖x − μ₀‖² / (2τ²)`.
    pub fn regularizer_gradient(&self, x: &Grid<T>) -> Result<Grid<T>> {
        let s = 1.0 / (self.tau * self.tau);
        x.zip_map(&self.mean, |a, m| (a - m) * s)
    }

    /// Contraction factor `τ²/(τ²+σ²)`; the denoiser is Lipschitz with this constant.
    pub fn contraction(&self, sigma: f64) -> f64 {
        let t2 = self.tau * self.tau;
        if t2.is_infinite() {
            return 1.0;
        }
        t2 / (t2 + sigma * sigma)
    }
}

impl<T: Sample> Denoiser<T> for GaussianPriorDenoiser<T> {
    fn denoise(&self, v: &Grid<T>, sigma: f64, _t: usize) -> Result<Grid<T>> {
        super::check_sigma(sigma)?;
        v.ensure_shape(self.mean.shape(), "gaussian prior denoise")?;
        let t2 = self.tau * self.tau;
        let s2 = sigma * sigma;
        if s2 == 0.0 {
            return Ok(v.clone());
        }
        let (a, b) = (t2 / (t2 + s2), s2 / (t2 + s2));
        v.zip_map(&self.mean, |x, m| x * a + m * b)
    }

    fn name(&self) -> String {
        format!("gaussian-prior[tau={}]", self.tau)
    }
}

/// Max-abs deviation of `D_σ(v)` from the Tweedie form `v + σ²∇log p_σ(v)`.
pub fn tweedie_consistency_check<T: Sample>(d: &GaussianPriorDenoiser<T>, v: &Grid<T>, sigma: f64) -> Result<f64> {
    let out = d.denoise(v, sigma, 0)?;
    let score = d.smoothed_score(v, sigma)?;
    let mut tweedie = v.clone();
    tweedie.axpy(sigma * sigma, &score)?;
    Ok(out
        .data()
        .iter()
        .zip(tweedie.data())
        .map(|(a, b)| (*a - *b).magnitude())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RealGrid, SeededRng};

    #[test]
    fn zero_sigma_is_identity() {
        let mut rng = SeededRng::new(1);
        let v = rng.white_gaussian(4, 4, 1.0).unwrap();
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(4, 4), 1.0).unwrap();
        assert_eq!(d.denoise(&v, 0.0, 0).unwrap(), v);
    }

    #[test]
    fn flat_prior_limit() {
        let mut rng = SeededRng::new(2);
        let v = rng.white_gaussian(4, 4, 1.0).unwrap();
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(4, 4), 1e8).unwrap();
        assert!(d.denoise(&v, 1.0, 0).unwrap().distance(&v).unwrap() < 1e-6);
    }

    #[test]
    fn unit_case_halves() {
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(3, 3), 1.0).unwrap();
        let out = d.denoise(&RealGrid::filled(3, 3, 2.0), 1.0, 0).unwrap();
        assert!(out.data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn negative_sigma_rejected() {
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(2, 2), 1.0).unwrap();
        assert!(d.denoise(&RealGrid::zeros(2, 2), -0.1, 0).is_err());
        assert!(GaussianPriorDenoiser::new(RealGrid::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn tweedie_identity() {
        let mut rng = SeededRng::new(3);
        let v = rng.white_gaussian(8, 8, 2.0).unwrap();
        let mu = rng.white_gaussian(8, 8, 1.0).unwrap();
        let d = GaussianPriorDenoiser::new(mu.clone(), 1.0).unwrap();
        assert!(tweedie_consistency_check(&d, &v, 0.5).unwrap() < 1e-12);
        assert_eq!(tweedie_consistency_check(&d, &v, 0.0).unwrap(), 0.0);
        // prior mean is a fixed point
        assert!(d.denoise(&mu, 0.7, 0).unwrap().distance(&mu).unwrap() < 1e-12);
        assert!(tweedie_consistency_check(&d, &mu, 0.7).unwrap() < 1e-12);
    }

    #[test]
    fn matches_proximal_operator() {
        // prox_{γφ}(v) for φ = ‖x−μ‖²/(2τ²), γ = σ²: stationarity of
        // ½‖z−v‖² + γφ(z) gives z − v + (σ²/τ²)(z − μ) = 0.
        let mut rng = SeededRng::new(4);
        let v = rng.white_gaussian(6, 6, 1.0).unwrap();
        let mu = rng.white_gaussian(6, 6, 1.0).unwrap();
        let (tau, sigma) = (0.8, 0.6);
        let d = GaussianPriorDenoiser::new(mu.clone(), tau).unwrap();
        let z = d.denoise(&v, sigma, 0).unwrap();
        let mut grad = z.sub(&v).unwrap();
        grad.axpy(sigma * sigma, &d.regularizer_gradient(&z).unwrap()).unwrap();
        assert!(grad.max_abs() < 1e-12);
    }

    #[test]
    fn is_a_contraction() {
        let mut rng = SeededRng::new(5);
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(5, 5), 0.5).unwrap();
        let a = rng.white_gaussian(5, 5, 1.0).unwrap();
        let b = rng.white_gaussian(5, 5, 1.0).unwrap();
        let sigma = 0.9;
        let da = d.denoise(&a, sigma, 0).unwrap();
        let db = d.denoise(&b, sigma, 0).unwrap();
        let ratio = da.distance(&db).unwrap() / a.distance(&b).unwrap();
        assert!(ratio <= d.contraction(sigma) + 1e-12);
        assert!(d.contraction(sigma) <= 1.0);
    }
}
