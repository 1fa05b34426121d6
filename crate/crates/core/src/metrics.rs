//! Image quality metrics.

use crate::error::{Error, Result};
use crate::grid::{Grid, RealGrid, Sample};

/// `10·log₁₀(peak²/MSE)` with MSE over `|a − b|²`; `+∞` for identical inputs.
pub fn psnr<T: Sample>(a: &Grid<T>, b: &Grid<T>, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("PSNR peak must be positive, got {peak}")));
    }
    b.ensure_shape(a.shape(), "psnr")?;
    let mse = a.distance(b)?.powi(2) / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_STD: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_taps() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_STD * SSIM_STD)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Separable filtering keeping only fully covered positions.
fn filter_valid(g: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (oh, ow) = (h + 1 - n, w + 1 - n);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = taps.iter().enumerate().map(|(t, k)| k * g[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = taps.iter().enumerate().map(|(t, k)| k * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully covered 11×11 Gaussian windows (std 1.5) with
/// `K₁ = 0.01`, `K₂ = 0.03` on the given dynamic range.
pub fn ssim(a: &RealGrid, b: &RealGrid, data_range: f64) -> Result<f64> {
    b.ensure_shape(a.shape(), "ssim")?;
    if !(data_range > 0.0) {
        return Err(Error::invalid("SSIM dynamic range must be positive"));
    }
    let (h, w) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels"
        )));
    }
    let taps = gaussian_taps();
    let (x, y) = (a.data(), b.data());
    let prod = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..h * w).map(f).collect() };
    let mx = filter_valid(x, h, w, &taps);
    let my = filter_valid(y, h, w, &taps);
    let mxx = filter_valid(&prod(&|i| x[i] * x[i]), h, w, &taps);
    let myy = filter_valid(&prod(&|i| y[i] * y[i]), h, w, &taps);
    let mxy = filter_valid(&prod(&|i| x[i] * y[i]), h, w, &taps);
    let c1 = (K1 * data_range).powi(2);
    let c2 = (K2 * data_range).powi(2);
    let total: f64 = (0..mx.len())
        .map(|k| {
            let (ux, uy) = (mx[k], my[k]);
            let vx = mxx[k] - ux * ux;
            let vy = myy[k] - uy * uy;
            let cxy = mxy[k] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn psnr_examples() {
        let a = RealGrid::filled(8, 8, 0.3);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = a.map(|v| v + 0.2);
        assert!((psnr(&a, &c, 2.0).unwrap() - 20.0).abs() < 1e-9);
        assert!(psnr(&a, &RealGrid::zeros(7, 8), 1.0).is_err());
        assert!(psnr(&a, &b, 0.0).is_err());
    }

    #[test]
    fn complex_psnr_uses_magnitude_error() {
        let a = Grid::filled(4, 4, Complex64::new(0.0, 0.0));
        let b = Grid::filled(4, 4, Complex64::new(0.06, 0.08));
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let a = RealGrid::from_fn(24, 24, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        assert!((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_of_negated_zero_mean_pattern_is_negative() {
        // a checkerboard has (numerically) zero local mean under the window,
        // so the luminance term stays ≈ 1 and the structure term is −1
        let a = RealGrid::from_fn(32, 32, |i, j| if (i + j) % 2 == 0 { 0.5 } else { -0.5 });
        let s = ssim(&a, &a.scale(-1.0), 2.0).unwrap();
        assert!(s < 0.0, "{s}");
    }

    #[test]
    fn ssim_of_constants_is_pure_luminance() {
        // For constants the variance and covariance vanish, so the
        // structure/contrast factor is c₂/c₂ = 1 and SSIM reduces to
        // (2ab + c₁)/(a² + b² + c₁).
        let (va, vb, l): (f64, f64, f64) = (0.2, 0.5, 1.0);
        let a = RealGrid::filled(16, 16, va);
        let b = RealGrid::filled(16, 16, vb);
        let c1 = (0.01 * l).powi(2);
        let expect = (2.0 * va * vb + c1) / (va * va + vb * vb + c1);
        let got = ssim(&a, &b, l).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(got < 1.0);
    }

    #[test]
    fn ssim_rejects_small_or_mismatched() {
        let a = RealGrid::zeros(10, 10);
        assert!(ssim(&a, &a, 1.0).is_err());
        assert!(ssim(&RealGrid::zeros(12, 12), &RealGrid::zeros(12, 13), 1.0).is_err());
    }
}
