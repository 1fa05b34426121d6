//! Filtered back-projection baseline.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::radon::{RadonGeometry, RadonOperator};
use super::LinearOperator;
use crate::error::Result;
use crate::exec;
use crate::grid::{forward_dft_1d, inverse_dft_1d, RealGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RampWindow {
    /// Plain Ram-Lak.
    #[default]
    None,
    /// Ram-Lak apodized by a Hann window reaching zero at Nyquist.
    Hann,
}

/// Frequency response of the band-limited ramp filter on a zero-padded
/// length `len`, built from its spatial-domain kernel so the DC response is
/// correct.
fn ramp_response(len: usize, pitch: f64, window: RampWindow) -> Vec<f64> {
    let mut h = vec![Complex64::new(0.0, 0.0); len];
    h[0] = Complex64::new(1.0 / (4.0 * pitch * pitch), 0.0);
    for n in 1..len / 2 {
        if n % 2 == 1 {
            let v = -1.0 / (PI * PI * (n * n) as f64 * pitch * pitch);
            h[n] = Complex64::new(v, 0.0);
            h[len - n] = Complex64::new(v, 0.0);
        }
    }
    forward_dft_1d(&mut h);
    h.iter()
        .enumerate()
        .map(|(k, v)| {
            let f = k.min(len - k) as f64 / len as f64; // cycles per sample, 0..0.5
            let w = match window {
                RampWindow::None => 1.0,
                RampWindow::Hann => 0.5 * (1.0 + (2.0 * PI * f).cos()),
            };
            v.re * w
        })
        .collect()
}

/// Ramp-filter every sinogram row (linear convolution via zero padding).
pub fn ramp_filter(sino: &RealGrid, pitch: f64, window: RampWindow) -> RealGrid {
    let (views, bins) = sino.shape();
    let len = (2 * bins).next_power_of_two();
    let response = ramp_response(len, pitch, window);
    let mut out = RealGrid::zeros(views, bins);
    exec::for_each_chunk_mut(out.data_mut(), bins, |v, row| {
        let mut buf: Vec<Complex64> = sino
            .row(v)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(len)
            .collect();
        forward_dft_1d(&mut buf);
        for (b, r) in buf.iter_mut().zip(&response) {
            *b *= *r;
        }
        inverse_dft_1d(&mut buf);
        for (o, b) in row.iter_mut().zip(&buf) {
            *o = b.re * pitch;
        }
    });
    out
}

/// Filtered back-projection for views spanning a half circle, scaled by
/// `π/n_views` times the pitch (the back-projector already divides by it).
pub fn fbp(sino: &RealGrid, geo: &RadonGeometry) -> Result<RealGrid> {
    fbp_windowed(sino, geo, RampWindow::None)
}

pub fn fbp_windowed(sino: &RealGrid, geo: &RadonGeometry, window: RampWindow) -> Result<RealGrid> {
    let op = RadonOperator::new(geo.clone());
    sino.ensure_shape(op.range_shape(), "fbp")?;
    let filtered = ramp_filter(sino, geo.detector_pitch(), window);
    let bp = op.adjoint(&filtered)?;
    Ok(bp.scale(PI / geo.n_views() as f64 * geo.detector_pitch()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::make_sparse_view_geometry;

    #[test]
    fn zero_sinogram_gives_zero_image() {
        let geo = make_sparse_view_geometry(20, 32).unwrap();
        let img = fbp(&RealGrid::zeros(20, 363), &geo).unwrap();
        assert_eq!(img.max_abs(), 0.0);
    }

    #[test]
    fn ramp_response_is_nonnegative_and_zero_mean_kernel_has_small_dc() {
        let r = ramp_response(64, 1.0, RampWindow::None);
        assert!(r.iter().all(|&v| v > -1e-12));
        // DC of the truncated Ram-Lak kernel is small but positive
        assert!(r[0] < 0.02);
        // Nyquist response of the ideal ramp at unit pitch is 1/2
        assert!((r[32] - 0.5).abs() < 0.01);
        let hann = ramp_response(64, 1.0, RampWindow::Hann);
        assert!(hann[32].abs() < 1e-12);
    }

    #[test]
    fn wrong_shape_rejected() {
        let geo = make_sparse_view_geometry(20, 32).unwrap();
        assert!(fbp(&RealGrid::zeros(19, 363), &geo).is_err());
    }
}
