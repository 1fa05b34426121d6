//! Parallel-beam Radon transform.
//!
//! Pixels are unit squares. Each one projects to a trapezoid on the
//! detector, and a bin receives the part of that trapezoid's area falling
//! inside it, averaged over the bin width. With a pitch of at least 1/√2 a
//! pixel touches at most three bins. The adjoint reuses exactly the same
//! weights, so the pair is a true transpose.
//!
//! On x86-64 with AVX2 and FMA both directions run vectorized inner loops;
//! [`RadonOperator::portable`] switches back to the plain loops.

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::RealGrid;

/// Detector bin count used by the reference CT geometry.
pub const DEFAULT_DETECTOR_BINS: usize = 363;

/// View angles and detector layout for a square image.
#[derive(Clone, Debug, PartialEq)]
pub struct RadonGeometry {
    angles_deg: Vec<f64>,
    detector_bins: usize,
    detector_pitch: f64,
    image_side: usize,
}

impl RadonGeometry {
    pub fn new(angles_deg: Vec<f64>, detector_bins: usize, detector_pitch: f64, image_side: usize) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::invalid("geometry needs at least one view"));
        }
        if image_side == 0 {
            return Err(Error::invalid("image side must be positive"));
        }
        if !(detector_pitch > 0.0) || !detector_pitch.is_finite() {
            return Err(Error::invalid(format!(
                "detector pitch must be positive, got {detector_pitch}"
            )));
        }
        if angles_deg.iter().any(|a| !a.is_finite() || *a < 0.0 || *a >= 180.0) {
            return Err(Error::invalid("view angles must lie in [0, 180)"));
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("view angles must be strictly increasing"));
        }
        if detector_pitch < std::f64::consts::FRAC_1_SQRT_2 {
            return Err(Error::invalid(format!(
                "detector pitch must be at least 1/√2 pixel, got {detector_pitch}"
            )));
        }
        let needed = min_detector_bins(image_side, detector_pitch).max(3);
        if detector_bins < needed {
            return Err(Error::invalid(format!(
                "{detector_bins} detector bins do not cover a {image_side}-pixel image \
                 diagonal (need at least {needed})"
            )));
        }
        Ok(Self {
            angles_deg,
            detector_bins,
            detector_pitch,
            image_side,
        })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn n_views(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn detector_bins(&self) -> usize {
        self.detector_bins
    }

    pub fn detector_pitch(&self) -> f64 {
        self.detector_pitch
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn sinogram_shape(&self) -> (usize, usize) {
        (self.n_views(), self.detector_bins)
    }

    /// Same detector, different view set.
    pub fn with_angles(&self, angles_deg: Vec<f64>) -> Result<Self> {
        Self::new(angles_deg, self.detector_bins, self.detector_pitch, self.image_side)
    }
}

/// Smallest bin count covering the image diagonal.
pub fn min_detector_bins(image_side: usize, pitch: f64) -> usize {
    ((image_side as f64) * std::f64::consts::SQRT_2 / pitch).ceil() as usize
}

fn default_bins(image_side: usize) -> usize {
    let needed = min_detector_bins(image_side, 1.0);
    if needed <= DEFAULT_DETECTOR_BINS {
        DEFAULT_DETECTOR_BINS
    } else {
        needed | 1
    }
}

/// `n_views` angles evenly spaced over `[0°, 180°)`.
pub fn make_sparse_view_geometry(n_views: usize, image_side: usize) -> Result<RadonGeometry> {
    if n_views == 0 {
        return Err(Error::invalid("n_views must be at least 1"));
    }
    let step = 180.0 / n_views as f64;
    let angles = (0..n_views).map(|k| k as f64 * step).collect();
    RadonGeometry::new(angles, default_bins(image_side), 1.0, image_side)
}

/// `n_views` angles evenly spanning `[0°, max_angle]` inclusive.
pub fn make_limited_angle_geometry(n_views: usize, max_angle: f64, image_side: usize) -> Result<RadonGeometry> {
    if n_views == 0 {
        return Err(Error::invalid("n_views must be at least 1"));
    }
    if !(max_angle > 0.0 && max_angle <= 180.0) {
        return Err(Error::invalid(format!(
            "max_angle must lie in (0, 180], got {max_angle}"
        )));
    }
    let angles: Vec<f64> = if n_views == 1 {
        vec![0.0]
    } else {
        let step = max_angle / (n_views - 1) as f64;
        (0..n_views).map(|k| k as f64 * step).collect()
    };
    // A closed range ending at 180° repeats the 0° view and is rejected here.
    RadonGeometry::new(angles, default_bins(image_side), 1.0, image_side)
}

/// Footprint of one pixel in one view: weights of bins `bin`, `bin+1`,
/// `bin+2`. Stored in single precision to halve memory traffic; both
/// directions read the same values, so the adjoint stays exact.
#[derive(Clone, Copy, Debug)]
#[repr(C)]
struct Tap {
    w: [f32; 3],
    bin: u32,
}

/// CDF of the projection of a unit-area square pixel onto the detector,
/// i.e. of the sum of two centred uniforms of widths `a ≥ b`.
fn footprint_cdf(s: f64, a: f64, b: f64) -> f64 {
    if b < 1e-9 * a {
        return ((s + a / 2.0) / a).clamp(0.0, 1.0);
    }
    let r = |x: f64| if x > 0.0 { 0.5 * x * x } else { 0.0 };
    let (hp, hm) = ((a + b) / 2.0, (a - b) / 2.0);
    ((r(s + hp) - r(s + hm) - r(s - hm) + r(s - hp)) / (a * b)).clamp(0.0, 1.0)
}

// Every tap satisfies `bin + 3 ≤ bins` (checked once in `new`), which lets
// the back-projection skip bounds checks.
#[inline(always)]
fn gather(row: &[f64], tap: &Tap) -> f64 {
    debug_assert!(tap.bin as usize + 3 <= row.len());
    let b = tap.bin as usize;
    // SAFETY: see above
    unsafe {
        tap.w[0] as f64 * row.get_unchecked(b)
            + tap.w[1] as f64 * row.get_unchecked(b + 1)
            + tap.w[2] as f64 * row.get_unchecked(b + 2)
    }
}

/// `Σ w·pix[pixel]` with four partial sums, so the loop is not bound by a
/// single add chain.
#[inline(always)]
fn ray_sum(pixels: &[u32], weights: &[f32], pix: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut pq = pixels.chunks_exact(4);
    let mut wq = weights.chunks_exact(4);
    for (p4, w4) in (&mut pq).zip(&mut wq) {
        for ((a, &p), &w) in acc.iter_mut().zip(p4).zip(w4) {
            *a += w as f64 * pix[p as usize];
        }
    }
    for ((a, &p), &w) in acc.iter_mut().zip(pq.remainder()).zip(wq.remainder()) {
        *a += w as f64 * pix[p as usize];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// AVX2/FMA versions of the two inner loops, picked at run time. They read
/// the same single-precision weights as the portable loops; only the
/// summation order differs.
#[cfg(target_arch = "x86_64")]
mod avx2 {
    use std::arch::x86_64::*;

    use super::Tap;

    pub fn available() -> bool {
        is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma")
    }

    #[target_feature(enable = "avx2,fma")]
    unsafe fn hsum(v: __m256d) -> f64 {
        let lo = _mm256_castpd256_pd128(v);
        let hi = _mm256_extractf128_pd::<1>(v);
        let s = _mm_add_pd(lo, hi);
        _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)))
    }

    /// Safety: AVX2 and FMA are available, `pixels.len() == weights.len()`
    /// and every pixel index is in bounds for `pix`.
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn ray_sum(pixels: &[u32], weights: &[f32], pix: &[f64]) -> f64 {
        let n = pixels.len();
        let (pp, wp, base) = (pixels.as_ptr(), weights.as_ptr(), pix.as_ptr());
        let mut acc0 = _mm256_setzero_pd();
        let mut acc1 = _mm256_setzero_pd();
        let mut k = 0;
        while k + 8 <= n {
            let i0 = _mm_loadu_si128(pp.add(k) as *const __m128i);
            let i1 = _mm_loadu_si128(pp.add(k + 4) as *const __m128i);
            let g0 = _mm256_i32gather_pd::<8>(base, i0);
            let g1 = _mm256_i32gather_pd::<8>(base, i1);
            acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(wp.add(k))), g0, acc0);
            acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(wp.add(k + 4))), g1, acc1);
            k += 8;
        }
        let mut sum = hsum(_mm256_add_pd(acc0, acc1));
        while k < n {
            sum += *wp.add(k) as f64 * *base.add(*pp.add(k) as usize);
            k += 1;
        }
        sum
    }

    /// `out[j] += Σ_v ⟨tap(v, j), row_v[bin ..]⟩` over all views, keeping one
    /// vector accumulator per pixel so that a single sinogram row is live at
    /// a time.
    ///
    /// Safety: AVX2 and FMA are available, `acc.len() == out.len()`, every
    /// `taps[v]` has at least `out.len()` entries, and each tap's `bin + 3`
    /// is within its row.
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn back_project(out: &mut [f64], acc: &mut [__m256d], rows: &[&[f64]], taps: &[&[Tap]]) {
        let lane3 = _mm256_setr_epi64x(-1, -1, -1, 0);
        acc.fill(_mm256_setzero_pd());
        for (row, t) in rows.iter().zip(taps) {
            for (j, a) in acc.iter_mut().enumerate() {
                let tap = t.get_unchecked(j);
                let b = tap.bin as usize;
                // [w0, w1, w2, bits of bin]; the last lane is cleared
                let w = _mm_blend_ps::<0b1000>(_mm_loadu_ps(tap as *const Tap as *const f32), _mm_setzero_ps());
                let p = row.as_ptr().add(b);
                // the fourth sample meets a zero weight; it is only read
                // when it lies inside the row
                let s = if b + 4 <= row.len() {
                    _mm256_loadu_pd(p)
                } else {
                    _mm256_maskload_pd(p, lane3)
                };
                *a = _mm256_fmadd_pd(_mm256_cvtps_pd(w), s, *a);
            }
        }
        for (o, a) in out.iter_mut().zip(acc.iter()) {
            *o += hsum(*a);
        }
    }
}

/// Radon operator with precomputed footprints. The weights are stored
/// twice: pixel-major (for the back-projection) and bin-major (for the
/// projection), so both directions are gathers. Both layouts hold the same
/// single-precision values.
#[derive(Clone, Debug)]
pub struct RadonOperator {
    geometry: RadonGeometry,
    taps: Vec<Tap>,
    /// `ray_offsets[v·bins + k]..ray_offsets[v·bins + k + 1]` indexes the
    /// entries of bin `k` in view `v`.
    ray_offsets: Vec<usize>,
    ray_pixels: Vec<u32>,
    ray_weights: Vec<f32>,
    simd: bool,
}

/// Bin-major copy of the nonzero tap weights, pixels ascending per bin.
fn transpose_taps(taps: &[Tap], views: usize, np: usize, bins: usize) -> (Vec<usize>, Vec<u32>, Vec<f32>) {
    let mut counts = vec![0usize; views * bins + 1];
    for (idx, t) in taps.iter().enumerate() {
        let base = (idx / np) * bins + t.bin as usize;
        for (m, &w) in t.w.iter().enumerate() {
            if w != 0.0 {
                counts[base + m + 1] += 1;
            }
        }
    }
    for k in 1..counts.len() {
        counts[k] += counts[k - 1];
    }
    let offsets = counts.clone();
    let mut pixels = vec![0u32; offsets[views * bins]];
    let mut weights = vec![0.0f32; offsets[views * bins]];
    for (idx, t) in taps.iter().enumerate() {
        let base = (idx / np) * bins + t.bin as usize;
        for (m, &w) in t.w.iter().enumerate() {
            if w != 0.0 {
                let slot = &mut counts[base + m];
                pixels[*slot] = (idx % np) as u32;
                weights[*slot] = w;
                *slot += 1;
            }
        }
    }
    (offsets, pixels, weights)
}

#[cfg(target_arch = "x86_64")]
fn simd_available() -> bool {
    avx2::available()
}

#[cfg(not(target_arch = "x86_64"))]
fn simd_available() -> bool {
    false
}

impl RadonOperator {
    pub fn new(geometry: RadonGeometry) -> Self {
        let n = geometry.image_side;
        let bins = geometry.detector_bins as i64;
        let pitch = geometry.detector_pitch;
        let centre = (n as f64 - 1.0) / 2.0;
        let det_centre = (bins as f64 - 1.0) / 2.0;
        let taps_per_view = exec::map_slice(&geometry.angles_deg, |&deg| {
            let (sin, cos) = deg.to_radians().sin_cos();
            // trapezoid widths in bin units
            let (a, b) = {
                let (c, s) = (cos.abs() / pitch, sin.abs() / pitch);
                (c.max(s), c.min(s))
            };
            let half = (a + b) / 2.0;
            let mut v = Vec::with_capacity(n * n);
            for i in 0..n {
                let y = centre - i as f64;
                for j in 0..n {
                    let x = j as f64 - centre;
                    let t = (x * cos + y * sin) / pitch + det_centre;
                    // first bin whose cell [k − ½, k + ½] meets the support
                    let first = (t - half + 0.5).floor() as i64;
                    let mut w = [0.0f32; 3];
                    let mut prev = footprint_cdf(first as f64 - 0.5 - t, a, b);
                    for (m, wm) in w.iter_mut().enumerate() {
                        let k = first + m as i64;
                        let next = footprint_cdf(k as f64 + 0.5 - t, a, b);
                        if (0..bins).contains(&k) {
                            *wm = ((next - prev).max(0.0) / pitch) as f32;
                        }
                        prev = next;
                    }
                    // the support always lies on the detector, so sliding the
                    // window inside [0, bins − 3] only drops zero weights
                    let start = first.clamp(0, bins - 3);
                    if start > first {
                        w.rotate_left((start - first) as usize);
                    } else if start < first {
                        w.rotate_right((first - start) as usize);
                    }
                    v.push(Tap { w, bin: start as u32 });
                }
            }
            v
        });
        let taps: Vec<Tap> = taps_per_view.into_iter().flatten().collect();
        assert!(taps.iter().all(|t| t.bin as i64 + 3 <= bins));
        let (ray_offsets, ray_pixels, ray_weights) = transpose_taps(&taps, geometry.n_views(), n * n, bins as usize);
        Self {
            geometry,
            taps,
            ray_offsets,
            ray_pixels,
            ray_weights,
            simd: simd_available(),
        }
    }

    /// Forces the portable loops even where AVX2 is available.
    pub fn portable(mut self) -> Self {
        self.simd = false;
        self
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    #[inline(always)]
    fn ray_sum(&self, pixels: &[u32], weights: &[f32], pix: &[f64]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if self.simd {
            // SAFETY: `simd` is only set when AVX2 and FMA were detected, the
            // two slices come from the same offsets, and every stored pixel
            // index is below n², the length of `pix`.
            return unsafe { avx2::ray_sum(pixels, weights, pix) };
        }
        ray_sum(pixels, weights, pix)
    }

    #[cfg(target_arch = "x86_64")]
    fn back_project_simd(&self, sino: &RealGrid, i: usize, out_row: &mut [f64]) {
        use std::arch::x86_64::__m256d;
        let n = self.geometry.image_side;
        let views = self.geometry.n_views();
        let rows: Vec<&[f64]> = (0..views).map(|v| sino.row(v)).collect();
        let taps: Vec<&[Tap]> = (0..views).map(|v| &self.view_taps(v)[i * n..(i + 1) * n]).collect();
        // SAFETY: all-zero bits are a valid __m256d.
        let mut acc: Vec<__m256d> = vec![unsafe { std::mem::zeroed() }; n];
        // SAFETY: `simd` implies AVX2 and FMA; each tap slice has n
        // entries, and every tap has `bin + 3 ≤ bins` (asserted in `new`).
        unsafe { avx2::back_project(out_row, &mut acc, &rows, &taps) };
    }

    #[cfg(not(target_arch = "x86_64"))]
    fn back_project_simd(&self, _: &RealGrid, _: usize, _: &mut [f64]) {
        unreachable!("simd is never enabled off x86-64")
    }

    fn view_taps(&self, v: usize) -> &[Tap] {
        let np = self.geometry.image_side * self.geometry.image_side;
        &self.taps[v * np..(v + 1) * np]
    }
}

impl LinearOperator<f64> for RadonOperator {
    fn domain_shape(&self) -> (usize, usize) {
        (self.geometry.image_side, self.geometry.image_side)
    }

    fn range_shape(&self) -> (usize, usize) {
        self.geometry.sinogram_shape()
    }

    fn apply(&self, img: &RealGrid) -> Result<RealGrid> {
        img.ensure_shape(self.domain_shape(), "radon_forward")?;
        let (views, bins) = self.range_shape();
        let mut sino = RealGrid::zeros(views, bins);
        let pix = img.data();
        exec::for_each_chunk_mut(sino.data_mut(), bins, |v, row| {
            let offsets = &self.ray_offsets[v * bins..=(v + 1) * bins];
            for (k, o) in row.iter_mut().enumerate() {
                let range = offsets[k]..offsets[k + 1];
                let (p, w) = (&self.ray_pixels[range.clone()], &self.ray_weights[range]);
                *o = self.ray_sum(p, w, pix);
            }
        });
        Ok(sino)
    }

    fn adjoint(&self, sino: &RealGrid) -> Result<RealGrid> {
        sino.ensure_shape(self.range_shape(), "radon_adjoint")?;
        let n = self.geometry.image_side;
        let (views, _) = self.range_shape();
        let mut img = RealGrid::zeros(n, n);
        exec::for_each_chunk_mut(img.data_mut(), n, |i, out_row| {
            if self.simd {
                self.back_project_simd(sino, i, out_row);
                return;
            }
            for v in 0..views {
                let row = sino.row(v);
                let taps = &self.view_taps(v)[i * n..(i + 1) * n];
                for (o, tap) in out_row.iter_mut().zip(taps) {
                    *o += gather(row, tap);
                }
            }
        });
        Ok(img)
    }

    fn name(&self) -> String {
        format!(
            "radon[{} views, {} bins, {}px]",
            self.geometry.n_views(),
            self.geometry.detector_bins,
            self.geometry.image_side
        )
    }
}

/// Sinogram of `img` under `geo`.
pub fn radon_forward(img: &RealGrid, geo: &RadonGeometry) -> Result<RealGrid> {
    RadonOperator::new(geo.clone()).apply(img)
}

/// Exact transpose of [`radon_forward`].
pub fn radon_adjoint(sino: &RealGrid, geo: &RadonGeometry) -> Result<RealGrid> {
    RadonOperator::new(geo.clone()).adjoint(sino)
}
