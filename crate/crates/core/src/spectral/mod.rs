//! Spectral homogenization: fill the valleys of a structured residual's
//! power spectrum with phase-randomized complementary noise so the total
//! perturbation seen by the denoiser is approximately white at level σ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{forward_dft, inverse_dft, FrequencyMap, Grid, RealGrid, Sample, SeededRng};

/// Largest imaginary magnitude tolerated in the synthesized field.
pub const REALNESS_TOL: f64 = 1e-9;

/// Separable, truncated Gaussian on a `w×w` window with std `w/4`,
/// normalized to unit sum.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingKernel {
    window: usize,
    taps: Vec<f64>,
}

impl SmoothingKernel {
    pub fn gaussian(window: usize) -> Result<Self> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "smoothing window must be odd and positive, got {window}"
            )));
        }
        let std = window as f64 / 4.0;
        let half = (window / 2) as i64;
        let raw: Vec<f64> = (-half..=half)
            .map(|d| (-(d * d) as f64 / (2.0 * std * std)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        Ok(Self {
            window,
            taps: raw.into_iter().map(|v| v / s).collect(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// 1D taps for offsets `−w/2 ..= w/2`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Weight of the 2D kernel at offset `(di, dj)`.
    pub fn weight(&self, di: i64, dj: i64) -> f64 {
        let h = (self.window / 2) as i64;
        if di.abs() > h || dj.abs() > h {
            return 0.0;
        }
        self.taps[(di + h) as usize] * self.taps[(dj + h) as usize]
    }

    /// Circular convolution of `g` with the kernel.
    pub fn smooth_circular(&self, g: &RealGrid) -> RealGrid {
        let (h, w) = g.shape();
        let half = (self.window / 2) as i64;
        let src = g.data();
        let mut rows = vec![0.0; h * w];
        exec::for_each_chunk_mut(&mut rows, w, |i, row| {
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (t, &k) in self.taps.iter().enumerate() {
                    let jj = (j as i64 + t as i64 - half).rem_euclid(w as i64) as usize;
                    acc += k * src[i * w + jj];
                }
                *o = acc;
            }
        });
        let mut out = vec![0.0; h * w];
        exec::for_each_chunk_mut(&mut out, w, |i, row| {
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (t, &k) in self.taps.iter().enumerate() {
                    let ii = (i as i64 + t as i64 - half).rem_euclid(h as i64) as usize;
                    acc += k * rows[ii * w + j];
                }
                *o = acc;
            }
        });
        RealGrid::from_raw(h, w, out)
    }
}

impl Default for SmoothingKernel {
    fn default() -> Self {
        Self::gaussian(7).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShConfig {
    /// Smoothing window (odd).
    pub window: usize,
    /// Deficit floor ε; 0 clips the deficit at zero.
    pub epsilon: f64,
}

impl Default for ShConfig {
    fn default() -> Self {
        Self {
            window: 7,
            epsilon: 0.0,
        }
    }
}

impl ShConfig {
    pub fn validate(&self) -> Result<()> {
        SmoothingKernel::gaussian(self.window)?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!(
                "deficit floor must be nonnegative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<SmoothingKernel> {
        SmoothingKernel::gaussian(self.window)
    }
}

/// Diagnostics of one homogenization call on one real channel.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub psd: FrequencyMap,
    pub deficit: FrequencyMap,
    /// `‖ξ‖²`; equals `Σ ΔS / HW` by Parseval.
    pub injected_energy: f64,
    /// Coefficient of variation of `Ŝ_r`.
    pub flatness_before: f64,
    /// Coefficient of variation of the smoothed periodogram of `r + ξ`.
    pub flatness_after: f64,
    /// `max Ŝ_r / min Ŝ_r` (infinite when some bin is empty).
    pub peak_to_floor: f64,
}

/// `r = v − z_prev`.
pub fn estimate_residual<T: Sample>(v: &Grid<T>, z_prev: &Grid<T>) -> Result<Grid<T>> {
    z_prev.ensure_shape(v.shape(), "estimate_residual")?;
    v.sub(z_prev)
}

/// `|F(r)|²` under the unnormalized forward DFT.
pub fn periodogram(r: &RealGrid) -> Result<RealGrid> {
    Ok(forward_dft(r)?.map(|c: Complex64| c.norm_sqr()))
}

/// Smoothed periodogram `Ŝ_r = |F(r)|² ⊛ K`.
pub fn estimate_psd(r: &RealGrid, kernel: &SmoothingKernel) -> Result<FrequencyMap> {
    Ok(FrequencyMap::from_nonneg(kernel.smooth_circular(&periodogram(r)?)))
}

/// `ΔS = max(ε, σ²HW − Ŝ_r)` per bin.
pub fn spectral_deficit(psd: &FrequencyMap, sigma: f64, epsilon: f64) -> Result<FrequencyMap> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let (h, w) = psd.shape();
    let target = sigma * sigma * (h * w) as f64;
    FrequencyMap::new(psd.grid().map(|s| epsilon.max(target - s)))
}

/// Real noise with expected per-bin power `deficit`: the amplitude
/// `√ΔS` is given the phase of a fresh white-noise draw, which keeps the
/// spectrum Hermitian.
pub fn synthesize_complementary_noise(deficit: &FrequencyMap, rng: &mut SeededRng) -> Result<RealGrid> {
    let (h, w) = deficit.shape();
    let n = rng.white_gaussian(h, w, 1.0)?;
    let spec = forward_dft(&n)?;
    let shaped = spec.zip_map(deficit.grid(), |c: Complex64, d: f64| {
        let m = c.norm();
        let phase = if m < 1e-300 { Complex64::new(1.0, 0.0) } else { c / m };
        phase * d.sqrt()
    })?;
    let xi = inverse_dft(&shaped)?;
    let imag = xi.data().iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag >= REALNESS_TOL {
        return Err(Error::invalid(format!(
            "complementary noise is not real (max imaginary part {imag:e}); deficit is not Hermitian"
        )));
    }
    Ok(xi.re())
}

fn homogenize_channel(
    v: &RealGrid,
    r: &RealGrid,
    sigma: f64,
    cfg: &ShConfig,
    kernel: &SmoothingKernel,
    rng: &mut SeededRng,
) -> Result<(RealGrid, SpectralReport)> {
    let psd = estimate_psd(r, kernel)?;
    let deficit = spectral_deficit(&psd, sigma, cfg.epsilon)?;
    let xi = synthesize_complementary_noise(&deficit, rng)?;
    let after = estimate_psd(&r.add(&xi)?, kernel)?;
    let floor = psd.floor();
    let report = SpectralReport {
        injected_energy: xi.norm_sqr(),
        flatness_before: psd.coefficient_of_variation(),
        flatness_after: after.coefficient_of_variation(),
        peak_to_floor: if floor > 0.0 { psd.peak() / floor } else { f64::INFINITY },
        psd,
        deficit,
    };
    Ok((v.add(&xi)?, report))
}

/// `ṽ = v + ξ` where `ξ` fills the spectral deficit of `r = v − z_prev`.
/// Complex grids are processed channel by channel, each with its own draw.
pub fn homogenize<T: Sample>(
    v: &Grid<T>,
    z_prev: &Grid<T>,
    sigma: f64,
    cfg: &ShConfig,
    rng: &mut SeededRng,
) -> Result<(Grid<T>, Vec<SpectralReport>)> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let r = estimate_residual(v, z_prev)?;
    let mut out = Vec::with_capacity(T::CHANNELS);
    let mut reports = Vec::with_capacity(T::CHANNELS);
    for (vc, rc) in v.channels().iter().zip(r.channels().iter()) {
        let (o, rep) = homogenize_channel(vc, rc, sigma, cfg, &kernel, rng)?;
        out.push(o);
        reports.push(rep);
    }
    Ok((Grid::from_channels(&out)?, reports))
}

/// Ablation comparator: `v + σ·n` with white `n` on every channel.
pub fn naive_inject<T: Sample>(v: &Grid<T>, sigma: f64, rng: &mut SeededRng) -> Result<Grid<T>> {
    let (h, w) = v.shape();
    let noise = (0..T::CHANNELS)
        .map(|_| rng.white_gaussian(h, w, sigma))
        .collect::<Result<Vec<_>>>()?;
    v.add(&Grid::from_channels(&noise)?)
}

/// Peak smoothed PSD of a true residual and of an estimation error, for
/// checking that structured artifacts dominate the spectrum.
pub fn dominance_report(r_true: &RealGrid, eps_est: &RealGrid, kernel: &SmoothingKernel) -> Result<(f64, f64)> {
    eps_est.ensure_shape(r_true.shape(), "dominance_report")?;
    Ok((
        estimate_psd(r_true, kernel)?.peak(),
        estimate_psd(eps_est, kernel)?.peak(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn direct_circular(g: &RealGrid, k: &SmoothingKernel) -> RealGrid {
        let (h, w) = g.shape();
        let half = (k.window() / 2) as i64;
        RealGrid::from_fn(h, w, |i, j| {
            let mut acc = 0.0;
            for di in -half..=half {
                for dj in -half..=half {
                    let ii = (i as i64 - di).rem_euclid(h as i64) as usize;
                    let jj = (j as i64 - dj).rem_euclid(w as i64) as usize;
                    acc += k.weight(di, dj) * g.get(ii, jj);
                }
            }
            acc
        })
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for w in [1, 3, 7, 11] {
            let k = SmoothingKernel::gaussian(w).unwrap();
            let total: f64 = k.taps().iter().sum::<f64>().powi(2);
            assert!((total - 1.0).abs() < 1e-12);
            assert!(k.taps().iter().all(|&t| t >= 0.0));
            let t = k.taps();
            assert!((0..w).all(|i| t[i] == t[w - 1 - i]));
        }
        assert!(SmoothingKernel::gaussian(4).is_err());
        assert!(SmoothingKernel::gaussian(0).is_err());
    }

    #[test]
    fn separable_smoothing_matches_direct_2d_sum() {
        let g = SeededRng::new(1).white_gaussian(9, 12, 1.0).unwrap();
        let k = SmoothingKernel::default();
        let a = k.smooth_circular(&g);
        let b = direct_circular(&g, &k);
        assert!(a.distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn residual_examples() {
        let mut rng = SeededRng::new(2);
        let v = rng.white_gaussian(6, 6, 1.0).unwrap();
        let z = rng.white_gaussian(6, 6, 1.0).unwrap();
        assert_eq!(estimate_residual(&v, &v).unwrap().max_abs(), 0.0);
        assert_eq!(estimate_residual(&v, &RealGrid::zeros(6, 6)).unwrap(), v);
        let c = 3.5;
        let shifted = estimate_residual(&v.map(|x| x + c), &z.map(|x| x + c)).unwrap();
        assert!(shifted.distance(&estimate_residual(&v, &z).unwrap()).unwrap() < 1e-12);
        assert!(estimate_residual(&v, &RealGrid::zeros(5, 6)).is_err());
    }

    #[test]
    fn zero_residual_zero_psd() {
        let psd = estimate_psd(&RealGrid::zeros(8, 8), &SmoothingKernel::default()).unwrap();
        assert_eq!(psd.total(), 0.0);
    }

    #[test]
    fn smoothing_preserves_total_energy() {
        let r = SeededRng::new(3).white_gaussian(32, 24, 1.0).unwrap();
        let raw = periodogram(&r).unwrap().sum();
        let smooth = estimate_psd(&r, &SmoothingKernel::default()).unwrap().total();
        assert!((raw - smooth).abs() < 1e-10 * raw);
        // Parseval with the unnormalized forward transform
        assert!((raw - 32.0 * 24.0 * r.norm_sqr()).abs() < 1e-9 * raw);
    }

    #[test]
    fn sinusoid_energy_stays_near_its_bins() {
        // cos(2π(3i/64 + 5j/64)) puts all its energy on (3,5) and (61,59);
        // the 7×7 kernel keeps it inside the two 7×7 neighbourhoods.
        let (h, w) = (64, 64);
        let r = RealGrid::from_fn(h, w, |i, j| {
            (2.0 * PI * (3.0 * i as f64 / 64.0 + 5.0 * j as f64 / 64.0)).cos()
        });
        let psd = estimate_psd(&r, &SmoothingKernel::default()).unwrap();
        let near = |i: usize, j: usize, ci: usize, cj: usize| {
            let di = (i as i64 - ci as i64)
                .rem_euclid(64)
                .min((ci as i64 - i as i64).rem_euclid(64));
            let dj = (j as i64 - cj as i64)
                .rem_euclid(64)
                .min((cj as i64 - j as i64).rem_euclid(64));
            di <= 3 && dj <= 3
        };
        let mut inside = 0.0;
        for i in 0..h {
            for j in 0..w {
                if near(i, j, 3, 5) || near(i, j, 61, 59) {
                    inside += psd.grid().get(i, j);
                }
            }
        }
        assert!(inside >= 0.99 * psd.total(), "{inside} of {}", psd.total());
    }

    #[test]
    fn deficit_examples() {
        let zero = FrequencyMap::new(RealGrid::zeros(4, 4)).unwrap();
        let d = spectral_deficit(&zero, 1.0, 0.0).unwrap();
        assert!(d.grid().data().iter().all(|&v| v == 16.0));

        let big = FrequencyMap::new(RealGrid::filled(4, 4, 100.0)).unwrap();
        let d = spectral_deficit(&big, 1.0, 0.25).unwrap();
        assert!(d.grid().data().iter().all(|&v| v == 0.25));

        let mut one = RealGrid::zeros(4, 4);
        one.set(1, 2, 20.0);
        let d = spectral_deficit(&FrequencyMap::new(one).unwrap(), 1.0, 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (1, 2) { 0.0 } else { 16.0 };
                assert_eq!(d.grid().get(i, j), expect);
            }
        }
        assert!(spectral_deficit(&zero, -1.0, 0.0).is_err());
        assert!(spectral_deficit(&zero, 1.0, -1.0).is_err());
    }

    #[test]
    fn zero_deficit_gives_zero_noise() {
        let d = FrequencyMap::new(RealGrid::zeros(8, 6)).unwrap();
        let xi = synthesize_complementary_noise(&d, &mut SeededRng::new(4)).unwrap();
        assert_eq!(xi.max_abs(), 0.0);
    }

    #[test]
    fn synthesis_is_deterministic_and_parseval_exact() {
        let r = SeededRng::new(5).white_gaussian(16, 16, 0.3).unwrap();
        let psd = estimate_psd(&r, &SmoothingKernel::default()).unwrap();
        let d = spectral_deficit(&psd, 0.5, 0.0).unwrap();
        let a = synthesize_complementary_noise(&d, &mut SeededRng::new(9)).unwrap();
        let b = synthesize_complementary_noise(&d, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a, b);
        let expect = d.total() / 256.0;
        assert!((a.norm_sqr() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn flat_deficit_gives_white_noise_of_matching_variance() {
        // 200 seeds × 32² pixels; per-pixel variance D/HW.
        let (h, w) = (32, 32);
        let level = 2048.0;
        let d = FrequencyMap::new(RealGrid::filled(h, w, level)).unwrap();
        let seeds: Vec<u64> = (0..200).collect();
        let stats = exec::map_slice(&seeds, |&s| {
            let xi = synthesize_complementary_noise(&d, &mut SeededRng::new(s)).unwrap();
            (xi.mean(), xi.norm_sqr() / (h * w) as f64)
        });
        let var = stats.iter().map(|s| s.1).sum::<f64>() / seeds.len() as f64;
        let target = level / (h * w) as f64;
        assert!((var / target - 1.0).abs() < 0.1, "variance {var} vs {target}");
        // mean of each field: DC amplitude √D with a random sign, so the
        // pixel mean is ±√D/HW; 3·std/√HW = 3√(D/HW)/√HW bounds it.
        let bound = 3.0 * target.sqrt() / ((h * w) as f64).sqrt();
        assert!(stats.iter().all(|s| s.0.abs() <= bound + 1e-12));
    }

    #[test]
    fn homogenize_trivial_case() {
        let v = SeededRng::new(6).white_gaussian(8, 8, 1.0).unwrap();
        let (out, reports) = homogenize(&v, &v, 0.0, &ShConfig::default(), &mut SeededRng::new(1)).unwrap();
        assert_eq!(out, v);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].injected_energy, 0.0);
    }

    #[test]
    fn homogenize_never_removes_energy_in_saturated_bins() {
        // A strong sinusoid saturates its bins: no energy goes there.
        let r = RealGrid::from_fn(32, 32, |i, _| 3.0 * (2.0 * PI * 4.0 * i as f64 / 32.0).cos());
        let z = RealGrid::zeros(32, 32);
        let (_, reports) = homogenize(&r, &z, 0.1, &ShConfig::default(), &mut SeededRng::new(2)).unwrap();
        let rep = &reports[0];
        let target = 0.01 * 1024.0;
        for (s, d) in rep.psd.grid().data().iter().zip(rep.deficit.grid().data()) {
            if *s >= target {
                assert_eq!(*d, 0.0);
            }
            assert!(*d <= target + 1e-12);
        }
        assert!((rep.injected_energy - rep.deficit.total() / 1024.0).abs() < 1e-10 * rep.deficit.total().max(1.0));
    }

    #[test]
    fn complex_channels_are_homogenized_independently() {
        let mut rng = SeededRng::new(7);
        let v = rng.complex_gaussian(8, 8, 0.1).unwrap();
        let z = Grid::zeros(8, 8);
        let (out, reports) = homogenize(&v, &z, 0.5, &ShConfig::default(), &mut SeededRng::new(3)).unwrap();
        assert_eq!(reports.len(), 2);
        let mut again = SeededRng::new(3);
        let (re, _) = homogenize(&v.re(), &RealGrid::zeros(8, 8), 0.5, &ShConfig::default(), &mut again).unwrap();
        let (im, _) = homogenize(&v.im(), &RealGrid::zeros(8, 8), 0.5, &ShConfig::default(), &mut again).unwrap();
        assert_eq!(out.re(), re);
        assert_eq!(out.im(), im);
    }

    #[test]
    fn naive_injection_examples() {
        let v = SeededRng::new(8).white_gaussian(8, 8, 1.0).unwrap();
        assert_eq!(naive_inject(&v, 0.0, &mut SeededRng::new(1)).unwrap(), v);
        let out = naive_inject(&v, 0.5, &mut SeededRng::new(1)).unwrap();
        assert!(out.distance(&v).unwrap() > 0.0);
    }

    #[test]
    fn dominance_examples() {
        let k = SmoothingKernel::default();
        let z = RealGrid::zeros(32, 32);
        assert_eq!(dominance_report(&z, &z, &k).unwrap(), (0.0, 0.0));
        // vertical streaks vs white noise of equal energy
        let streak = RealGrid::from_fn(32, 32, |_, j| if j % 8 == 0 { 1.0 } else { 0.0 });
        let white = SeededRng::new(1).white_gaussian(32, 32, 1.0).unwrap();
        let white = white.scale((streak.norm_sqr() / white.norm_sqr()).sqrt());
        let (a, b) = dominance_report(&streak, &white, &k).unwrap();
        assert!(a > b);
        let (a, b) = dominance_report(&streak, &streak, &k).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn deficit_is_bounded_and_realness_holds(seed in 0u64..10_000, sigma in 0.0f64..2.0, eps in 0.0f64..1.0) {
            let r = SeededRng::new(seed).white_gaussian(12, 10, 1.0).unwrap();
            let psd = estimate_psd(&r, &SmoothingKernel::default()).unwrap();
            let d = spectral_deficit(&psd, sigma, eps).unwrap();
            let cap = sigma * sigma * 120.0 + eps;
            prop_assert!(d.grid().data().iter().all(|&v| v >= 0.0 && v <= cap + 1e-12));
            prop_assert!(synthesize_complementary_noise(&d, &mut SeededRng::new(seed)).is_ok());
        }
    }
}
