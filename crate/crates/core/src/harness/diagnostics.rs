//! Self-checks run by the `dot-test`, `certify` and `whiteness` commands.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::fidelity::{prox_data_consistency, CgConfig};
use crate::grid::{RealGrid, SeededRng};
use crate::operators::{
    dot_test, grid_to_vector, make_cartesian_mask, make_limited_angle_geometry, make_sparse_view_geometry,
    DenseOperator, FourierMaskOperator, LinearOperator, RadonOperator,
};
use crate::priors::{tweedie_consistency_check, GaussianPriorDenoiser};
use crate::solver::{certify_fixed_point, Certificate};
use crate::spectral::{estimate_psd, homogenize, naive_inject, ShConfig};

/// One named scalar check against a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value < bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from("check,value,bound,pass\n");
    for c in checks {
        let _ = writeln!(s, "{},{:e},{:e},{}", c.name, c.value, c.bound, c.pass);
    }
    s
}

pub const DOT_TOL: f64 = 1e-10;

/// Adjoint checks on SVCT-20 and LACT-90 at 32×32 and an AF-6 Fourier mask.
pub fn dot_test_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = SeededRng::new(seed);
    let svct = RadonOperator::new(make_sparse_view_geometry(20, 32)?);
    let lact = RadonOperator::new(make_limited_angle_geometry(90, 90.0, 32)?);
    let mri = FourierMaskOperator::new(make_cartesian_mask(32, 32, 6, 4)?);
    Ok(vec![
        Check::below("radon-svct20-32", dot_test(&svct, &mut rng)?, DOT_TOL),
        Check::below("radon-lact90-32", dot_test(&lact, &mut rng)?, DOT_TOL),
        Check::below("fourier-af6-32", dot_test(&mri, &mut rng)?, DOT_TOL),
    ])
}

/// Relative gap between the CG data step (tolerance 1e-10) and a dense
/// Cholesky solve of `(AᵀA + λI)x = Aᵀy + λ(z − u)`, on random `n × n`
/// instances. Returns the worst gap.
pub fn cg_oracle_gap(instances: usize, n: usize, seed: u64) -> Result<f64> {
    let mut rng = SeededRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let op = DenseOperator::random_gaussian(n, n, &mut rng);
        let y = rng.white_gaussian(n, 1, 1.0)?;
        let z = rng.white_gaussian(n, 1, 1.0)?;
        let u = rng.white_gaussian(n, 1, 0.3)?;
        let lambda = 10f64.powf(rng.uniform_range(-2.0, 1.0));
        let cg = CgConfig::new(10 * n, 1e-10, lambda)?;
        let x = grid_to_vector(&prox_data_consistency(&op, &y, &z, &u, &cg)?.x);
        let a = op.matrix();
        let m = a.transpose() * a + DMatrix::identity(n, n) * lambda;
        let rhs: DVector<f64> = a.transpose() * grid_to_vector(&y) + grid_to_vector(&z.sub(&u)?) * lambda;
        let direct = m.cholesky().expect("λ > 0 keeps the system definite").solve(&rhs);
        worst = worst.max((x - &direct).norm() / direct.norm());
    }
    Ok(worst)
}

/// Largest Tweedie deviation of the Gaussian-prior denoiser on random
/// `side × side` inputs over `(τ, σ) ∈ {0.5, 1, 2}²`.
pub fn tweedie_sweep(side: usize, seed: u64) -> Result<f64> {
    let mut rng = SeededRng::new(seed);
    let levels = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    for &tau in &levels {
        for &sigma in &levels {
            let mean = rng.white_gaussian(side, side, 1.0)?;
            let v = rng.white_gaussian(side, side, 2.0)?;
            let d = GaussianPriorDenoiser::new(mean, tau)?;
            worst = worst.max(tweedie_consistency_check(&d, &v, sigma)?);
        }
    }
    Ok(worst)
}

/// Dual-on and dual-off certificates for one random convex instance.
#[derive(Clone, Debug)]
pub struct CertificatePair {
    pub seed: u64,
    pub on: Certificate,
    pub off: Certificate,
}

impl CertificatePair {
    /// `‖x̃ − x*‖ / ‖x_on − x*‖`.
    pub fn bias_ratio(&self) -> f64 {
        self.off.error_to_minimizer / self.on.error_to_minimizer
    }
}

pub const CERTIFY_TOL: f64 = 1e-6;
pub const CERTIFY_MAX_ITERS: usize = 500;
pub const CERTIFY_SIGMA: f64 = 0.5;
pub const CERTIFY_TAU: f64 = 1.0;
pub const CERTIFY_LAMBDA: f64 = 1.0;

/// Random `n × n` Gaussian `A`, data `y = A x + noise` and an unrelated
/// prior mean, certified with and without the dual.
pub fn certify_instance(n: usize, seed: u64) -> Result<CertificatePair> {
    let mut rng = SeededRng::new(seed);
    let op = DenseOperator::random_gaussian(n, n, &mut rng);
    let x_true = rng.white_gaussian(n, 1, 1.0)?;
    let y = op.apply(&x_true)?.add(&rng.white_gaussian(n, 1, 0.1)?)?;
    let mu = rng.white_gaussian(n, 1, 1.0)?;
    let d = GaussianPriorDenoiser::new(mu, CERTIFY_TAU)?;
    let cert = |dual| {
        certify_fixed_point(
            &op,
            &y,
            &d,
            CERTIFY_LAMBDA,
            CERTIFY_SIGMA,
            dual,
            CERTIFY_TOL * 1e-2,
            CERTIFY_MAX_ITERS,
        )
    };
    Ok(CertificatePair {
        seed,
        on: cert(true)?,
        off: cert(false)?,
    })
}

/// Certificates on `instances` seeds starting at `seed`.
pub fn certify_suite(instances: usize, n: usize, seed: u64) -> Result<Vec<CertificatePair>> {
    (0..instances as u64).map(|k| certify_instance(n, seed + k)).collect()
}

/// Fixed-point checks for a batch of certificate pairs.
pub fn certificate_checks(pairs: &[CertificatePair]) -> Vec<Check> {
    let mut out = Vec::new();
    for p in pairs {
        let s = p.seed;
        out.push(Check::at_least(
            format!("seed{s}-dual-on-converged-within-{CERTIFY_MAX_ITERS}"),
            p.on.converged as u8 as f64,
            1.0,
        ));
        out.push(Check::below(format!("seed{s}-consensus"), p.on.consensus, CERTIFY_TOL));
        out.push(Check::below(
            format!("seed{s}-stationarity"),
            p.on.stationarity,
            CERTIFY_TOL,
        ));
        out.push(Check::below(
            format!("seed{s}-dual-balance-relative"),
            p.on.dual_balance / p.on.initial_gradient,
            CERTIFY_TOL,
        ));
        out.push(Check::below(
            format!("seed{s}-dual-on-error"),
            p.on.error_to_minimizer,
            CERTIFY_TOL,
        ));
        out.push(Check::at_least(format!("seed{s}-bias-ratio"), p.bias_ratio(), 10.0));
        out.push(Check::below(
            format!("seed{s}-dual-off-prediction"),
            p.off.error_to_hqs_prediction,
            CERTIFY_TOL,
        ));
    }
    out
}

/// Monte-Carlo setup for the whitening experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitenessConfig {
    pub side: usize,
    pub sigma: f64,
    /// Std of the white residual, as a fraction of σ.
    pub residual_fraction: f64,
    pub trials: usize,
    /// Peak smoothed PSD of the streak residual as a fraction of `σ²HW`.
    pub streak_peak: f64,
    pub sh: ShConfig,
    pub seed: u64,
}

impl Default for WhitenessConfig {
    fn default() -> Self {
        Self {
            side: 64,
            sigma: 1.0,
            residual_fraction: 0.5,
            trials: 100,
            streak_peak: 0.8,
            sh: ShConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WhitenessReport {
    /// Min and max over bins of the trial-averaged smoothed PSD of `r + ξ`,
    /// relative to `σ²HW`, for a white residual.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Coefficient of variation of the trial-averaged effective PSD for a
    /// streak residual after homogenization and after naive injection.
    pub cv_sh: f64,
    pub cv_naive: f64,
}

impl WhitenessReport {
    pub fn flatness_ratio(&self) -> f64 {
        self.cv_sh / self.cv_naive
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("mean-psd-min-ratio", self.min_ratio, 0.9),
            Check::below("mean-psd-max-ratio", self.max_ratio, 1.1 + f64::EPSILON),
            Check::below("cv-sh-over-cv-naive", self.flatness_ratio(), 0.5),
        ]
    }
}

/// Deterministic streak pattern: plane waves at several orientations,
/// mimicking the line spectrum of sparse-view artifacts.
pub fn streak_residual(side: usize) -> RealGrid {
    let waves = [
        (3.0, 0.0),
        (0.0, 5.0),
        (4.0, 4.0),
        (7.0, -2.0),
        (-6.0, 9.0),
        (11.5, 1.5),
    ];
    let n = side as f64;
    RealGrid::from_fn(side, side, |i, j| {
        waves
            .iter()
            .enumerate()
            .map(|(k, &(fi, fj))| (2.0 * PI * (fi * i as f64 + fj * j as f64) / n + k as f64).cos())
            .sum()
    })
}

fn accumulate(acc: &mut RealGrid, g: &RealGrid) -> Result<()> {
    acc.axpy(1.0, g)
}

pub fn whiteness_experiment(cfg: &WhitenessConfig) -> Result<WhitenessReport> {
    let (n, sigma) = (cfg.side, cfg.sigma);
    let kernel = cfg.sh.kernel()?;
    let target = sigma * sigma * (n * n) as f64;
    let zero = RealGrid::zeros(n, n);
    let mut rng = SeededRng::new(cfg.seed);

    let mut white_mean = RealGrid::zeros(n, n);
    for _ in 0..cfg.trials {
        let r = rng.white_gaussian(n, n, cfg.residual_fraction * sigma)?;
        let (v, _) = homogenize(&r, &zero, sigma, &cfg.sh, &mut rng)?;
        accumulate(&mut white_mean, estimate_psd(&v, &kernel)?.grid())?;
    }
    let white_mean = white_mean.scale(1.0 / (cfg.trials as f64 * target));

    let streak = streak_residual(n);
    let peak = estimate_psd(&streak, &kernel)?.peak();
    let streak = streak.scale((cfg.streak_peak * target / peak).sqrt());
    let mut sh_mean = RealGrid::zeros(n, n);
    let mut naive_mean = RealGrid::zeros(n, n);
    for _ in 0..cfg.trials {
        let (v, _) = homogenize(&streak, &zero, sigma, &cfg.sh, &mut rng)?;
        accumulate(&mut sh_mean, estimate_psd(&v, &kernel)?.grid())?;
        let v = naive_inject(&streak, sigma, &mut rng)?;
        accumulate(&mut naive_mean, estimate_psd(&v, &kernel)?.grid())?;
    }

    Ok(WhitenessReport {
        min_ratio: white_mean.data().iter().cloned().fold(f64::INFINITY, f64::min),
        max_ratio: white_mean.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        cv_sh: coefficient_of_variation(&sh_mean),
        cv_naive: coefficient_of_variation(&naive_mean),
    })
}

fn coefficient_of_variation(g: &RealGrid) -> f64 {
    let m = g.mean();
    let var = g.data().iter().map(|v| (v - m).powi(2)).sum::<f64>() / g.len() as f64;
    var.sqrt() / m
}
