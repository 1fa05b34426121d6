//! The outer dual-coupled plug-and-play iteration.

mod certify;
mod trace;
mod variant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{prox_data_consistency, CgConfig};
use crate::grid::{Grid, Sample, SeededRng};
use crate::metrics::psnr;
use crate::operators::LinearOperator;
use crate::priors::{Denoiser, NoiseSchedule};
use crate::spectral::{homogenize, naive_inject, ShConfig};

pub use certify::{certify_fixed_point, hqs_fixed_point, regularized_minimizer, Certificate};
pub use trace::{IterationRecord, IterationTrace, SpectralSummary, SPECTRAL_HEADER, TRACE_HEADER};
pub use variant::{Injection, VariantSpec};

/// State norms above this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// The ADMM triple with the scaled dual `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState<T> {
    pub x: Grid<T>,
    pub z: Grid<T>,
    pub u: Grid<T>,
    pub k: usize,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: NoiseSchedule,
    pub variant: VariantSpec,
    pub cg_iters: usize,
    pub cg_tol: f64,
    /// `λ_t = λ₀ / σ_t²`.
    pub lambda0: f64,
    pub sh: ShConfig,
    /// Peak used for the per-iteration PSNR.
    pub psnr_peak: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.sh.validate()?;
        CgConfig::new(self.cg_iters, self.cg_tol, self.lambda0)?;
        if !(self.psnr_peak > 0.0) {
            return Err(Error::invalid("PSNR peak must be positive"));
        }
        Ok(())
    }

    pub fn lambda_at(&self, sigma: f64) -> f64 {
        self.lambda0 / (sigma * sigma)
    }
}

#[derive(Clone, Debug)]
pub struct SolverOutput<T> {
    /// `z` after the last iteration.
    pub recon: Grid<T>,
    pub state: SolverState<T>,
    pub trace: IterationTrace,
}

/// White Gaussian grid of std `sigma` on every channel.
pub(crate) fn white_like<T: Sample>(shape: (usize, usize), sigma: f64, rng: &mut SeededRng) -> Result<Grid<T>> {
    let ch = (0..T::CHANNELS)
        .map(|_| rng.white_gaussian(shape.0, shape.1, sigma))
        .collect::<Result<Vec<_>>>()?;
    Grid::from_channels(&ch)
}

/// `x⁰ = Aᴴy`, `z⁰ ~ N(0, σ_init²I)`, `u⁰ = 0`.
pub fn initialize<T, O>(op: &O, y: &Grid<T>, sigma_init: f64, rng: &mut SeededRng) -> Result<SolverState<T>>
where
    T: Sample,
    O: LinearOperator<T> + ?Sized,
{
    let (h, w) = op.domain_shape();
    Ok(SolverState {
        x: op.adjoint(y)?,
        z: white_like((h, w), sigma_init, rng)?,
        u: Grid::zeros(h, w),
        k: 0,
        sigma: sigma_init,
    })
}

/// `u ← u + (x − z)`.
pub fn dual_update<T: Sample>(mut state: SolverState<T>) -> Result<SolverState<T>> {
    let d = state.x.sub(&state.z)?;
    state.u.axpy(1.0, &d)?;
    Ok(state)
}

pub fn run<T, O>(
    op: &O,
    y: &Grid<T>,
    denoiser: &dyn Denoiser<T>,
    cfg: &SolverConfig,
    rng: &mut SeededRng,
    ground_truth: Option<&Grid<T>>,
) -> Result<SolverOutput<T>>
where
    T: Sample,
    O: LinearOperator<T> + ?Sized,
{
    run_observed(op, y, denoiser, cfg, rng, ground_truth, &mut |_| {})
}

/// [`run`], calling `observer` with the state at the end of every iteration.
#[allow(clippy::too_many_arguments)]
pub fn run_observed<T, O>(
    op: &O,
    y: &Grid<T>,
    denoiser: &dyn Denoiser<T>,
    cfg: &SolverConfig,
    rng: &mut SeededRng,
    ground_truth: Option<&Grid<T>>,
    observer: &mut dyn FnMut(&SolverState<T>),
) -> Result<SolverOutput<T>>
where
    T: Sample,
    O: LinearOperator<T> + ?Sized,
{
    cfg.validate()?;
    y.ensure_shape(op.range_shape(), "solver measurements")?;
    y.ensure_finite("solver measurements")?;
    if let Some(gt) = ground_truth {
        gt.ensure_shape(op.domain_shape(), "ground truth")?;
    }
    let sched = &cfg.schedule;
    let mut state = initialize(op, y, sched.sigma_max, rng)?;
    let mut trace = IterationTrace::default();

    for k in 0..sched.iterations {
        let mut step = || -> Result<IterationRecord> {
            let sigma = sched.sigma(k)?;
            let t = sched.timestep(k)?;
            let lambda = cfg.lambda_at(sigma);
            state.k = k;
            state.sigma = sigma;

            let cg = CgConfig::new(cfg.cg_iters, cfg.cg_tol, lambda)?;
            let out = prox_data_consistency(op, y, &state.z, &state.u, &cg)?;
            state.x = out.x;

            let v = if cfg.variant.dual_coupling {
                state.x.add(&state.u)?
            } else {
                state.x.clone()
            };
            let mut spectral = None;
            let v_tilde = match cfg.variant.injection {
                Injection::Sh => {
                    let (vt, reports) = homogenize(&v, &state.z, sigma, &cfg.sh, rng)?;
                    spectral = Some(SpectralSummary::from_reports(&reports));
                    vt
                }
                Injection::Naive => naive_inject(&v, sigma, rng)?,
                Injection::None => v,
            };
            state.z = denoiser.denoise(&v_tilde, sigma, t)?;
            state.z.ensure_shape(op.domain_shape(), "denoiser output")?;
            if cfg.variant.dual_coupling {
                let d = state.x.sub(&state.z)?;
                state.u.axpy(1.0, &d)?;
            }

            Ok(IterationRecord {
                k,
                sigma,
                timestep: t,
                lambda,
                data_residual: op.apply(&state.x)?.distance(y)?,
                consensus: state.x.distance(&state.z)?,
                dual_norm: state.u.norm(),
                psnr: ground_truth.map(|gt| psnr(&state.z, gt, cfg.psnr_peak)).transpose()?,
                cg_iterations: out.iterations,
                cg_converged: out.converged,
                cg_residuals: out.residual_history,
                spectral,
            })
        };
        let record = step().map_err(|e| e.at(k))?;
        trace.records.push(record);

        let norm = [state.x.norm(), state.z.norm(), state.u.norm()]
            .into_iter()
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged {
                iteration: k,
                norm,
                trace: Box::new(trace),
            });
        }
        observer(&state);
    }

    Ok(SolverOutput {
        recon: state.z.clone(),
        state,
        trace,
    })
}
