//! Denoisers standing in for `D_σ`, and the noise schedule that drives them.

mod external;
mod gaussian;
mod schedule;
mod tv;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Sample};

pub(crate) use external::read_grid_as;
pub use external::ExternalDenoiser;
pub use gaussian::{tweedie_consistency_check, GaussianPriorDenoiser};
pub use schedule::{schedule_sigma, NoiseSchedule, Spacing};
pub use tv::{total_variation, tv_energy, tv_prox, TvDenoiser, TvOutcome, TvScaling};

/// `D_σ`: estimate a clean grid from `v` assumed to carry noise of level
/// `sigma`. `t` is the diffusion timestep the level corresponds to.
pub trait Denoiser<T: Sample>: Send + Sync {
    fn denoise(&self, v: &Grid<T>, sigma: f64, t: usize) -> Result<Grid<T>>;
    fn name(&self) -> String;
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise level must be finite and nonnegative, got {sigma}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityDenoiser;

impl<T: Sample> Denoiser<T> for IdentityDenoiser {
    fn denoise(&self, v: &Grid<T>, sigma: f64, _t: usize) -> Result<Grid<T>> {
        check_sigma(sigma)?;
        Ok(v.clone())
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// Where a Gaussian prior takes its mean from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorMean {
    Constant(f64),
    File(PathBuf),
}

/// Config-level description of a denoiser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DenoiserSpec {
    GaussianPrior {
        mean: PriorMean,
        tau: f64,
    },
    TvProx {
        weight: f64,
        #[serde(default = "default_tv_iterations")]
        iterations: usize,
        #[serde(default)]
        scaling: TvScaling,
    },
    Identity {},
    External {
        program: PathBuf,
        #[serde(default)]
        args: Vec<String>,
    },
}

fn default_tv_iterations() -> usize {
    50
}

impl DenoiserSpec {
    pub fn build<T: Sample>(&self, shape: (usize, usize)) -> Result<Box<dyn Denoiser<T>>> {
        Ok(match self {
            DenoiserSpec::GaussianPrior { mean, tau } => {
                let mean = match mean {
                    PriorMean::Constant(c) => Grid::filled(shape.0, shape.1, T::from_channels(&[*c, 0.0])),
                    PriorMean::File(path) => {
                        let g: Grid<T> = read_grid_as(path)?;
                        g.ensure_shape(shape, "gaussian prior mean file")?;
                        g
                    }
                };
                Box::new(GaussianPriorDenoiser::new(mean, *tau)?)
            }
            DenoiserSpec::TvProx {
                weight,
                iterations,
                scaling,
            } => Box::new(TvDenoiser::new(*weight, *iterations, *scaling)?),
            DenoiserSpec::Identity {} => Box::new(IdentityDenoiser),
            DenoiserSpec::External { program, args } => Box::new(ExternalDenoiser::new(program.clone(), args.clone())),
        })
    }
}
