use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealGrid, Sample};

use super::Denoiser;

/// How the TV weight follows the requested noise level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvScaling {
    /// weight = γ
    Constant,
    /// weight = γ·σ
    #[default]
    Sigma,
    /// weight = γ·σ², the prox of γ·TV at step σ²
    SigmaSquared,
}

/// Approximate prox of `w·TV` (isotropic, forward differences, Neumann
/// boundary) by projected gradient on the dual, step 1/8.
///
/// The returned iterate is the one with the lowest primal energy seen, so
/// the reported energy sequence never increases.
#[derive(Clone, Debug)]
pub struct TvDenoiser {
    pub weight: f64,
    pub iterations: usize,
    pub scaling: TvScaling,
}

#[derive(Clone, Debug)]
pub struct TvOutcome {
    pub z: RealGrid,
    /// Primal energy of the accepted iterate after every inner step,
    /// starting with `z = v`.
    pub energies: Vec<f64>,
}

impl TvDenoiser {
    pub fn new(weight: f64, iterations: usize, scaling: TvScaling) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::invalid(format!("TV weight must be nonnegative, got {weight}")));
        }
        if iterations == 0 {
            return Err(Error::invalid("TV prox needs at least one inner iteration"));
        }
        Ok(Self {
            weight,
            iterations,
            scaling,
        })
    }

    pub fn effective_weight(&self, sigma: f64) -> f64 {
        match self.scaling {
            TvScaling::Constant => self.weight,
            TvScaling::Sigma => self.weight * sigma,
            TvScaling::SigmaSquared => self.weight * sigma * sigma,
        }
    }
}

fn gradient(z: &RealGrid) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = z.shape();
    let d = z.data();
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if j + 1 < w {
                gx[k] = d[k + 1] - d[k];
            }
            if i + 1 < h {
                gy[k] = d[k + w] - d[k];
            }
        }
    }
    (gx, gy)
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let mut v = 0.0;
            if j + 1 < w {
                v += px[k];
            }
            if j > 0 {
                v -= px[k - 1];
            }
            if i + 1 < h {
                v += py[k];
            }
            if i > 0 {
                v -= py[k - w];
            }
            out[k] = v;
        }
    }
    out
}

/// Isotropic total variation `Σ |∇z|`.
pub fn total_variation(z: &RealGrid) -> f64 {
    let (gx, gy) = gradient(z);
    gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

/// `½‖z − v‖² + w·TV(z)`.
pub fn tv_energy(z: &RealGrid, v: &RealGrid, weight: f64) -> Result<f64> {
    Ok(0.5 * z.distance(v)?.powi(2) + weight * total_variation(z))
}

/// Prox of `weight·TV` at `v` with a fixed number of dual steps.
pub fn tv_prox(v: &RealGrid, weight: f64, iterations: usize) -> Result<TvOutcome> {
    v.ensure_finite("tv_prox input")?;
    let mut energies = vec![tv_energy(v, v, weight)?];
    if weight == 0.0 {
        return Ok(TvOutcome { z: v.clone(), energies });
    }
    let (h, w) = v.shape();
    let n = h * w;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut best = v.clone();
    let mut best_energy = energies[0];
    let step = 1.0 / (8.0 * weight);
    for _ in 0..iterations {
        // z(p) = v + w·div p
        let div = divergence(&px, &py, h, w);
        let z = RealGrid::from_raw(h, w, v.data().iter().zip(&div).map(|(a, d)| a + weight * d).collect());
        let (gx, gy) = gradient(&z);
        for k in 0..n {
            let qx = px[k] + step * gx[k];
            let qy = py[k] + step * gy[k];
            let m = (qx * qx + qy * qy).sqrt().max(1.0);
            px[k] = qx / m;
            py[k] = qy / m;
        }
        let div = divergence(&px, &py, h, w);
        let cand = RealGrid::from_raw(h, w, v.data().iter().zip(&div).map(|(a, d)| a + weight * d).collect());
        let e = tv_energy(&cand, v, weight)?;
        if e <= best_energy {
            best = cand;
            best_energy = e;
        }
        energies.push(best_energy);
    }
    Ok(TvOutcome { z: best, energies })
}

impl<T: Sample> Denoiser<T> for TvDenoiser {
    fn denoise(&self, v: &Grid<T>, sigma: f64, _t: usize) -> Result<Grid<T>> {
        super::check_sigma(sigma)?;
        let w = self.effective_weight(sigma);
        let channels = v
            .channels()
            .iter()
            .map(|c| tv_prox(c, w, self.iterations).map(|o| o.z))
            .collect::<Result<Vec<_>>>()?;
        Grid::from_channels(&channels)
    }

    fn name(&self) -> String {
        format!(
            "tv[weight={}, iters={}, {:?}]",
            self.weight, self.iterations, self.scaling
        )
    }
}
