use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// σ evenly spaced in index.
    Linear,
    /// σ evenly spaced in log.
    Geometric,
}

/// Decreasing noise levels `σ_max → σ_min` over `iterations` outer steps,
/// plus the diffusion timestep map `t_k` running linearly from `timesteps`
/// down to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub iterations: usize,
    pub spacing: Spacing,
    pub timesteps: usize,
}

impl NoiseSchedule {
    pub fn new(sigma_max: f64, sigma_min: f64, iterations: usize, spacing: Spacing) -> Result<Self> {
        let s = Self {
            sigma_max,
            sigma_min,
            iterations,
            spacing,
            timesteps: 1000,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("schedule needs at least one iteration"));
        }
        if !(self.sigma_min > 0.0) || !self.sigma_max.is_finite() {
            return Err(Error::invalid("schedule noise levels must be positive and finite"));
        }
        if self.iterations > 1 && !(self.sigma_max > self.sigma_min) {
            return Err(Error::invalid(format!(
                "sigma_max ({}) must exceed sigma_min ({}) for a decreasing schedule",
                self.sigma_max, self.sigma_min
            )));
        }
        if self.timesteps == 0 {
            return Err(Error::invalid("timesteps must be at least 1"));
        }
        Ok(())
    }

    pub fn with_iterations(self, iterations: usize) -> Self {
        Self { iterations, ..self }
    }

    fn fraction(&self, k: usize) -> f64 {
        if self.iterations == 1 {
            1.0
        } else {
            k as f64 / (self.iterations - 1) as f64
        }
    }

    /// σ at outer iteration `k`.
    pub fn sigma(&self, k: usize) -> Result<f64> {
        if k >= self.iterations {
            return Err(Error::invalid(format!(
                "iteration {k} outside schedule of length {}",
                self.iterations
            )));
        }
        if k + 1 == self.iterations {
            return Ok(self.sigma_min);
        }
        let f = self.fraction(k);
        Ok(match self.spacing {
            Spacing::Linear => self.sigma_max + (self.sigma_min - self.sigma_max) * f,
            Spacing::Geometric => self.sigma_max * (self.sigma_min / self.sigma_max).powf(f),
        })
    }

    /// Diffusion timestep for outer iteration `k`.
    pub fn timestep(&self, k: usize) -> Result<usize> {
        if k >= self.iterations {
            return Err(Error::invalid(format!("iteration {k} outside schedule")));
        }
        let t = self.timesteps as f64 - (self.timesteps as f64 - 1.0) * self.fraction(k);
        Ok(t.round().max(1.0) as usize)
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.iterations).map(|k| self.sigma(k).unwrap()).collect()
    }
}

/// σ at step `k`; see [`NoiseSchedule::sigma`].
pub fn schedule_sigma(sched: &NoiseSchedule, k: usize) -> Result<f64> {
    sched.sigma(k)
}
