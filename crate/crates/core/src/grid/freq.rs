use super::RealGrid;
use crate::error::{Error, Result};

/// Nonnegative per-frequency-bin values (PSDs, deficits).
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyMap(RealGrid);

impl FrequencyMap {
    pub fn new(values: RealGrid) -> Result<Self> {
        if let Some(v) = values.data().iter().find(|v| **v < 0.0) {
            return Err(Error::invalid(format!(
                "frequency map entries must be nonnegative, found {v}"
            )));
        }
        Ok(Self(values))
    }

    /// Wrap values that are nonnegative by construction, clamping rounding noise.
    pub(crate) fn from_nonneg(values: RealGrid) -> Self {
        Self(values.map(|v| v.max(0.0)))
    }

    pub fn grid(&self) -> &RealGrid {
        &self.0
    }

    pub fn into_grid(self) -> RealGrid {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }

    pub fn peak(&self) -> f64 {
        self.0.max_value()
    }

    pub fn floor(&self) -> f64 {
        self.0.min_value()
    }

    /// Coefficient of variation across bins (0 for a perfectly flat map).
    pub fn coefficient_of_variation(&self) -> f64 {
        let mean = self.0.mean();
        if mean <= 0.0 {
            return 0.0;
        }
        let n = self.0.len() as f64;
        let var = self.0.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }
}
