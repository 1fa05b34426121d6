use nalgebra::{DMatrix, DVector};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::{RealGrid, SeededRng};

/// Explicit matrix acting on column-shaped grids (`n × 1`). Used for small
/// convex instances where closed-form solutions are available.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::invalid("dense operator must be non-empty"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dense operator has non-finite entries"));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    /// `rows × cols` matrix with i.i.d. `N(0, 1/rows)` entries.
    pub fn random_gaussian(rows: usize, cols: usize, rng: &mut SeededRng) -> Self {
        let s = 1.0 / (rows as f64).sqrt();
        let matrix = DMatrix::from_fn(rows, cols, |_, _| s * rng.standard_normal());
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Normal matrix `AᵀA`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.matrix.transpose() * &self.matrix
    }
}

pub fn grid_to_vector(g: &RealGrid) -> DVector<f64> {
    DVector::from_column_slice(g.data())
}

pub fn vector_to_grid(v: &DVector<f64>) -> RealGrid {
    RealGrid::from_raw(v.len(), 1, v.as_slice().to_vec())
}

impl LinearOperator<f64> for DenseOperator {
    fn domain_shape(&self) -> (usize, usize) {
        (self.matrix.ncols(), 1)
    }

    fn range_shape(&self) -> (usize, usize) {
        (self.matrix.nrows(), 1)
    }

    fn apply(&self, x: &RealGrid) -> Result<RealGrid> {
        x.ensure_shape(self.domain_shape(), "dense apply")?;
        Ok(vector_to_grid(&(&self.matrix * grid_to_vector(x))))
    }

    fn adjoint(&self, y: &RealGrid) -> Result<RealGrid> {
        y.ensure_shape(self.range_shape(), "dense adjoint")?;
        Ok(vector_to_grid(&(self.matrix.tr_mul(&grid_to_vector(y)))))
    }

    fn name(&self) -> String {
        format!("dense[{}x{}]", self.matrix.nrows(), self.matrix.ncols())
    }
}
