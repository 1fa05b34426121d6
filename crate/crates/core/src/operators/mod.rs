//! Linear forward models with exact adjoints.

mod dense;
mod fbp;
mod fourier;
mod radon;

use std::marker::PhantomData;

pub use dense::{grid_to_vector, vector_to_grid, DenseOperator};
pub use fbp::{fbp, fbp_windowed, ramp_filter, RampWindow};
pub use fourier::{fourier_mask_apply, make_cartesian_mask, zero_filled, CartesianMask, FourierMaskOperator};
pub use radon::{
    make_limited_angle_geometry, make_sparse_view_geometry, min_detector_bins, radon_adjoint, radon_forward,
    RadonGeometry, RadonOperator, DEFAULT_DETECTOR_BINS,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, Sample, SeededRng};

/// A linear map between grid shapes together with its adjoint.
pub trait LinearOperator<T: Sample>: Send + Sync {
    fn domain_shape(&self) -> (usize, usize);
    fn range_shape(&self) -> (usize, usize);
    fn apply(&self, x: &Grid<T>) -> Result<Grid<T>>;
    fn adjoint(&self, y: &Grid<T>) -> Result<Grid<T>>;

    /// `AᴴA x`.
    fn normal(&self, x: &Grid<T>) -> Result<Grid<T>> {
        self.adjoint(&self.apply(x)?)
    }

    fn name(&self) -> String;
}

impl<T: Sample, O: LinearOperator<T> + ?Sized> LinearOperator<T> for &O {
    fn domain_shape(&self) -> (usize, usize) {
        (**self).domain_shape()
    }
    fn range_shape(&self) -> (usize, usize) {
        (**self).range_shape()
    }
    fn apply(&self, x: &Grid<T>) -> Result<Grid<T>> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: &Grid<T>) -> Result<Grid<T>> {
        (**self).adjoint(y)
    }
    fn normal(&self, x: &Grid<T>) -> Result<Grid<T>> {
        (**self).normal(x)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Identity on a fixed shape.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator<T> {
    shape: (usize, usize),
    _marker: PhantomData<T>,
}

impl<T> IdentityOperator<T> {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            shape: (height, width),
            _marker: PhantomData,
        }
    }
}

impl<T: Sample> LinearOperator<T> for IdentityOperator<T> {
    fn domain_shape(&self) -> (usize, usize) {
        self.shape
    }
    fn range_shape(&self) -> (usize, usize) {
        self.shape
    }
    fn apply(&self, x: &Grid<T>) -> Result<Grid<T>> {
        x.ensure_shape(self.shape, "identity apply")?;
        Ok(x.clone())
    }
    fn adjoint(&self, y: &Grid<T>) -> Result<Grid<T>> {
        y.ensure_shape(self.shape, "identity adjoint")?;
        Ok(y.clone())
    }
    fn name(&self) -> String {
        format!("identity[{}x{}]", self.shape.0, self.shape.1)
    }
}

/// Measurement weighting `W^{1/2} A` for a diagonal precision `W`.
///
/// Solving with this operator and `W^{1/2} y` minimizes `‖Ax − y‖²_W`.
pub struct WeightedOperator<T, O> {
    inner: O,
    sqrt_weights: Grid<f64>,
    _marker: PhantomData<T>,
}

impl<T: Sample, O: LinearOperator<T>> WeightedOperator<T, O> {
    pub fn new(inner: O, weights: Grid<f64>) -> Result<Self> {
        weights.ensure_shape(inner.range_shape(), "measurement weights")?;
        if weights.data().iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("measurement weights must be nonnegative"));
        }
        Ok(Self {
            inner,
            sqrt_weights: weights.map(f64::sqrt),
            _marker: PhantomData,
        })
    }

    /// `W^{1/2} y`.
    pub fn whiten(&self, y: &Grid<T>) -> Result<Grid<T>> {
        y.zip_map(&self.sqrt_weights, |v, w| v * w)
    }
}

impl<T: Sample, O: LinearOperator<T>> LinearOperator<T> for WeightedOperator<T, O> {
    fn domain_shape(&self) -> (usize, usize) {
        self.inner.domain_shape()
    }
    fn range_shape(&self) -> (usize, usize) {
        self.inner.range_shape()
    }
    fn apply(&self, x: &Grid<T>) -> Result<Grid<T>> {
        self.whiten(&self.inner.apply(x)?)
    }
    fn adjoint(&self, y: &Grid<T>) -> Result<Grid<T>> {
        self.inner.adjoint(&self.whiten(y)?)
    }
    fn name(&self) -> String {
        format!("weighted({})", self.inner.name())
    }
}

/// Random draw from the operator's scalar type.
pub trait RandomSample: Sample {
    fn random_grid(rng: &mut SeededRng, shape: (usize, usize)) -> Grid<Self>;
}

impl RandomSample for f64 {
    fn random_grid(rng: &mut SeededRng, shape: (usize, usize)) -> Grid<Self> {
        rng.white_gaussian(shape.0, shape.1, 1.0).expect("valid shape")
    }
}

impl RandomSample for num_complex::Complex64 {
    fn random_grid(rng: &mut SeededRng, shape: (usize, usize)) -> Grid<Self> {
        rng.complex_gaussian(shape.0, shape.1, 1.0).expect("valid shape")
    }
}

/// Normalized adjoint mismatch `|⟨Ax, y⟩ − ⟨x, Aᴴy⟩| / (‖Ax‖·‖y‖ + tiny)`
/// for random `x`, `y`, using the full complex inner product.
pub fn dot_test<T, O>(op: &O, rng: &mut SeededRng) -> Result<f64>
where
    T: RandomSample,
    O: LinearOperator<T> + ?Sized,
{
    let x = T::random_grid(rng, op.domain_shape());
    let y = T::random_grid(rng, op.range_shape());
    let ax = op.apply(&x)?;
    let aty = op.adjoint(&y)?;
    let lhs = ax.dot_complex(&y)?;
    let rhs = x.dot_complex(&aty)?;
    Ok((lhs - rhs).norm() / (ax.norm() * y.norm() + f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn identity_dot_test_is_zero() {
        let op = IdentityOperator::<f64>::new(5, 4);
        assert!(dot_test(&op, &mut SeededRng::new(0)).unwrap() < 1e-15);
        let op = IdentityOperator::<Complex64>::new(5, 4);
        assert!(dot_test(&op, &mut SeededRng::new(0)).unwrap() < 1e-15);
    }

    #[test]
    fn dense_dot_test() {
        let mut rng = SeededRng::new(5);
        let op = DenseOperator::random_gaussian(9, 12, &mut rng);
        assert!(dot_test(&op, &mut rng).unwrap() < 1e-12);
    }

    #[test]
    fn weighted_operator_is_adjoint_consistent() {
        let mut rng = SeededRng::new(6);
        let inner = DenseOperator::random_gaussian(6, 4, &mut rng);
        let w = rng.white_gaussian(6, 1, 1.0).unwrap().map(f64::abs);
        let op = WeightedOperator::new(inner, w).unwrap();
        assert!(dot_test(&op, &mut rng).unwrap() < 1e-12);
    }
}
