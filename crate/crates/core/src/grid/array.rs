use num_complex::Complex64;

use super::Sample;
use crate::error::{Error, Result};
use crate::exec;

/// Row-major `height × width` array of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub type RealGrid = Grid<f64>;
pub type ComplexGrid = Grid<Complex64>;

impl<T: Sample> Grid<T> {
    /// Wrap `data`, checking the length and that every sample is finite.
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::invalid(format!(
                "grid data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {pos}")));
        }
        Ok(Self { height, width, data })
    }

    /// Internal constructor for data already known to be well-formed.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::from_raw(height, width, vec![T::zero(); height * width])
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self::from_raw(height, width, vec![value; height * width])
    }

    /// Build from `f(row, col)`.
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self::from_raw(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn ensure_shape(&self, expected: (usize, usize), context: &'static str) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::ShapeMismatch {
                context,
                expected,
                actual: self.shape(),
            });
        }
        Ok(())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("{context}: non-finite samples")))
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U + Sync + Send) -> Grid<U> {
        let mut out = vec![U::zero(); self.len()];
        let src = &self.data;
        exec::for_each_chunk_mut(&mut out, exec::REDUCE_CHUNK, |c, chunk| {
            let base = c * exec::REDUCE_CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = f(src[base + k]);
            }
        });
        Grid::from_raw(self.height, self.width, out)
    }

    /// Elementwise combination of two equally shaped grids.
    pub fn zip_map<U: Sample, V: Sample>(
        &self,
        other: &Grid<U>,
        f: impl Fn(T, U) -> V + Sync + Send,
    ) -> Result<Grid<V>> {
        other.ensure_shape(self.shape(), "zip_map")?;
        let mut out = vec![V::zero(); self.len()];
        let (a, b) = (&self.data, &other.data);
        exec::for_each_chunk_mut(&mut out, exec::REDUCE_CHUNK, |c, chunk| {
            let base = c * exec::REDUCE_CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = f(a[base + k], b[base + k]);
            }
        });
        Ok(Grid::from_raw(self.height, self.width, out))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a * s)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        other.ensure_shape(self.shape(), "axpy")?;
        let src = &other.data;
        exec::for_each_chunk_mut(&mut self.data, exec::REDUCE_CHUNK, |c, chunk| {
            let base = c * exec::REDUCE_CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o += src[base + k] * alpha;
            }
        });
        Ok(())
    }

    /// Real inner product `Re Σ conj(a)·b`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        other.ensure_shape(self.shape(), "dot")?;
        let (a, b) = (&self.data, &other.data);
        Ok(exec::sum_indexed(self.len(), |i| a[i].re_dot(b[i])))
    }

    /// Full complex inner product `Σ conj(a)·b`.
    pub fn dot_complex(&self, other: &Self) -> Result<Complex64> {
        other.ensure_shape(self.shape(), "dot_complex")?;
        let (a, b) = (&self.data, &other.data);
        let re = exec::sum_indexed(self.len(), |i| a[i].conj_dot(b[i]).re);
        let im = exec::sum_indexed(self.len(), |i| a[i].conj_dot(b[i]).im);
        Ok(Complex64::new(re, im))
    }

    pub fn norm_sqr(&self) -> f64 {
        let a = &self.data;
        exec::sum_indexed(self.len(), |i| a[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        other.ensure_shape(self.shape(), "distance")?;
        let (a, b) = (&self.data, &other.data);
        Ok(exec::sum_indexed(self.len(), |i| (a[i] - b[i]).norm_sqr()).sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    /// Real channel `c` as its own grid.
    pub fn channel(&self, c: usize) -> RealGrid {
        self.map(|v| v.channel(c))
    }

    pub fn channels(&self) -> Vec<RealGrid> {
        (0..T::CHANNELS).map(|c| self.channel(c)).collect()
    }

    /// Inverse of [`Grid::channels`].
    pub fn from_channels(channels: &[RealGrid]) -> Result<Self> {
        if channels.len() != T::CHANNELS {
            return Err(Error::invalid(format!(
                "expected {} channels, got {}",
                T::CHANNELS,
                channels.len()
            )));
        }
        let shape = channels[0].shape();
        for ch in channels {
            ch.ensure_shape(shape, "from_channels")?;
        }
        let n = shape.0 * shape.1;
        let data = (0..n)
            .map(|i| {
                let mut buf = [0.0; 2];
                for (c, ch) in channels.iter().enumerate() {
                    buf[c] = ch.data[i];
                }
                T::from_channels(&buf)
            })
            .collect();
        Ok(Grid::from_raw(shape.0, shape.1, data))
    }

    pub fn to_complex(&self) -> ComplexGrid {
        self.map(|v| v.to_complex())
    }

    pub fn magnitude(&self) -> RealGrid {
        self.map(|v| v.magnitude())
    }
}

impl RealGrid {
    pub fn sum(&self) -> f64 {
        let a = &self.data;
        exec::sum_indexed(self.len(), |i| a[i])
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Rotate by 90° counter-clockwise (square grids keep their shape).
    pub fn rot90(&self) -> Self {
        let (h, w) = self.shape();
        Grid::from_fn(w, h, |i, j| self.get(j, w - 1 - i))
    }
}

impl ComplexGrid {
    pub fn re(&self) -> RealGrid {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealGrid {
        self.map(|v| v.im)
    }

    /// Hermitian symmetry `G(ω) = conj(G(−ω mod N))` within a relative tolerance.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let (h, w) = self.shape();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..h {
            for j in 0..w {
                let a = self.get(i, j);
                let b = self.get((h - i) % h, (w - j) % w).conj();
                if (a - b).norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_nan() {
        assert!(RealGrid::new(2, 2, vec![0.0; 3]).is_err());
        assert!(RealGrid::new(0, 2, vec![]).is_err());
        assert!(RealGrid::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(RealGrid::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn rot90_four_times_is_identity() {
        let g = RealGrid::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let r = g.rot90().rot90().rot90().rot90();
        assert_eq!(g, r);
        // top-right corner moves to top-left
        assert_eq!(g.rot90().get(0, 0), g.get(0, 2));
    }

    #[test]
    fn channels_round_trip() {
        let g = ComplexGrid::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64));
        let back = ComplexGrid::from_channels(&g.channels()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn complex_dot_is_conjugate_linear() {
        let a = ComplexGrid::filled(1, 1, Complex64::new(0.0, 1.0));
        let b = ComplexGrid::filled(1, 1, Complex64::new(1.0, 0.0));
        let d = a.dot_complex(&b).unwrap();
        assert_eq!(d, Complex64::new(0.0, -1.0));
        assert_eq!(a.dot(&b).unwrap(), 0.0);
    }
}
