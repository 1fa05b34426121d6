//! Two-dimensional DFT with a fixed normalization.
//!
//! The forward transform is the plain sum `G(ω) = Σ_p g(p) e^{-2πi⟨ω,p⟩}`
//! with no scale factor; the inverse carries `1/(HW)`. Consequently
//! `Σ|G|² = HW·Σ|g|²`, and white noise of per-pixel variance σ² has expected
//! per-bin power `σ²·HW`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ComplexGrid, Grid, Sample};
use crate::error::{Error, Result};
use crate::exec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    })
}

/// In-place unnormalized 1D transform of every `len`-long row of `data`.
fn transform_rows(data: &mut [Complex64], len: usize, dir: Direction) {
    if len == 1 {
        return;
    }
    let fft = plan(len, dir);
    exec::for_each_chunk_mut(data, len, |_, row| {
        fft.process(row);
    });
}

fn transpose(data: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    exec::for_each_chunk_mut(&mut out, h, |j, col| {
        for (i, o) in col.iter_mut().enumerate() {
            *o = data[i * w + j];
        }
    });
    out
}

fn transform_2d(data: Vec<Complex64>, h: usize, w: usize, dir: Direction) -> Vec<Complex64> {
    let mut data = data;
    transform_rows(&mut data, w, dir);
    if h == 1 {
        return data;
    }
    let mut t = transpose(&data, h, w);
    transform_rows(&mut t, h, dir);
    transpose(&t, w, h)
}

/// Unnormalized forward 2D DFT of a real or complex grid.
pub fn forward_dft<T: Sample>(g: &Grid<T>) -> Result<ComplexGrid> {
    let (h, w) = g.shape();
    if h == 0 || w == 0 {
        return Err(Error::invalid("forward_dft on an empty grid"));
    }
    let data: Vec<Complex64> = g.data().iter().map(|v| v.to_complex()).collect();
    Ok(Grid::from_raw(h, w, transform_2d(data, h, w, Direction::Forward)))
}

/// Inverse 2D DFT including the `1/(HW)` factor.
pub fn inverse_dft(g: &ComplexGrid) -> Result<ComplexGrid> {
    let (h, w) = g.shape();
    if h == 0 || w == 0 {
        return Err(Error::invalid("inverse_dft on an empty grid"));
    }
    let mut data = transform_2d(g.data().to_vec(), h, w, Direction::Inverse);
    let s = 1.0 / (h * w) as f64;
    for v in &mut data {
        *v *= s;
    }
    Ok(Grid::from_raw(h, w, data))
}

/// Unnormalized forward 1D DFT (used by the FBP ramp filter).
pub fn forward_dft_1d(data: &mut [Complex64]) {
    let n = data.len();
    if n > 1 {
        plan(n, Direction::Forward).process(data);
    }
}

/// Inverse 1D DFT including `1/n`.
pub fn inverse_dft_1d(data: &mut [Complex64]) {
    let n = data.len();
    if n > 1 {
        plan(n, Direction::Inverse).process(data);
    }
    let s = 1.0 / n as f64;
    for v in data {
        *v *= s;
    }
}
