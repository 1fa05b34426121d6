//! Grid file formats.
//!
//! `.dcpg`: the 4 magic bytes `DCPG`, height and width as little-endian
//! `u32`, then row-major little-endian `f64` samples (real and imaginary
//! parts interleaved for complex grids). Real versus complex is implied by
//! the payload length.
//!
//! `.pgm`: binary P5 with maxval 65535 (big-endian samples), produced after
//! clamping to a display window.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexGrid, Grid, RealGrid, Sample};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"DCPG";
const HEADER_LEN: usize = 12;

/// Decoded grid whose scalar kind is only known at read time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyGrid {
    Real(RealGrid),
    Complex(ComplexGrid),
}

pub fn encode_grid<T: Sample>(g: &Grid<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + g.len() * 8 * T::CHANNELS);
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(g.height() as u32).to_le_bytes());
    out.extend_from_slice(&(g.width() as u32).to_le_bytes());
    for v in g.data() {
        for c in 0..T::CHANNELS {
            out.extend_from_slice(&v.channel(c).to_le_bytes());
        }
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<AnyGrid> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != GRID_MAGIC {
        return Err(Error::Format("missing DCPG header".into()));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let n = h * w;
    let floats: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !payload.len().is_multiple_of(8) {
        return Err(Error::Format("payload is not a whole number of f64".into()));
    }
    if floats.len() == n {
        Ok(AnyGrid::Real(RealGrid::new(h, w, floats)?))
    } else if floats.len() == 2 * n {
        let data = floats.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Ok(AnyGrid::Complex(ComplexGrid::new(h, w, data)?))
    } else {
        Err(Error::Format(format!(
            "payload holds {} values, expected {n} or {}",
            floats.len(),
            2 * n
        )))
    }
}

pub fn write_grid<T: Sample>(path: impl AsRef<Path>, g: &Grid<T>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_grid(g)).map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<AnyGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes)
}

pub fn read_real_grid(path: impl AsRef<Path>) -> Result<RealGrid> {
    match read_grid(path)? {
        AnyGrid::Real(g) => Ok(g),
        AnyGrid::Complex(_) => Err(Error::Format("expected a real grid".into())),
    }
}

pub fn read_complex_grid(path: impl AsRef<Path>) -> Result<ComplexGrid> {
    match read_grid(path)? {
        AnyGrid::Complex(g) => Ok(g),
        AnyGrid::Real(g) => Ok(g.to_complex()),
    }
}

/// 16-bit P5 PGM of `g` windowed to `[lo, hi]`.
pub fn encode_pgm(g: &RealGrid, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty display window [{lo}, {hi}]")));
    }
    let mut out = format!("P5\n{} {}\n65535\n", g.width(), g.height()).into_bytes();
    for &v in g.data() {
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        let q = (t * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, g: &RealGrid, lo: f64, hi: f64) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g, lo, hi)?).map_err(|e| Error::io(path, e))
}
