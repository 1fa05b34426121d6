//! Single-coil Cartesian MRI encoding.

use num_complex::Complex64;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::{forward_dft, inverse_dft, ComplexGrid, Grid};

const MASK_MAGIC: &[u8; 4] = b"DCPM";

/// 1D equidistant line mask over k-space columns (DFT ordering, DC at column 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartesianMask {
    height: usize,
    width: usize,
    acceleration: usize,
    center_lines: usize,
    keep: Vec<bool>,
}

impl CartesianMask {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn acceleration(&self) -> usize {
        self.acceleration
    }

    pub fn center_lines(&self) -> usize {
        self.center_lines
    }

    pub fn keeps(&self, col: usize) -> bool {
        self.keep[col]
    }

    pub fn kept_columns(&self) -> usize {
        self.keep.iter().filter(|k| **k).count()
    }

    pub fn kept_fraction(&self) -> f64 {
        self.kept_columns() as f64 / self.width as f64
    }

    /// Header (`DCPM`, then height, width, AF, centre lines as LE `u32`)
    /// followed by the column flags packed LSB-first.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = MASK_MAGIC.to_vec();
        for v in [self.height, self.width, self.acceleration, self.center_lines] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let mut bits = vec![0u8; self.width.div_ceil(8)];
        for (c, &k) in self.keep.iter().enumerate() {
            if k {
                bits[c / 8] |= 1 << (c % 8);
            }
        }
        out.extend_from_slice(&bits);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..4] != MASK_MAGIC {
            return Err(Error::Format("missing DCPM header".into()));
        }
        let field = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
        let (height, width, acceleration, center_lines) = (field(0), field(1), field(2), field(3));
        let bits = &bytes[20..];
        if bits.len() != width.div_ceil(8) {
            return Err(Error::Format("mask bit vector has the wrong length".into()));
        }
        let keep = (0..width).map(|c| bits[c / 8] >> (c % 8) & 1 == 1).collect();
        Ok(Self {
            height,
            width,
            acceleration,
            center_lines,
            keep,
        })
    }
}

/// Keep every `af`-th column plus `center_lines` low-frequency columns
/// around DC.
pub fn make_cartesian_mask(height: usize, width: usize, af: usize, center_lines: usize) -> Result<CartesianMask> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    if af == 0 || center_lines == 0 {
        return Err(Error::invalid("acceleration and centre lines must be at least 1"));
    }
    if af > width {
        return Err(Error::invalid(format!(
            "acceleration {af} exceeds k-space width {width}"
        )));
    }
    let mut keep: Vec<bool> = (0..width).map(|c| c % af == 0).collect();
    // signed offsets −⌊c/2⌋ .. ⌈c/2⌉−1 around DC
    let half = (center_lines / 2) as i64;
    for off in -half..(center_lines as i64 - half) {
        keep[off.rem_euclid(width as i64) as usize] = true;
    }
    Ok(CartesianMask {
        height,
        width,
        acceleration: af,
        center_lines,
        keep,
    })
}

/// `A x = M ⊙ F x / √(HW)`; the unitary scaling makes `AᴴA` an orthogonal
/// projection.
#[derive(Clone, Debug)]
pub struct FourierMaskOperator {
    mask: CartesianMask,
}

impl FourierMaskOperator {
    pub fn new(mask: CartesianMask) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> &CartesianMask {
        &self.mask
    }

    fn apply_mask(&self, g: &mut ComplexGrid) {
        let w = self.mask.width;
        for (k, v) in g.data_mut().iter_mut().enumerate() {
            if !self.mask.keep[k % w] {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn scale(&self) -> f64 {
        ((self.mask.height * self.mask.width) as f64).sqrt()
    }
}

impl LinearOperator<Complex64> for FourierMaskOperator {
    fn domain_shape(&self) -> (usize, usize) {
        (self.mask.height, self.mask.width)
    }

    fn range_shape(&self) -> (usize, usize) {
        (self.mask.height, self.mask.width)
    }

    fn apply(&self, img: &ComplexGrid) -> Result<ComplexGrid> {
        img.ensure_shape(self.domain_shape(), "fourier_mask_apply")?;
        let mut k = forward_dft(img)?;
        self.apply_mask(&mut k);
        Ok(k.scale(1.0 / self.scale()))
    }

    fn adjoint(&self, ksp: &ComplexGrid) -> Result<ComplexGrid> {
        ksp.ensure_shape(self.range_shape(), "fourier_mask_adjoint")?;
        let mut k = ksp.clone();
        self.apply_mask(&mut k);
        Ok(inverse_dft(&k)?.scale(self.scale()))
    }

    fn name(&self) -> String {
        format!(
            "fourier-mask[{}x{}, AF {}, {} centre lines]",
            self.mask.height, self.mask.width, self.mask.acceleration, self.mask.center_lines
        )
    }
}

pub fn fourier_mask_apply(img: &ComplexGrid, mask: &CartesianMask) -> Result<ComplexGrid> {
    FourierMaskOperator::new(mask.clone()).apply(img)
}

/// Zero-filled reconstruction `Aᴴy`.
pub fn zero_filled(ksp: &Grid<Complex64>, mask: &CartesianMask) -> Result<Grid<Complex64>> {
    FourierMaskOperator::new(mask.clone()).adjoint(ksp)
}
