//! Sample grids, the DFT convention, seeded randomness and grid file formats.

mod array;
mod dft;
mod freq;
pub mod io;
mod rng;
mod sample;

pub use array::{ComplexGrid, Grid, RealGrid};
pub use dft::{forward_dft, forward_dft_1d, inverse_dft, inverse_dft_1d};
pub use freq::FrequencyMap;
pub use rng::{sample_white_gaussian, SeededRng};
pub use sample::Sample;
