use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::grid::io::{read_grid, write_grid, AnyGrid};
use crate::grid::{Grid, Sample};

use super::Denoiser;

/// File handshake with an out-of-process denoiser.
///
/// Each call writes the input grid to a fresh temporary directory and runs
/// `program args... <input> <output> <sigma> <t>`; the program must write
/// a grid of the same shape and kind to `<output>` and exit with status 0.
#[derive(Clone, Debug)]
pub struct ExternalDenoiser {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalDenoiser {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }
}

/// Read a grid file whose sample kind must match `T`.
pub(crate) fn read_grid_as<T: Sample>(path: &Path) -> Result<Grid<T>> {
    match (read_grid(path)?, T::CHANNELS) {
        (AnyGrid::Real(g), 1) => Grid::from_channels(&[g]),
        (AnyGrid::Complex(g), 2) => Grid::from_channels(&[g.re(), g.im()]),
        _ => Err(Error::Format(format!("{} holds the wrong sample kind", path.display()))),
    }
}

impl<T: Sample> Denoiser<T> for ExternalDenoiser {
    fn denoise(&self, v: &Grid<T>, sigma: f64, t: usize) -> Result<Grid<T>> {
        super::check_sigma(sigma)?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let input = dir.path().join("input.dcpg");
        let output = dir.path().join("output.dcpg");
        write_grid(&input, v)?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .arg(format!("{sigma:e}"))
            .arg(t.to_string())
            .status()
            .map_err(|e| Error::DenoiserFailure(format!("cannot spawn {}: {e}", self.program.display())))?;
        if !status.success() {
            return Err(Error::DenoiserFailure(format!(
                "{} exited with {status}",
                self.program.display()
            )));
        }
        let out: Grid<T> =
            read_grid_as(&output).map_err(|e| Error::DenoiserFailure(format!("bad output grid: {e}")))?;
        out.ensure_shape(v.shape(), "external denoiser output")?;
        out.ensure_finite("external denoiser output")?;
        Ok(out)
    }

    fn name(&self) -> String {
        format!("external[{}]", self.program.display())
    }
}
