use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::phantom::PhantomKind;
use crate::error::{Error, Result};
use crate::priors::{DenoiserSpec, NoiseSchedule, Spacing, TvScaling};
use crate::solver::VariantSpec;
use crate::spectral::ShConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Svct,
    Lact,
    Mri,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Svct => "svct",
            Task::Lact => "lact",
            Task::Mri => "mri",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svct" => Ok(Task::Svct),
            "lact" => Ok(Task::Lact),
            "mri" => Ok(Task::Mri),
            other => Err(Error::invalid(format!("unknown task {other:?} (svct|lact|mri)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomName {
    SheppLogan,
    RandomEllipses,
    FlatDisk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub kind: PhantomName,
    /// Image side for the CT tasks.
    pub side: usize,
    pub ellipse_count: usize,
    pub disk_radius: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            kind: PhantomName::SheppLogan,
            side: 128,
            ellipse_count: 8,
            disk_radius: 0.5,
        }
    }
}

impl PhantomConfig {
    pub fn kind(&self) -> PhantomKind {
        match self.kind {
            PhantomName::SheppLogan => PhantomKind::SheppLogan {},
            PhantomName::RandomEllipses => PhantomKind::RandomEllipses {
                count: self.ellipse_count,
            },
            PhantomName::FlatDisk => PhantomKind::FlatDisk {
                radius: self.disk_radius,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub iterations: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub spacing: Spacing,
    pub timesteps: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            sigma_max: 0.25,
            sigma_min: 0.01,
            spacing: Spacing::Geometric,
            timesteps: 1000,
        }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self, iterations: usize) -> Result<NoiseSchedule> {
        let s = NoiseSchedule {
            sigma_max: self.sigma_max,
            sigma_min: self.sigma_min,
            iterations,
            spacing: self.spacing,
            timesteps: self.timesteps,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvctConfig {
    pub views: usize,
    pub detector_bins: usize,
    pub cg_iters: usize,
    pub lambda0: f64,
}

impl Default for SvctConfig {
    fn default() -> Self {
        Self {
            views: 20,
            detector_bins: 363,
            cg_iters: 20,
            lambda0: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LactConfig {
    pub views: usize,
    pub max_angle: f64,
    pub detector_bins: usize,
    pub cg_iters: usize,
    pub lambda0: f64,
}

impl Default for LactConfig {
    fn default() -> Self {
        Self {
            views: 90,
            max_angle: 90.0,
            detector_bins: 363,
            cg_iters: 100,
            lambda0: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MriConfig {
    pub side: usize,
    pub accelerations: Vec<usize>,
    pub center_lines: usize,
    pub cg_iters: usize,
    pub lambda0: f64,
}

impl Default for MriConfig {
    fn default() -> Self {
        Self {
            side: 320,
            accelerations: vec![6, 10],
            center_lines: 16,
            cg_iters: 20,
            lambda0: 1e-5,
        }
    }
}

/// Everything needed to reproduce a batch of runs. Unknown keys are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Std of white Gaussian noise added to the measurements.
    pub measurement_noise_std: f64,
    /// Variants executed by `run`.
    pub variants: Vec<VariantSpec>,
    /// Variants compared by `sweep-nfe`.
    pub sweep_variants: Vec<VariantSpec>,
    /// Iteration budgets visited by `sweep-nfe`.
    pub nfe_sweep: Vec<usize>,
    pub cg_tol: f64,
    pub phantom: PhantomConfig,
    pub schedule: ScheduleConfig,
    pub denoiser: DenoiserSpec,
    pub sh: ShConfig,
    pub svct: SvctConfig,
    pub lact: LactConfig,
    pub mri: MriConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Svct,
            seeds: vec![0, 1, 2],
            out_dir: PathBuf::from("runs"),
            measurement_noise_std: 0.0,
            variants: vec![VariantSpec::FULL],
            sweep_variants: vec![VariantSpec::HQS, VariantSpec::FULL],
            nfe_sweep: vec![10, 20, 30, 50, 100],
            cg_tol: 1e-10,
            phantom: PhantomConfig::default(),
            schedule: ScheduleConfig::default(),
            denoiser: DenoiserSpec::TvProx {
                weight: 2.0,
                iterations: 50,
                scaling: TvScaling::Sigma,
            },
            sh: ShConfig::default(),
            svct: SvctConfig::default(),
            lact: LactConfig::default(),
            mri: MriConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.variants.is_empty() || self.sweep_variants.is_empty() {
            return bad("variant lists must not be empty".into());
        }
        if self.nfe_sweep.contains(&0) {
            return bad("nfe_sweep entries must be positive".into());
        }
        if !(self.measurement_noise_std >= 0.0) {
            return bad("measurement_noise_std must be nonnegative".into());
        }
        if self.phantom.side < 16 || self.mri.side < 16 {
            return bad("image sides must be at least 16".into());
        }
        if self.mri.accelerations.is_empty() {
            return bad("mri.accelerations must not be empty".into());
        }
        self.schedule.schedule(self.schedule.iterations.max(1))?;
        self.sh.validate()?;
        for (name, iters, lambda0) in [
            ("svct", self.svct.cg_iters, self.svct.lambda0),
            ("lact", self.lact.cg_iters, self.lact.lambda0),
            ("mri", self.mri.cg_iters, self.mri.lambda0),
        ] {
            crate::fidelity::CgConfig::new(iters, self.cg_tol, lambda0)
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    /// `(cg_iters, λ₀)` for the configured task.
    pub fn cg_budget(&self, task: Task) -> (usize, f64) {
        match task {
            Task::Svct => (self.svct.cg_iters, self.svct.lambda0),
            Task::Lact => (self.lact.cg_iters, self.lact.lambda0),
            Task::Mri => (self.mri.cg_iters, self.mri.lambda0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_geometry() {
        let c = ExperimentConfig::default();
        assert_eq!(c.svct.views, 20);
        assert_eq!(c.svct.detector_bins, 363);
        assert_eq!((c.lact.views, c.lact.max_angle), (90, 90.0));
        assert_eq!(c.lact.cg_iters, 100);
        assert_eq!(c.lact.lambda0, 1e-5);
        assert_eq!(c.mri.accelerations, vec![6, 10]);
        assert_eq!(c.schedule.iterations, 50);
        assert_eq!(c.nfe_sweep, vec![10, 20, 30, 50, 100]);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = ExperimentConfig::from_toml("task = \"lact\"\n[schedule]\niterations = 7\n").unwrap();
        assert_eq!(partial.task, Task::Lact);
        assert_eq!(partial.schedule.iterations, 7);
        assert_eq!(partial.lact, LactConfig::default());
    }

    #[test]
    fn unknown_keys_fail_fast() {
        assert!(ExperimentConfig::from_toml("tsak = \"svct\"\n").is_err());
        assert!(ExperimentConfig::from_toml("[svct]\nveiws = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("seeds = []\n").is_err());
    }

    #[test]
    fn variants_use_named_keys() {
        let c = ExperimentConfig::from_toml(
            "variants = [{ dual_coupling = \"off\", injection = \"none\" }, { dual_coupling = \"on\", injection = \"sh\" }]\n",
        )
        .unwrap();
        assert_eq!(c.variants, vec![VariantSpec::HQS, VariantSpec::FULL]);
    }

    #[test]
    fn shipped_config_is_the_default() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
        assert_eq!(ExperimentConfig::load(path).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn task_parsing() {
        assert_eq!("mri".parse::<Task>().unwrap(), Task::Mri);
        assert!("pet".parse::<Task>().is_err());
    }
}
