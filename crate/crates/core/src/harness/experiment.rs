use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use super::config::{ExperimentConfig, Task};
use super::phantom::{make_phantom, mri_phantom};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::io::{write_grid, write_pgm};
use crate::grid::{ComplexGrid, Grid, RealGrid, Sample, SeededRng};
use crate::metrics::{psnr, ssim};
use crate::operators::{
    fbp, make_cartesian_mask, zero_filled, FourierMaskOperator, LinearOperator, RadonGeometry, RadonOperator,
};
use crate::solver::{run, SolverConfig, SolverOutput, VariantSpec};

/// PSNR peak and SSIM range for images on `[−1, 1]`.
pub const CT_PEAK: f64 = 2.0;
/// PSNR peak and SSIM range for MRI magnitudes on `[0, 1]`.
pub const MRI_PEAK: f64 = 1.0;

/// A forward model for one named benchmark.
#[derive(Clone, Debug)]
pub enum Instance {
    Ct {
        name: String,
        task: Task,
        op: RadonOperator,
    },
    Mri {
        name: String,
        op: FourierMaskOperator,
    },
}

impl Instance {
    pub fn name(&self) -> &str {
        match self {
            Instance::Ct { name, .. } | Instance::Mri { name, .. } => name,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Instance::Ct { task, .. } => *task,
            Instance::Mri { .. } => Task::Mri,
        }
    }
}

/// Forward models for `task` (one per acceleration factor for MRI).
pub fn build_instances(cfg: &ExperimentConfig, task: Task) -> Result<Vec<Instance>> {
    let side = cfg.phantom.side;
    Ok(match task {
        Task::Svct => {
            let step = 180.0 / cfg.svct.views as f64;
            let angles = (0..cfg.svct.views).map(|k| k as f64 * step).collect();
            let geo = RadonGeometry::new(angles, cfg.svct.detector_bins, 1.0, side)?;
            vec![Instance::Ct {
                name: format!("svct-{}", cfg.svct.views),
                task,
                op: RadonOperator::new(geo),
            }]
        }
        Task::Lact => {
            let n = cfg.lact.views;
            if n < 2 {
                return Err(Error::Config("lact needs at least two views".into()));
            }
            let step = cfg.lact.max_angle / (n - 1) as f64;
            let angles = (0..n).map(|k| k as f64 * step).collect();
            let geo = RadonGeometry::new(angles, cfg.lact.detector_bins, 1.0, side)?;
            vec![Instance::Ct {
                name: format!("lact-{}", n),
                task,
                op: RadonOperator::new(geo),
            }]
        }
        Task::Mri => cfg
            .mri
            .accelerations
            .iter()
            .map(|&af| {
                let mask = make_cartesian_mask(cfg.mri.side, cfg.mri.side, af, cfg.mri.center_lines)?;
                Ok(Instance::Mri {
                    name: format!("mri-af{af}"),
                    op: FourierMaskOperator::new(mask),
                })
            })
            .collect::<Result<_>>()?,
    })
}

/// One cell of an experiment: instance × variant × seed × iteration budget.
#[derive(Clone, Debug)]
pub struct RowPlan {
    pub instance: usize,
    pub variant: VariantSpec,
    pub seed: u64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub task: String,
    pub variant: VariantSpec,
    pub seed: u64,
    pub iterations: usize,
    pub psnr: f64,
    pub ssim: f64,
    /// `‖Ax − y‖` at the last iteration.
    pub data_residual: f64,
    /// PSNR after the first iteration, the reference for the improvement check.
    pub first_psnr: f64,
    /// PSNR of the pseudo-inverse (FBP or zero filling).
    pub baseline_psnr: f64,
    pub wall_time_s: f64,
    /// `None` on success.
    pub error: Option<String>,
}

impl MetricRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub const METRICS_HEADER: &str =
    "task,variant,label,seed,iterations,psnr,ssim,data_residual,first_psnr,baseline_psnr,status";

/// Metrics table. Wall time is excluded so identical runs give identical bytes.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.task,
            csv_field(&r.variant.key()),
            r.variant.label(),
            r.seed,
            r.iterations,
            r.psnr,
            r.ssim,
            r.data_residual,
            r.first_psnr,
            r.baseline_psnr,
            status
        );
    }
    s
}

pub fn timing_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("task,variant,seed,iterations,wall_time_s\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.3}",
            r.task,
            csv_field(&r.variant.key()),
            r.seed,
            r.iterations,
            r.wall_time_s
        );
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// Mean metrics over seeds, per task × variant × iteration budget.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub task: String,
    pub variant: VariantSpec,
    pub iterations: usize,
    pub runs: usize,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows.iter().filter(|r| r.ok()) {
        match out
            .iter_mut()
            .find(|s| s.task == r.task && s.variant == r.variant && s.iterations == r.iterations)
        {
            Some(s) => {
                s.runs += 1;
                s.mean_psnr += r.psnr;
                s.mean_ssim += r.ssim;
            }
            None => out.push(SummaryRow {
                task: r.task.clone(),
                variant: r.variant,
                iterations: r.iterations,
                runs: 1,
                mean_psnr: r.psnr,
                mean_ssim: r.ssim,
            }),
        }
    }
    for s in &mut out {
        s.mean_psnr /= s.runs as f64;
        s.mean_ssim /= s.runs as f64;
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("task,variant,label,iterations,runs,mean_psnr,mean_ssim\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.task,
            csv_field(&r.variant.key()),
            r.variant.label(),
            r.iterations,
            r.runs,
            r.mean_psnr,
            r.mean_ssim
        );
    }
    s
}

/// Directory holding the artifacts of one row.
pub fn row_dir(out: &Path, task: &str, plan: &RowPlan) -> PathBuf {
    let v = plan.variant;
    out.join(task)
        .join(format!(
            "dual-{}_inject-{}",
            if v.dual_coupling { "on" } else { "off" },
            v.key().rsplit('=').next().unwrap_or("none")
        ))
        .join(format!("seed-{}", plan.seed))
        .join(format!("k-{}", plan.iterations))
}

struct RowResult {
    psnr: f64,
    ssim: f64,
    data_residual: f64,
    first_psnr: f64,
    baseline_psnr: f64,
}

fn add_noise<T: Sample>(y: &Grid<T>, std: f64, rng: &mut SeededRng) -> Result<Grid<T>> {
    if std == 0.0 {
        return Ok(y.clone());
    }
    let (h, w) = y.shape();
    let noise = (0..T::CHANNELS)
        .map(|_| rng.white_gaussian(h, w, std))
        .collect::<Result<Vec<_>>>()?;
    y.add(&Grid::from_channels(&noise)?)
}

fn solver_config(cfg: &ExperimentConfig, task: Task, plan: &RowPlan, peak: f64) -> Result<SolverConfig> {
    let (cg_iters, lambda0) = cfg.cg_budget(task);
    Ok(SolverConfig {
        schedule: cfg.schedule.schedule(plan.iterations)?,
        variant: plan.variant,
        cg_iters,
        cg_tol: cfg.cg_tol,
        lambda0,
        sh: cfg.sh,
        psnr_peak: peak,
    })
}

fn write_artifacts<T: Sample>(
    dir: Option<&Path>,
    out: &SolverOutput<T>,
    display: &RealGrid,
    window: (f64, f64),
    resolved: &str,
) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_grid(dir.join("recon.dcpg"), &out.recon)?;
    write_pgm(dir.join("recon.pgm"), display, window.0, window.1)?;
    let put = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    put("trace.csv", &out.trace.to_csv())?;
    put("spectral.csv", &out.trace.spectral_csv())?;
    put("config.resolved", resolved)
}

fn resolved_config(cfg: &ExperimentConfig, task: Task, plan: &RowPlan) -> String {
    let mut c = cfg.clone();
    c.task = task;
    c.seeds = vec![plan.seed];
    c.variants = vec![plan.variant];
    c.schedule.iterations = plan.iterations;
    c.to_toml()
}

fn run_row(cfg: &ExperimentConfig, inst: &Instance, plan: &RowPlan, dir: Option<&Path>) -> Result<RowResult> {
    let mut master = SeededRng::new(plan.seed);
    let mut phantom_rng = master.fork();
    let mut noise_rng = master.fork();
    let mut solver_rng = master.fork();
    let truth = make_phantom(
        &cfg.phantom.kind(),
        match inst {
            Instance::Mri { .. } => cfg.mri.side,
            Instance::Ct { .. } => cfg.phantom.side,
        },
        &mut phantom_rng,
    )?;
    let resolved = resolved_config(cfg, inst.task(), plan);

    match inst {
        Instance::Ct { op, task, .. } => {
            let y = add_noise(&op.apply(&truth)?, cfg.measurement_noise_std, &mut noise_rng)?;
            let baseline = fbp(&y, op.geometry())?;
            let denoiser = cfg.denoiser.build::<f64>(truth.shape())?;
            let scfg = solver_config(cfg, *task, plan, CT_PEAK)?;
            let out = run(op, &y, denoiser.as_ref(), &scfg, &mut solver_rng, Some(&truth))?;
            write_artifacts(dir, &out, &out.recon, (-1.0, 1.0), &resolved)?;
            finish(
                &out,
                &truth,
                &baseline,
                CT_PEAK,
                |g| g.clone(),
                |g: &RealGrid| g.clone(),
            )
        }
        Instance::Mri { op, .. } => {
            let truth = mri_phantom(&truth);
            let y = add_noise(&op.apply(&truth)?, cfg.measurement_noise_std, &mut noise_rng)?;
            let baseline = zero_filled(&y, op.mask())?;
            let denoiser = cfg.denoiser.build::<Complex64>(truth.shape())?;
            let scfg = solver_config(cfg, Task::Mri, plan, MRI_PEAK)?;
            let out = run(op, &y, denoiser.as_ref(), &scfg, &mut solver_rng, Some(&truth))?;
            write_artifacts(dir, &out, &out.recon.magnitude(), (0.0, 1.0), &resolved)?;
            finish(
                &out,
                &truth,
                &baseline,
                MRI_PEAK,
                |g| g.clone(),
                |g: &ComplexGrid| g.magnitude(),
            )
        }
    }
}

fn finish<T: Sample>(
    out: &SolverOutput<T>,
    truth: &Grid<T>,
    baseline: &Grid<T>,
    peak: f64,
    id: impl Fn(&Grid<T>) -> Grid<T>,
    display: impl Fn(&Grid<T>) -> RealGrid,
) -> Result<RowResult> {
    let recon = id(&out.recon);
    Ok(RowResult {
        psnr: psnr(&recon, truth, peak)?,
        ssim: ssim(&display(&recon), &display(truth), peak)?,
        data_residual: out.trace.last().map(|r| r.data_residual).unwrap_or(f64::NAN),
        first_psnr: out.trace.records.first().and_then(|r| r.psnr).unwrap_or(f64::NAN),
        baseline_psnr: psnr(baseline, truth, peak)?,
    })
}

/// Runs every planned row (concurrently when built with `parallel`).
/// Failures are recorded per row; the others still run. With `out` set,
/// each row writes its artifacts below it.
pub fn run_rows(
    cfg: &ExperimentConfig,
    instances: &[Instance],
    plans: &[RowPlan],
    out: Option<&Path>,
) -> Vec<MetricRow> {
    exec::map_slice(plans, |plan| {
        let inst = &instances[plan.instance];
        let dir = out.map(|o| row_dir(o, inst.name(), plan));
        let start = Instant::now();
        let result = run_row(cfg, inst, plan, dir.as_deref());
        let wall_time_s = start.elapsed().as_secs_f64();
        let mut row = MetricRow {
            task: inst.name().to_string(),
            variant: plan.variant,
            seed: plan.seed,
            iterations: plan.iterations,
            psnr: f64::NAN,
            ssim: f64::NAN,
            data_residual: f64::NAN,
            first_psnr: f64::NAN,
            baseline_psnr: f64::NAN,
            wall_time_s,
            error: None,
        };
        match result {
            Ok(r) => {
                row.psnr = r.psnr;
                row.ssim = r.ssim;
                row.data_residual = r.data_residual;
                row.first_psnr = r.first_psnr;
                row.baseline_psnr = r.baseline_psnr;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    })
}

/// Which grid of rows to execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `variants × seeds` at the configured iteration count.
    Run,
    /// The four dual × homogenization rows × seeds.
    Ablate,
    /// `sweep_variants × nfe_sweep × seeds`.
    SweepNfe,
}

pub fn plan_rows(cfg: &ExperimentConfig, n_instances: usize, mode: Mode) -> Vec<RowPlan> {
    let (variants, budgets): (Vec<VariantSpec>, Vec<usize>) = match mode {
        Mode::Run => (cfg.variants.clone(), vec![cfg.schedule.iterations]),
        Mode::Ablate => (VariantSpec::ABLATION_GRID.to_vec(), vec![cfg.schedule.iterations]),
        Mode::SweepNfe => (cfg.sweep_variants.clone(), cfg.nfe_sweep.clone()),
    };
    let mut plans = Vec::new();
    for instance in 0..n_instances {
        for &variant in &variants {
            for &iterations in &budgets {
                for &seed in &cfg.seeds {
                    plans.push(RowPlan {
                        instance,
                        variant,
                        seed,
                        iterations,
                    });
                }
            }
        }
    }
    plans
}

/// Builds, plans and runs an experiment; writes `metrics.csv`,
/// `timing.csv` and `summary.csv` when `out` is given.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode, out: Option<&Path>) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    let instances = build_instances(cfg, cfg.task)?;
    let plans = plan_rows(cfg, instances.len(), mode);
    let rows = run_rows(cfg, &instances, &plans, out);
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let put = |name: &str, text: String| {
            let p = out.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        put("metrics.csv", metrics_csv(&rows))?;
        put("timing.csv", timing_csv(&rows))?;
        put("summary.csv", summary_csv(&summarize(&rows)))?;
    }
    Ok(rows)
}
