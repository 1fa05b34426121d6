//! Phantoms, experiment configuration and batch execution.

mod config;
pub mod diagnostics;
mod experiment;
mod phantom;
mod verdict;

pub use config::{
    ExperimentConfig, LactConfig, MriConfig, PhantomConfig, PhantomName, ScheduleConfig, SvctConfig, Task,
};
pub use experiment::{
    build_instances, metrics_csv, plan_rows, row_dir, run_experiment, run_rows, summarize, summary_csv, timing_csv,
    Instance, MetricRow, Mode, RowPlan, SummaryRow, CT_PEAK, METRICS_HEADER, MRI_PEAK,
};
pub use phantom::{make_phantom, mri_phantom, rasterize, shepp_logan_ellipses, Ellipse, PhantomKind};
pub use verdict::{ablation_verdicts, nfe_verdicts, rows_improve, AblationVerdict, NfeVerdict};
