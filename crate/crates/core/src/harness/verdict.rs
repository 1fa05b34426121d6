use super::experiment::{summarize, MetricRow, SummaryRow};
use crate::solver::VariantSpec;

fn mean_psnr(summary: &[SummaryRow], task: &str, v: VariantSpec, k: usize) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.task == task && s.variant == v && s.iterations == k)
        .map(|s| s.mean_psnr)
}

/// Every row finished, and with more than one iteration the final PSNR
/// beats the PSNR after the first iteration.
pub fn rows_improve(rows: &[MetricRow]) -> Vec<String> {
    let mut problems = Vec::new();
    for r in rows {
        let id = format!("{} {} seed {} K={}", r.task, r.variant, r.seed, r.iterations);
        match &r.error {
            Some(e) => problems.push(format!("{id}: {e}")),
            None if r.iterations > 1 && !(r.psnr > r.first_psnr) => problems.push(format!(
                "{id}: final PSNR {:.3} dB does not improve on first-iterate {:.3} dB",
                r.psnr, r.first_psnr
            )),
            None => {}
        }
    }
    problems
}

/// Mean-over-seeds PSNR of the ablation rows for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationVerdict {
    pub task: String,
    pub hqs: f64,
    pub hqs_sh: f64,
    pub dc: f64,
    pub full: f64,
}

impl AblationVerdict {
    /// `DC+SH ≥ DC > HQS`.
    pub fn ordered(&self) -> bool {
        self.full >= self.dc && self.dc > self.hqs
    }
}

pub fn ablation_verdicts(rows: &[MetricRow]) -> Vec<AblationVerdict> {
    let summary = summarize(rows);
    let mut tasks: Vec<(&str, usize)> = summary.iter().map(|s| (s.task.as_str(), s.iterations)).collect();
    tasks.dedup();
    tasks
        .into_iter()
        .filter_map(|(task, k)| {
            Some(AblationVerdict {
                task: task.to_string(),
                hqs: mean_psnr(&summary, task, VariantSpec::HQS, k)?,
                hqs_sh: mean_psnr(&summary, task, VariantSpec::HQS_SH, k)?,
                dc: mean_psnr(&summary, task, VariantSpec::DC_ONLY, k)?,
                full: mean_psnr(&summary, task, VariantSpec::FULL, k)?,
            })
        })
        .collect()
}

/// Convergence-speed comparison between a variant and HQS.
#[derive(Clone, Debug, PartialEq)]
pub struct NfeVerdict {
    pub task: String,
    /// HQS mean PSNR at the largest swept budget.
    pub reference_budget: usize,
    pub reference_psnr: f64,
    /// `(K, mean PSNR)` of the compared variant for every swept budget.
    pub curve: Vec<(usize, f64)>,
}

impl NfeVerdict {
    /// Smallest budget at which the compared variant reaches the HQS reference.
    pub fn budget_to_match(&self) -> Option<usize> {
        self.curve
            .iter()
            .find(|(_, p)| *p >= self.reference_psnr)
            .map(|(k, _)| *k)
    }

    /// Whether the compared variant matches the reference within half its budget.
    pub fn at_least_twice_as_fast(&self) -> bool {
        self.budget_to_match().is_some_and(|k| 2 * k <= self.reference_budget)
    }
}

pub fn nfe_verdicts(rows: &[MetricRow], variant: VariantSpec) -> Vec<NfeVerdict> {
    let summary = summarize(rows);
    let mut tasks: Vec<&str> = summary.iter().map(|s| s.task.as_str()).collect();
    tasks.dedup();
    tasks
        .into_iter()
        .filter_map(|task| {
            let reference_budget = summary
                .iter()
                .filter(|s| s.task == task && s.variant == VariantSpec::HQS)
                .map(|s| s.iterations)
                .max()?;
            let mut curve: Vec<(usize, f64)> = summary
                .iter()
                .filter(|s| s.task == task && s.variant == variant)
                .map(|s| (s.iterations, s.mean_psnr))
                .collect();
            curve.sort_by_key(|c| c.0);
            Some(NfeVerdict {
                task: task.to_string(),
                reference_budget,
                reference_psnr: mean_psnr(&summary, task, VariantSpec::HQS, reference_budget)?,
                curve,
            })
        })
        .collect()
}
