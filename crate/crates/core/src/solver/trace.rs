use std::fmt::Write as _;

use crate::spectral::SpectralReport;

/// Channel-aggregated spectral diagnostics for one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    /// Summed over channels.
    pub injected_energy: f64,
    /// Averaged over channels.
    pub flatness_before: f64,
    pub flatness_after: f64,
    /// Largest over channels.
    pub peak_to_floor: f64,
}

impl SpectralSummary {
    pub fn from_reports(reports: &[SpectralReport]) -> Self {
        let n = reports.len().max(1) as f64;
        Self {
            injected_energy: reports.iter().map(|r| r.injected_energy).sum(),
            flatness_before: reports.iter().map(|r| r.flatness_before).sum::<f64>() / n,
            flatness_after: reports.iter().map(|r| r.flatness_after).sum::<f64>() / n,
            peak_to_floor: reports.iter().map(|r| r.peak_to_floor).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub sigma: f64,
    pub timestep: usize,
    pub lambda: f64,
    /// `‖Ax − y‖`
    pub data_residual: f64,
    /// `‖x − z‖`
    pub consensus: f64,
    /// `‖u‖`
    pub dual_norm: f64,
    /// PSNR of `z` against the ground truth, when one was supplied.
    pub psnr: Option<f64>,
    pub cg_iterations: usize,
    pub cg_converged: bool,
    pub cg_residuals: Vec<f64>,
    pub spectral: Option<SpectralSummary>,
}

/// Per-iteration log of one solver run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

pub const TRACE_HEADER: &str =
    "k,sigma,timestep,lambda,data_residual,consensus,dual_norm,psnr,cg_iterations,cg_converged,cg_final_residual";
pub const SPECTRAL_HEADER: &str = "k,sigma,injected_energy,flatness_before,flatness_after,peak_to_floor";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn psnr_curve(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.psnr).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{},{}",
                r.k,
                r.sigma,
                r.timestep,
                r.lambda,
                r.data_residual,
                r.consensus,
                r.dual_norm,
                opt(r.psnr),
                r.cg_iterations,
                r.cg_converged,
                opt(r.cg_residuals.last().copied()),
            );
        }
        s
    }

    /// One row per iteration that injected spectrally shaped noise.
    pub fn spectral_csv(&self) -> String {
        let mut s = String::from(SPECTRAL_HEADER);
        s.push('\n');
        for r in &self.records {
            if let Some(sp) = r.spectral {
                let _ = writeln!(
                    s,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    r.k, r.sigma, sp.injected_energy, sp.flatness_before, sp.flatness_after, sp.peak_to_floor
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_one_row_per_record() {
        let rec = IterationRecord {
            k: 0,
            sigma: 1.0,
            timestep: 1000,
            lambda: 1e-5,
            data_residual: 2.0,
            consensus: 0.5,
            dual_norm: 0.0,
            psnr: None,
            cg_iterations: 3,
            cg_converged: false,
            cg_residuals: vec![1.0, 0.1],
            spectral: Some(SpectralSummary {
                injected_energy: 1.0,
                flatness_before: 2.0,
                flatness_after: 0.5,
                peak_to_floor: f64::INFINITY,
            }),
        };
        let mut t = IterationTrace::default();
        t.records.push(rec.clone());
        t.records.push(IterationRecord {
            k: 1,
            spectral: None,
            ..rec
        });
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(
            csv.lines().nth(1).unwrap().split(',').count(),
            TRACE_HEADER.split(',').count()
        );
        let sp = t.spectral_csv();
        assert_eq!(sp.lines().count(), 2);
        assert!(sp.contains("inf"));
    }
}
