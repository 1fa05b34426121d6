//! Acceptance table. Every criterion prints one PASS/FAIL line (written
//! straight to stdout so it survives output capture) and then asserts.
//!
//! The tests share a lock so that runtimes are measured one at a time even
//! when the harness runs tests on several threads.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dcpnp::harness::diagnostics::{
    certificate_checks, certify_suite, cg_oracle_gap, dot_test_suite, tweedie_sweep, whiteness_experiment,
    CertificatePair, Check, WhitenessConfig,
};
use dcpnp::harness::{ablation_verdicts, nfe_verdicts, rows_improve, run_experiment, ExperimentConfig, Mode, Task};
use dcpnp::solver::VariantSpec;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and returns whether value and runtime both pass.
fn report(criterion: &str, pass: bool, detail: &str, elapsed: Duration, limit: Option<Duration>) -> bool {
    let in_time = limit.is_none_or(|l| elapsed < l);
    let ok = pass && in_time;
    let limit = limit.map_or(String::new(), |l| format!(" / limit {:.0} s", l.as_secs_f64()));
    let line = format!(
        "{} {criterion}: {detail} [{:.2} s{limit}]\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    ok
}

fn worst(checks: &[Check]) -> String {
    let failing: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failing.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("failing {}", failing.join(", "))
    }
}

#[test]
fn adjoint_exactness() {
    let _g = serial();
    let t = Instant::now();
    let checks = dot_test_suite(0).unwrap();
    let elapsed = t.elapsed();
    let max = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    let detail = format!("max normalized discrepancy {max:.2e} < 1e-10 ({})", worst(&checks));
    let pass = checks.iter().all(|c| c.pass) && max < 1e-10;
    assert!(report(
        "adjoint exactness",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(1))
    ));
}

#[test]
fn cg_matches_dense_solve() {
    let _g = serial();
    let t = Instant::now();
    let gap = cg_oracle_gap(20, 12, 0).unwrap();
    let elapsed = t.elapsed();
    let detail = format!("worst relative gap {gap:.2e} < 1e-8 over 20 instances");
    assert!(report(
        "CG oracle",
        gap < 1e-8,
        &detail,
        elapsed,
        Some(Duration::from_secs(5))
    ));
}

#[test]
fn tweedie_identity() {
    let _g = serial();
    let t = Instant::now();
    let dev = tweedie_sweep(64, 0).unwrap();
    let elapsed = t.elapsed();
    let detail = format!("max-abs deviation {dev:.2e} < 1e-12");
    assert!(report(
        "Tweedie identity",
        dev < 1e-12,
        &detail,
        elapsed,
        Some(Duration::from_secs(1))
    ));
}

#[test]
fn homogenization_whitens() {
    let _g = serial();
    let t = Instant::now();
    let r = whiteness_experiment(&WhitenessConfig::default()).unwrap();
    let elapsed = t.elapsed();
    let pass = r.min_ratio >= 0.9 && r.max_ratio <= 1.1 && r.flatness_ratio() < 0.5;
    let detail = format!(
        "mean PSD / sigma^2 HW in [{:.4}, {:.4}] within [0.9, 1.1]; CV ratio {:.4} < 0.5",
        r.min_ratio,
        r.max_ratio,
        r.flatness_ratio()
    );
    assert!(report(
        "whitening",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(30))
    ));
}

fn certificates() -> (Vec<CertificatePair>, Duration) {
    let t = Instant::now();
    let pairs = certify_suite(10, 16, 0).unwrap();
    (pairs, t.elapsed())
}

#[test]
fn dual_on_fixed_point_is_the_minimizer() {
    let _g = serial();
    let (pairs, elapsed) = certificates();
    let checks: Vec<Check> = certificate_checks(&pairs)
        .into_iter()
        .filter(|c| !c.name.contains("bias") && !c.name.contains("dual-off"))
        .collect();
    let consensus = pairs.iter().map(|p| p.on.consensus).fold(0.0, f64::max);
    let stationarity = pairs.iter().map(|p| p.on.stationarity).fold(0.0, f64::max);
    let iters = pairs.iter().map(|p| p.on.iterations).max().unwrap_or(0);
    let pass = checks.iter().all(|c| c.pass) && iters <= 500;
    let detail = format!(
        "max consensus {consensus:.2e}, max stationarity {stationarity:.2e} < 1e-6 in <= {iters} iterations ({})",
        worst(&checks)
    );
    assert!(report(
        "dual-on certificate",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(10))
    ));
}

#[test]
fn dual_off_fixed_point_is_biased() {
    let _g = serial();
    let (pairs, elapsed) = certificates();
    let checks: Vec<Check> = certificate_checks(&pairs)
        .into_iter()
        .filter(|c| c.name.contains("bias") || c.name.contains("dual-off"))
        .collect();
    let min_ratio = pairs.iter().map(|p| p.bias_ratio()).fold(f64::INFINITY, f64::min);
    let prediction = pairs.iter().map(|p| p.off.error_to_hqs_prediction).fold(0.0, f64::max);
    let detail = format!(
        "min bias ratio {min_ratio:.2e} >= 10; max gap to predicted fixed point {prediction:.2e} < 1e-6 ({})",
        worst(&checks)
    );
    let pass = checks.iter().all(|c| c.pass);
    assert!(report(
        "dual-off bias",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(10))
    ));
}

#[test]
fn lact_ablation_ordering() {
    let _g = serial();
    let cfg = ExperimentConfig {
        task: Task::Lact,
        ..Default::default()
    };
    let t = Instant::now();
    let rows = run_experiment(&cfg, Mode::Ablate, None).unwrap();
    let elapsed = t.elapsed();
    let problems = rows_improve(&rows);
    let verdicts = ablation_verdicts(&rows);
    assert_eq!(verdicts.len(), 1);
    let v = &verdicts[0];
    let detail = format!(
        "{}, {} seeds: HQS {:.3}, HQS+SH {:.3}, DC {:.3}, DC+SH {:.3} dB; need DC+SH >= DC > HQS{}",
        v.task,
        cfg.seeds.len(),
        v.hqs,
        v.hqs_sh,
        v.dc,
        v.full,
        if problems.is_empty() {
            String::new()
        } else {
            format!("; {}", problems.join("; "))
        }
    );
    let pass = problems.is_empty() && v.ordered();
    assert!(report(
        "ablation ordering",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(300))
    ));
}

#[test]
fn svct_full_at_50_meets_hqs_at_100() {
    let _g = serial();
    let cfg = ExperimentConfig {
        task: Task::Svct,
        sweep_variants: vec![VariantSpec::HQS, VariantSpec::FULL],
        nfe_sweep: vec![50, 100],
        ..Default::default()
    };
    let t = Instant::now();
    let rows = run_experiment(&cfg, Mode::SweepNfe, None).unwrap();
    let elapsed = t.elapsed();
    let problems = rows_improve(&rows);
    let verdicts = nfe_verdicts(&rows, VariantSpec::FULL);
    assert_eq!(verdicts.len(), 1);
    let v = &verdicts[0];
    let full50 = v.curve.iter().find(|c| c.0 == 50).map(|c| c.1).unwrap();
    let detail = format!(
        "{}, {} seeds: DC+SH at K=50 {:.3} dB vs HQS at K={} {:.3} dB{}",
        v.task,
        cfg.seeds.len(),
        full50,
        v.reference_budget,
        v.reference_psnr,
        if problems.is_empty() {
            String::new()
        } else {
            format!("; {}", problems.join("; "))
        }
    );
    let pass = problems.is_empty() && v.reference_budget == 100 && full50 >= v.reference_psnr;
    assert!(report(
        "convergence speed",
        pass,
        &detail,
        elapsed,
        Some(Duration::from_secs(300))
    ));
}

#[test]
fn ablate_is_deterministic() {
    let _g = serial();
    let cfg = ExperimentConfig::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let t = Instant::now();
    for d in &dirs {
        run_experiment(&cfg, Mode::Ablate, Some(d.path())).unwrap();
    }
    let elapsed = t.elapsed();
    let a = std::fs::read(dirs[0].path().join("metrics.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("metrics.csv")).unwrap();
    let detail = format!(
        "two {} ablate runs, metrics.csv {} and {} bytes, identical: {}",
        cfg.task,
        a.len(),
        b.len(),
        a == b
    );
    assert!(report("determinism", !a.is_empty() && a == b, &detail, elapsed, None));
}
