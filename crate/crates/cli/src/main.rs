use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dcpnp::harness::diagnostics::{
    certificate_checks, certify_suite, cg_oracle_gap, checks_csv, dot_test_suite, tweedie_sweep, whiteness_experiment,
    Check, WhitenessConfig,
};
use dcpnp::harness::{
    ablation_verdicts, nfe_verdicts, rows_improve, run_experiment, ExperimentConfig, MetricRow, Mode, Task,
};
use dcpnp::solver::VariantSpec;

#[derive(Parser)]
#[command(name = "dcpnp", version, about = "Dual-coupled PnP ADMM reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured variants over the configured seeds.
    Run(Common),
    /// Run the dual coupling × homogenization grid and check its ordering.
    Ablate(Common),
    /// Sweep the iteration budget for HQS and the full variant.
    SweepNfe(Common),
    /// Fixed-point certificates on random convex instances.
    Certify(Common),
    /// Adjoint checks for the shipped operators.
    DotTest(Common),
    /// Monte-Carlo check that homogenization whitens the residual.
    Whiteness(Common),
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Use a single seed instead of the configured list.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    /// e.g. `dual=on,inject=sh`; for `run` it replaces the variant list, for
    /// `sweep-nfe` it replaces the variant compared against HQS.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<VariantSpec>,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: dcpnp::Error| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<VariantSpec, String> {
    s.parse().map_err(|e: dcpnp::Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = self.task {
            cfg.task = t;
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn seed(&self) -> Result<u64> {
        Ok(match self.seed {
            Some(s) => s,
            None => self.config()?.seeds[0],
        })
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn print_rows(rows: &[MetricRow]) {
    println!(
        "{:<10} {:<24} {:>5} {:>5} {:>10} {:>8} {:>12} {:>9}",
        "task", "variant", "seed", "K", "PSNR", "SSIM", "residual", "time[s]"
    );
    for r in rows {
        match &r.error {
            None => println!(
                "{:<10} {:<24} {:>5} {:>5} {:>10.3} {:>8.4} {:>12.4e} {:>9.2}",
                r.task,
                r.variant.to_string(),
                r.seed,
                r.iterations,
                r.psnr,
                r.ssim,
                r.data_residual,
                r.wall_time_s
            ),
            Some(e) => println!(
                "{:<10} {:<24} {:>5} {:>5} error: {e}",
                r.task,
                r.variant.to_string(),
                r.seed,
                r.iterations
            ),
        }
    }
}

fn report_problems(problems: &[String]) -> bool {
    for p in problems {
        eprintln!("FAIL {p}");
    }
    problems.is_empty()
}

fn experiment(c: &Common, mode: Mode) -> Result<bool> {
    let mut cfg = c.config()?;
    if let Some(v) = c.variant {
        match mode {
            Mode::Run => cfg.variants = vec![v],
            Mode::SweepNfe => cfg.sweep_variants = vec![VariantSpec::HQS, v],
            Mode::Ablate => anyhow::bail!("ablate always runs the full variant grid; drop --variant"),
        }
    }
    let out = cfg.out_dir.clone();
    let rows = run_experiment(&cfg, mode, Some(&out))?;
    print_rows(&rows);
    let mut ok = report_problems(&rows_improve(&rows));

    match mode {
        Mode::Ablate => {
            for v in ablation_verdicts(&rows) {
                println!(
                    "{}: HQS {:.3}  HQS+SH {:.3}  DC {:.3}  DC+SH {:.3} dB (mean over seeds)",
                    v.task, v.hqs, v.hqs_sh, v.dc, v.full
                );
                let pass = v.ordered();
                if cfg.task == Task::Lact {
                    println!("{} ordering DC+SH >= DC > HQS on {}", verdict(pass), v.task);
                    ok &= pass;
                } else {
                    println!(
                        "info: ordering DC+SH >= DC > HQS {} on {}",
                        if pass { "holds" } else { "does not hold" },
                        v.task
                    );
                }
            }
        }
        Mode::SweepNfe => {
            let compared = *cfg.sweep_variants.last().unwrap_or(&VariantSpec::FULL);
            for v in nfe_verdicts(&rows, compared) {
                println!(
                    "{}: HQS at K={} reaches {:.3} dB",
                    v.task, v.reference_budget, v.reference_psnr
                );
                for (k, p) in &v.curve {
                    println!("  {} K={k}: {p:.3} dB", compared.label());
                }
                let pass = v.at_least_twice_as_fast();
                match v.budget_to_match() {
                    Some(k) => println!(
                        "{} matched at K={k} (needs K <= {})",
                        verdict(pass),
                        v.reference_budget / 2
                    ),
                    None => println!("{} never matched within the sweep", verdict(pass)),
                }
                ok &= pass;
            }
        }
        Mode::Run => {}
    }
    println!("outputs in {}", out.display());
    Ok(ok)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_checks(checks: &[Check], out: Option<&Path>, file: &str) -> Result<bool> {
    for c in checks {
        println!(
            "{} {:<40} {:>12.4e} (bound {:.1e})",
            verdict(c.pass),
            c.name,
            c.value,
            c.bound
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(file);
        std::fs::write(&path, checks_csv(checks)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn certify(c: &Common) -> Result<bool> {
    let seed = c.seed()?;
    let pairs = certify_suite(10, 16, seed)?;
    for p in &pairs {
        println!(
            "seed {:>3}: dual-on {} its, error {:.2e}; dual-off {} its, bias {:.3e} ({:.1e}x)",
            p.seed,
            p.on.iterations,
            p.on.error_to_minimizer,
            p.off.iterations,
            p.off.error_to_minimizer,
            p.bias_ratio()
        );
    }
    let mut checks = certificate_checks(&pairs);
    checks.push(Check::below("cg-vs-dense-12x12", cg_oracle_gap(20, 12, seed)?, 1e-8));
    checks.push(Check::below("tweedie-64x64", tweedie_sweep(64, seed)?, 1e-12));
    print_checks(&checks, c.out_dir(), "certify.csv")
}

fn dot_test(c: &Common) -> Result<bool> {
    print_checks(&dot_test_suite(c.seed()?)?, c.out_dir(), "dot_test.csv")
}

fn whiteness(c: &Common) -> Result<bool> {
    let cfg = c.config()?;
    let wc = WhitenessConfig {
        seed: c.seed()?,
        sh: cfg.sh,
        ..Default::default()
    };
    let r = whiteness_experiment(&wc)?;
    println!(
        "mean effective PSD / sigma^2 HW in [{:.4}, {:.4}]; CV after SH {:.4}, after naive {:.4}",
        r.min_ratio, r.max_ratio, r.cv_sh, r.cv_naive
    );
    print_checks(&r.checks(), c.out_dir(), "whiteness.csv")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => experiment(c, Mode::Run),
        Command::Ablate(c) => experiment(c, Mode::Ablate),
        Command::SweepNfe(c) => experiment(c, Mode::SweepNfe),
        Command::Certify(c) => certify(c),
        Command::DotTest(c) => dot_test(c),
        Command::Whiteness(c) => whiteness(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more assertions failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
