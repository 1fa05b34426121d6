//! Kernel timings for the rayon backend and the sequential fallback.
//!
//! Benchmark ids carry the backend name, so running once with default
//! features and once with `--no-default-features` leaves both sets side by
//! side in the criterion report. The rayon build additionally times each
//! kernel inside a one-thread pool.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dcpnp::exec;
use dcpnp::harness::{build_instances, plan_rows, run_rows, ExperimentConfig, Mode, Task};
use dcpnp::operators::{make_limited_angle_geometry, LinearOperator, RadonOperator};
use dcpnp::priors::{Denoiser, TvDenoiser, TvScaling};
use dcpnp::spectral::{homogenize, ShConfig};
use dcpnp::{RealGrid, SeededRng};

fn backend() -> &'static str {
    if exec::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn with_backend<R>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f);
    }
    let _ = threads;
    f()
}

fn variants() -> Vec<(String, Option<usize>)> {
    let mut v = vec![(backend().to_string(), None)];
    if exec::is_parallel() {
        v.push(("rayon-1-thread".to_string(), Some(1)));
    }
    v
}

fn kernels(c: &mut Criterion) {
    let side = 128;
    let op = RadonOperator::new(make_limited_angle_geometry(90, 90.0, side).unwrap());
    let mut rng = SeededRng::new(1);
    let img = rng.white_gaussian(side, side, 1.0).unwrap();
    let sino = op.apply(&img).unwrap();
    let tv = TvDenoiser::new(0.5, 50, TvScaling::Sigma).unwrap();
    let z_prev = RealGrid::zeros(side, side);
    let sh = ShConfig::default();

    let mut g = c.benchmark_group("kernels");
    g.sample_size(20);
    for (name, threads) in variants() {
        g.bench_function(BenchmarkId::new("radon_forward_lact90_128", &name), |b| {
            with_backend(threads, || b.iter(|| op.apply(black_box(&img)).unwrap()))
        });
        g.bench_function(BenchmarkId::new("radon_adjoint_lact90_128", &name), |b| {
            with_backend(threads, || b.iter(|| op.adjoint(black_box(&sino)).unwrap()))
        });
        g.bench_function(BenchmarkId::new("tv_prox_50_128", &name), |b| {
            with_backend(threads, || b.iter(|| tv.denoise(black_box(&img), 1.0, 500).unwrap()))
        });
        g.bench_function(BenchmarkId::new("homogenize_128", &name), |b| {
            with_backend(threads, || {
                let mut r = SeededRng::new(2);
                b.iter(|| homogenize(black_box(&img), &z_prev, 1.0, &sh, &mut r).unwrap())
            })
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let mut cfg = ExperimentConfig {
        task: Task::Svct,
        seeds: vec![0, 1, 2, 3],
        ..Default::default()
    };
    cfg.phantom.side = 64;
    cfg.schedule.iterations = 5;
    let instances = build_instances(&cfg, Task::Svct).unwrap();
    let plans = plan_rows(&cfg, instances.len(), Mode::Run);

    let mut g = c.benchmark_group("batch");
    g.sample_size(10);
    for (name, threads) in variants() {
        g.bench_function(BenchmarkId::new("svct20_64_k5_4_seeds", &name), |b| {
            with_backend(threads, || {
                b.iter(|| run_rows(&cfg, &instances, black_box(&plans), None))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, batch);
criterion_main!(benches);
