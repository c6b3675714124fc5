use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use mixnum_bench::{data, doubled_plan, reference_plan};
use mixnum_core::admm::{solve, AdmmConfig};
use mixnum_core::clipfilter::{design_filter_bank, filtered_compose, ns_icf_run};
use mixnum_core::transform::SubbandTransform;
use mixnum_core::waveform::{analyze_subband, compose};

fn bench_compose(c: &mut Criterion) {
    let plan = reference_plan();
    let x = data(&plan, 1);
    c.bench_function("compose/reference", |b| {
        b.iter(|| compose(&plan, black_box(&x)).unwrap())
    });

    let windowed = SubbandTransform::windowed_fraction(&plan, 0.04).unwrap();
    c.bench_function("compose/windowed", |b| {
        b.iter(|| windowed.compose(black_box(&x)).unwrap())
    });

    let bank = design_filter_bank(&plan, 128, 0.25).unwrap();
    c.bench_function("compose/filtered", |b| {
        b.iter(|| filtered_compose(&plan, &bank, black_box(&x)).unwrap())
    });
}

fn bench_analyze(c: &mut Criterion) {
    let plan = reference_plan();
    let x = data(&plan, 1);
    let s = compose(&plan, &x).unwrap();
    c.bench_function("analyze/reference", |b| {
        b.iter(|| {
            for i in 0..plan.num_subbands() {
                black_box(analyze_subband(&plan, &s, i).unwrap());
            }
        })
    });
}

fn solver_config() -> AdmmConfig {
    AdmmConfig {
        clip_ratio_db: 5.0,
        rho: 0.25,
        max_sweeps: 10,
        residual_tol: 0.0,
        adaptive_level: false,
    }
}

fn bench_solver(c: &mut Criterion) {
    let cfg = solver_config();
    for (label, plan) in [("reference", reference_plan()), ("doubled", doubled_plan())] {
        let transform = SubbandTransform::plain(&plan);
        let x = data(&plan, 1);
        c.bench_function(&format!("solve_10_sweeps/{label}"), |b| {
            b.iter_batched(
                || x.clone(),
                |x| solve(&transform, black_box(&x), &cfg).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

fn bench_clipping(c: &mut Criterion) {
    let plan = reference_plan();
    let x = data(&plan, 1);
    c.bench_function("ns_icf/6_executions", |b| {
        b.iter(|| ns_icf_run(&plan, black_box(&x), 5.0, 6).unwrap())
    });
}

criterion_group!(benches, bench_compose, bench_analyze, bench_solver, bench_clipping);
criterion_main!(benches);
