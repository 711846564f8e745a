use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use kernelforge::metrics::{zone_plate_experiment, ZonePlateSetup};
use kernelforge::optimizer::{optimize_kernel, DesignMetric, SearchConfig};
use kernelforge::polyalg::rational::rat;
use kernelforge::resample::{resample_2d, ResamplePlan};
use kernelforge::staircase::{eg_squared, eg_squared_numeric, QuadratureConfig};
use kernelforge::zoo::{reference_kernel, KernelName};
use kernelforge::{Image, KernelSpec, SolveOutcome};

fn symbolic(tr: u32, p: u32, smooth: bool) -> kernelforge::PiecewiseKernel {
    match kernelforge::kernelspace::solve_spec(&KernelSpec::new(tr, p, smooth).unwrap()) {
        SolveOutcome::Solved(s) => s.symbolic_kernel(),
        SolveOutcome::Overconstrained => unreachable!(),
    }
}

fn staircase(c: &mut Criterion) {
    let k33 = symbolic(6, 3, false);
    c.bench_function("eg_squared symbolic K_(3,3)", |b| b.iter(|| eg_squared(black_box(&k33), &rat(1, 2)).unwrap()));
    let keys = reference_kernel(&KernelName::KeysCubic).unwrap().numeric().unwrap();
    let quad = QuadratureConfig::default();
    c.bench_function("eg_squared numeric keys", |b| {
        b.iter(|| eg_squared_numeric(keys.as_ref(), black_box(0.5), &quad).unwrap())
    });
}

fn design(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimize_kernel");
    g.sample_size(10);
    for (tr, p, smooth) in [(4, 2, false), (6, 3, false)] {
        let spec = KernelSpec::new(tr, p, smooth).unwrap();
        g.bench_function(spec.label(), |b| {
            b.iter(|| optimize_kernel(&spec, DesignMetric::EgHalf, &SearchConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn resampling(c: &mut Criterion) {
    let img = Image::from_fn(128, 128, |x, y| ((x * 7 + y * 13) % 64) as f64 / 63.0);
    let mut g = c.benchmark_group("resample_2d 128 -> 384");
    for name in [KernelName::KeysCubic, KernelName::Lanczos(3), KernelName::BSplineInterp { degree: 3, truncation: 20 }]
    {
        let k = reference_kernel(&name).unwrap();
        let plan = ResamplePlan::new(k.resampler().unwrap(), rat(3, 1)).unwrap();
        g.bench_function(name.to_string(), |b| b.iter(|| resample_2d(black_box(&img), &plan, 384, 384).unwrap()));
    }
    g.finish();
}

fn zone_plate(c: &mut Criterion) {
    let setup = ZonePlateSetup::default();
    let keys: Arc<dyn kernelforge::Kernel> = reference_kernel(&KernelName::KeysCubic).unwrap().resampler().unwrap();
    let mut g = c.benchmark_group("zone plate");
    g.sample_size(20);
    g.bench_function("keys", |b| b.iter(|| zone_plate_experiment(Arc::clone(&keys), &setup).unwrap()));
    g.finish();
}

criterion_group!(benches, staircase, design, resampling, zone_plate);
criterion_main!(benches);
