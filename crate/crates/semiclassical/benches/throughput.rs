use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use semiclassical::dynamics::{tunneling_sweep, BarrierSpec, IntegratorOptions, SweepParam, TunnelModel};
use semiclassical::realizations::closure_certificate;
use semiclassical::thermo::ensemble_grid;
use semiclassical::{Exec, Realization, RealizationKind};

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn closure(c: &mut Criterion) {
    let r = Realization::new(RealizationKind::Order3Systematic);
    let mut g = c.benchmark_group("closure_certificate");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| closure_certificate(black_box(&r), 200, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let betas: Vec<f64> = (0..16).map(|i| 0.1 * 1.5f64.powi(i)).collect();
    let omegas: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let mut g = c.benchmark_group("ensemble_grid");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| ensemble_grid(black_box(&betas), &omegas, 1.0, exec))
        });
    }
    g.finish();
}

fn tunneling(c: &mut Criterion) {
    let spec = BarrierSpec::new(1.0, 0.2, 0.25);
    let gammas: Vec<f64> = (1..=16).map(|i| 0.05 * i as f64).collect();
    let opts = IntegratorOptions::with_tol(1e-8);
    let mut g = c.benchmark_group("tunneling_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| tunneling_sweep(&spec, TunnelModel::Order2, SweepParam::Gamma, black_box(&gammas), 20.0, &opts, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, closure, ensemble, tunneling);
criterion_main!(benches);
