use criterion::{black_box, criterion_group, criterion_main, Criterion};

use sdo::bifurcation::cycle_from_state;
use sdo::blowup::{ChartId, ChartName, Stage};
use sdo::charts::{sphere_field, ScaledSystem};
use sdo::model::full_field;
use sdo::numerics::cycles::CycleConfig;
use sdo::numerics::ode::{integrate, IntegratorConfig};
use sdo::sphere::{shoot, ShootConfig, Side};
use sdo::verify::verify_geometry;
use sdo_bench::{full, gamma_k1};

fn fields(c: &mut Criterion) {
    let (p, sig) = full(1.0, 0.0, 0.0064);
    let f = full_field(&p, &sig);
    c.bench_function("full_field", |b| b.iter(|| f(black_box(&[0.97, 1.2]))));
    let sys = ScaledSystem::new(gamma_k1(), -0.7, 0.0);
    let chart = ChartId { stage: Stage::SphereL, name: ChartName::YbarNeg1 };
    c.bench_function("sphere_field", |b| b.iter(|| sphere_field(chart, &sys, black_box([0.1, 0.4, 0.9])).unwrap()));
}

fn integration(c: &mut Criterion) {
    let (p, sig) = full(1.0, 0.0, 0.0064);
    let f = full_field(&p, &sig);
    c.bench_function("integrate_relaxation_t50", |b| {
        b.iter(|| integrate(&f, black_box([0.5, 1.0]), 0.0, 50.0, IntegratorConfig::default()).unwrap())
    });
}

fn searches(c: &mut Criterion) {
    let mut g = c.benchmark_group("searches");
    g.sample_size(10);
    let (p, sig) = full(1.0, 0.0, 0.0064);
    let f = full_field(&p, &sig);
    g.bench_function("relaxation_cycle", |b| {
        b.iter(|| cycle_from_state(&f, black_box([0.3, 1.0]), &CycleConfig::default()).unwrap().unwrap())
    });
    let gm = gamma_k1();
    let cfg = ShootConfig::default();
    g.bench_function("single_shot_left", |b| b.iter(|| shoot(Side::L, &gm, 0.0, black_box(-0.75), cfg.seed, &cfg, false).unwrap()));
    g.bench_function("geometry_suite_k2", |b| b.iter(|| verify_geometry(2, 100, 1000, black_box(1)).unwrap()));
    g.finish();
}

criterion_group!(benches, fields, integration, searches);
criterion_main!(benches);
