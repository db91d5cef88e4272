use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stepwise_bench::{critical_point, ising, lz, qubit, qubit_point};
use stepwise_core::bayes::{MarginalTable, Target};
use stepwise_core::bounds::classify_region;
use stepwise_core::fisher::evaluate_qfim;
use stepwise_core::models::ising_state;
use stepwise_core::scan::run_scan;
use stepwise_core::{
    ModelKind, ModelSetup, ParamPoint, PosteriorGrid, Qfim, ScanAxis, ScanSpec, StateModel,
};

fn eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("ising_ground_state");
    for length in [6, 8, 10] {
        let cfg = ising(length);
        group.bench_function(format!("L{length}"), |b| {
            b.iter(|| ising_state(&cfg, black_box(ParamPoint::new(1.9, 0.28))).unwrap())
        });
    }
    group.finish();
}

fn qfim(c: &mut Criterion) {
    let mut group = c.benchmark_group("qfim");
    let q = qubit();
    group.bench_function("qubit", |b| {
        b.iter(|| evaluate_qfim(|p| q.sample(p), black_box(qubit_point())).unwrap())
    });
    let l = lz();
    group.bench_function("lz", |b| {
        b.iter(|| evaluate_qfim(|p| l.sample(p), black_box(critical_point())).unwrap())
    });
    let i = ising(10);
    group.bench_function("ising_L10", |b| {
        b.iter(|| evaluate_qfim(|p| i.sample(p), black_box(ParamPoint::new(1.9, 0.28))).unwrap())
    });
    group.finish();
}

fn bounds(c: &mut Criterion) {
    let q = Qfim::new(2.0, 1.7, 1.6);
    c.bench_function("classify_region", |b| {
        b.iter(|| classify_region(black_box(&q)))
    });
}

fn scan(c: &mut Criterion) {
    let mut setup = ModelSetup::new(ModelKind::Qubit);
    setup.point = ParamPoint::new(0.5, 0.5);
    let spec = ScanSpec {
        setup,
        axis1: ScanAxis::new("alpha", 0.0, PI, 21),
        axis2: ScanAxis::new("beta", 0.0, 2.0 * PI, 21).open(),
    };
    c.bench_function("scan_qubit_21x21", |b| {
        b.iter(|| run_scan(black_box(&spec), 1).unwrap())
    });
}

fn marginal_refresh(c: &mut Criterion) {
    let model = qubit();
    let truth = qubit_point();
    let grid1 = PosteriorGrid::centered(truth.lambda1, PI / 5.0, 1000).unwrap();
    let grid2 = PosteriorGrid::centered(truth.lambda2, PI / 5.0, 1000).unwrap();
    let table = MarginalTable::build(
        &model,
        &model.measurement1(),
        Target::Lambda1,
        &grid1,
        &grid2,
    )
    .unwrap();
    c.bench_function("marginal_refresh_1000x1000", |b| {
        b.iter(|| {
            table
                .log_likelihood(black_box(&[4300, 5300]), &grid2)
                .unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = eigensolve, qfim, bounds, scan, marginal_refresh
}
criterion_main!(benches);
