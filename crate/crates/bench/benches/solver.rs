use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use schro_core::commutator::{trial_fields, trial_ratio, CommutatorOp, CommutatorTrial, EnsembleGrid};
use schro_core::free_bvp::{solve_free, FreeBvpData};
use schro_core::random::{random_field, FieldKind};
use schro_core::scenario::ScenarioConfig;
use schro_core::spacetime::uniform_times;
use schro_core::spectral::project;
use schro_core::stepper::{solve_linear, Direction, LinearProblem, StepperConfig};
use schro_core::{Grid1D, Multiplier, Sign, SpectralField};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [512usize, 2048, 8192] {
        let grid = Grid1D::new(n, 40.0).unwrap();
        let f = random_field(&grid, n / 3, FieldKind::Complex, false, 1);
        group.bench_with_input(BenchmarkId::new("round_trip", n), &f, |b, f| {
            b.iter(|| SpectralField::from_coeffs(&grid, black_box(f).coeffs()).unwrap())
        });
        let h = Multiplier::hilbert(&grid);
        group.bench_with_input(BenchmarkId::new("hilbert", n), &f, |b, f| {
            b.iter(|| h.apply(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn free_bvp(c: &mut Criterion) {
    let grid = Grid1D::new(2048, 40.0).unwrap();
    let f = project(&random_field(&grid, 400, FieldKind::Complex, false, 2), Sign::Minus);
    let g = project(&random_field(&grid, 400, FieldKind::Complex, false, 3), Sign::Plus);
    let data = FreeBvpData::new(f, g, 1.0, 1.0, uniform_times(0.0, 1.0, 64)).unwrap();
    c.bench_function("free_bvp/n2048_64_slices", |b| {
        b.iter(|| solve_free(black_box(&data)).unwrap())
    });
}

fn linear(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::preset("benchmark").unwrap();
    cfg.grid.n = 512;
    let p = cfg.build(None).unwrap().problem;
    let lp = LinearProblem {
        direction: Direction::Forward,
        coeffs: p.coeffs.clone(),
        weight: p.weight.clone(),
        source: None,
        datum: p.f.clone(),
        horizon: p.horizon,
    };
    let stepper = StepperConfig {
        dt: Some(p.horizon / 256.0),
        ..p.stepper.clone()
    };
    let mut group = c.benchmark_group("linear");
    group.sample_size(10);
    group.bench_function("benchmark_n512_256_steps", |b| {
        b.iter(|| solve_linear(black_box(&lp), &stepper).unwrap())
    });
    group.finish();
}

fn commutator(c: &mut Criterion) {
    let eg = EnsembleGrid::default();
    let grid = Grid1D::new(eg.n, eg.half_length).unwrap();
    let (a, f) = trial_fields(&grid, &eg, 5, 0);
    let trial = CommutatorTrial {
        operator: CommutatorOp::Pplus,
        a,
        f,
        l: 1,
        m: 1,
        p: 2.0,
    };
    c.bench_function("commutator/pplus_l1_m1", |b| {
        b.iter(|| trial_ratio(black_box(&trial)).unwrap())
    });
}

criterion_group!(benches, transforms, free_bvp, linear, commutator);
criterion_main!(benches);
