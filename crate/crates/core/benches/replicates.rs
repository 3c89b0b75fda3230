use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levy_elliptic::diagnostics;
use levy_elliptic::parallel::Exec;
use levy_elliptic::solver::{eval_field_with, torsion_solution};
use levy_elliptic::spectral::enumerate_eigen;
use levy_elliptic::{Cutoff, FnDesc, HyperBox, LevyMeasure, LevyTriplet};

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn isometry_replicates(c: &mut Criterion) {
    let bx = HyperBox::unit(1).unwrap();
    let t = LevyTriplet::pure_jump(LevyMeasure::AlphaStable { alpha: 1.5 }).unwrap();
    let f = FnDesc::indicator(vec![(0.0, 1.0)]);
    let mut g = c.benchmark_group("isometry_replicates");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, 5000), |b| {
            b.iter(|| diagnostics::isometry_test(&t, &bx, 0.1, &f, 5000, 11, exec).unwrap())
        });
    }
    g.finish();
}

fn field_evaluation(c: &mut Criterion) {
    let bx = HyperBox::unit(2).unwrap();
    let system = Arc::new(enumerate_eigen(&bx, Cutoff::Count(4000)).unwrap());
    let field = torsion_solution(&bx, &system).unwrap();
    let points: Vec<Vec<f64>> = (0..256)
        .map(|i| vec![(i % 16) as f64 / 16.0 + 0.03, (i / 16) as f64 / 16.0 + 0.03])
        .collect();
    let mut g = c.benchmark_group("field_evaluation");
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, points.len()), |b| {
            b.iter(|| eval_field_with(black_box(&field), &points, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, isometry_replicates, field_evaluation);
criterion_main!(benches);
