use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdaindex::filtration::distance_matrix_of;
use tdaindex::{
    compute_persistence, landscape_distance, landscape_from_diagram, turbulence_index, vr_filtration, wasserstein,
    EssentialPolicy, IndexConfig, PersistenceDiagram, ReturnSeries,
};

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn diagram(rng: &mut ChaCha8Rng, n: usize) -> PersistenceDiagram {
    PersistenceDiagram::from_points(
        1,
        (0..n).map(|_| {
            let b: f64 = rng.random_range(0.0..1.0);
            (b, b + rng.random_range(0.0..0.5))
        }),
    )
}

fn persistence(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("vr_persistence_h1");
    for n in [25, 50, 100] {
        let points = cloud(&mut rng, n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, pts| {
            b.iter(|| {
                let f = vr_filtration(&distance_matrix_of(pts), 2).unwrap();
                compute_persistence(&f, &[1]).unwrap()
            })
        });
    }
    group.finish();
}

fn landscapes(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (a, b) = (diagram(&mut rng, 40), diagram(&mut rng, 40));
    c.bench_function("landscape_l2_distance_40", |bench| {
        bench.iter(|| {
            let la = landscape_from_diagram(black_box(&a), EssentialPolicy::DropEssential).unwrap();
            let lb = landscape_from_diagram(black_box(&b), EssentialPolicy::DropEssential).unwrap();
            landscape_distance(&la, &lb, 2)
        })
    });
}

fn diagram_metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("wasserstein_p1");
    for n in [10, 40, 100] {
        let pair = (diagram(&mut rng, n), diagram(&mut rng, n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &pair, |b, (x, y)| b.iter(|| wasserstein(x, y, 1).unwrap()));
    }
    group.finish();
}

fn index(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let n = 300;
    let returns = ReturnSeries::new(
        "bench",
        start.iter_days().take(n).collect(),
        (0..n).map(|_| rng.random_range(-0.02..0.02)).collect(),
    );
    let cfg = IndexConfig::new(3, 2, 50, 5, 1);
    let mut group = c.benchmark_group("turbulence_index");
    group.sample_size(10);
    group.bench_function("d3_tau2_w50_T5_dim1_n300", |b| b.iter(|| turbulence_index(&returns, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, persistence, landscapes, diagram_metrics, index);
criterion_main!(benches);
