use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use projrgg::{
    build_rgg, enumerate_crossings, sample_poisson_process, stress_total, ProjectionPlane, Regime, RegimeSpec,
    RngStream, StressWeight, Window,
};

fn points(t: f64) -> projrgg::PointSet {
    let w = Window::cube(3).unwrap();
    sample_poisson_process(&w, t, &mut RngStream::new(1, 0).rng()).unwrap()
}

fn thermodynamic_delta(t: f64) -> f64 {
    RegimeSpec::new(Regime::Thermodynamic { c: 1.0 }, 3).unwrap().delta_for(t).unwrap()
}

fn rgg(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_rgg");
    for t in [1000.0, 10_000.0] {
        let pts = points(t);
        let delta = thermodynamic_delta(t);
        g.bench_with_input(BenchmarkId::from_parameter(t), &pts, |b, pts| {
            b.iter(|| build_rgg(pts.clone(), delta).unwrap())
        });
    }
    g.finish();
}

fn crossings(c: &mut Criterion) {
    let plane = ProjectionPlane::coordinate(3);
    let mut g = c.benchmark_group("enumerate_crossings");
    for t in [1000.0, 10_000.0] {
        let graph = build_rgg(points(t), thermodynamic_delta(t)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(t), &graph, |b, graph| {
            b.iter(|| enumerate_crossings(graph, &plane))
        });
    }
    g.finish();
}

fn stress(c: &mut Criterion) {
    let plane = ProjectionPlane::coordinate(3);
    let mut g = c.benchmark_group("stress_total");
    g.sample_size(20);
    for t in [1000.0, 4000.0] {
        let pts = points(t);
        g.bench_with_input(BenchmarkId::from_parameter(t), &pts, |b, pts| {
            b.iter(|| stress_total(pts, &plane, &StressWeight::InverseSq))
        });
    }
    g.finish();
}

criterion_group!(benches, rgg, crossings, stress);
criterion_main!(benches);
