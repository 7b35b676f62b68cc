use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use e1lab_bench::{form, pair};
use e1lab_core::geodesics::{segment_solve_with, GeodesicOptions, GeodesicScheme};
use e1lab_core::{d1, envelope_below_with, min_obstacle, EnvelopeMethod, EnvelopeOptions};

fn envelopes(c: &mut Criterion) {
    let mut g = c.benchmark_group("envelope");
    for n in [64, 256, 1024] {
        let f = form(n);
        let (u, v) = pair(&f, 1);
        let ob = min_obstacle(&u, &v);
        for method in [EnvelopeMethod::Hull, EnvelopeMethod::ProjectedSor] {
            if method == EnvelopeMethod::ProjectedSor && n > 256 {
                continue;
            }
            let opts = EnvelopeOptions {
                method,
                ..Default::default()
            };
            g.bench_with_input(BenchmarkId::new(format!("{method:?}"), n), &n, |b, _| {
                b.iter(|| envelope_below_with(&f, black_box(&ob), &opts))
            });
        }
    }
    g.finish();
}

fn distance(c: &mut Criterion) {
    let mut g = c.benchmark_group("d1");
    for n in [64, 256, 1024] {
        let f = form(n);
        let (u, v) = pair(&f, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| d1(&f, black_box(&u), black_box(&v)))
        });
    }
    g.finish();
}

fn geodesics(c: &mut Criterion) {
    let mut g = c.benchmark_group("segment_solve");
    g.sample_size(10);
    let f = form(64);
    let (u, v) = pair(&f, 3);
    for scheme in [GeodesicScheme::Hull, GeodesicScheme::LatticeStencil] {
        let opts = GeodesicOptions {
            scheme,
            ..Default::default()
        };
        g.bench_function(format!("{scheme:?}/64x16"), |b| {
            b.iter(|| segment_solve_with(&f, black_box(&u), black_box(&v), 1.0, 16, &opts))
        });
    }
    g.finish();
}

criterion_group!(benches, envelopes, distance, geodesics);
criterion_main!(benches);
