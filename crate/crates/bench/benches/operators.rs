use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use roughlab::curve_ops::{hilbert_along, measure_decay};
use roughlab::rough_ops::{apply_t, lacunary_omega, polar_norms, PolarOptions};
use roughlab::stopping_time::fuzz_trial;
use roughlab::{LorentzExponents, MultiIndexGamma};
use roughlab_bench::{blob, random_band};

fn bench_rough(c: &mut Criterion) {
    let mut group = c.benchmark_group("rough_ops");
    group.sample_size(10);
    let f = random_band(256, 64.0, 0.1, 0.6, 3);
    for n_big in [1usize, 2] {
        let omega = lacunary_omega(n_big, 8, 1024).unwrap();
        group.bench_with_input(BenchmarkId::new("apply_t_256", n_big), &omega, |b, om| {
            b.iter(|| apply_t(om, black_box(&f), (-4, 3)).unwrap())
        });
    }
    let exps = [LorentzExponents::new(1.0, 1.0).unwrap(), LorentzExponents::new(1.0, 2.0).unwrap()];
    group.bench_function("polar_norms_n4", |b| b.iter(|| polar_norms(4, 8, &exps, &PolarOptions::default()).unwrap()));
    group.finish();
}

fn bench_curves(c: &mut Criterion) {
    let mut group = c.benchmark_group("curve_ops");
    group.sample_size(10);
    for n in [128usize, 256] {
        let f = blob(n, 32.0);
        group.bench_with_input(BenchmarkId::new("hilbert_along", n), &f, |b, f| {
            b.iter(|| hilbert_along(black_box(f), 2.0, (0, 3)).unwrap())
        });
    }
    group.bench_function("measure_decay_r64", |b| {
        b.iter(|| measure_decay(MultiIndexGamma::zero(), 2.0, &[16.0, 64.0]).unwrap())
    });
    group.finish();
}

fn bench_stopping(c: &mut Criterion) {
    let mut group = c.benchmark_group("stopping_time");
    for max_size in [20usize, 60] {
        group.bench_with_input(BenchmarkId::new("fuzz_trial", max_size), &max_size, |b, &m| {
            b.iter(|| (0..16).map(|t| fuzz_trial(t, m, 9).selected).sum::<usize>())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rough, bench_curves, bench_stopping);
criterion_main!(benches);
