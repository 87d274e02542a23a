use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use roughlab::dyadic::{cz_decompose, hl_maximal};
use roughlab::littlewood_paley::{build_lp_family, reproduce, SquareFlavor};
use roughlab::lorentz::lorentz_norm;
use roughlab::LorentzExponents;
use roughlab_bench::{blob, random_band, sparse_mass};

fn bench_spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [128usize, 256, 512] {
        let f = blob(n, 16.0);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::new("spectrum", n), &f, |b, f| b.iter(|| black_box(f.spectrum())));
        let table = f.symbol_table(|xi| (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt().into()).unwrap();
        group.bench_with_input(BenchmarkId::new("apply_table", n), &f, |b, f| b.iter(|| black_box(f.apply_table(&table))));
    }
    group.finish();
}

fn bench_lorentz(c: &mut Criterion) {
    let mut group = c.benchmark_group("lorentz");
    let e = LorentzExponents::new(1.0, 2.0).unwrap();
    for n in [128usize, 512] {
        let f = random_band(n, 16.0, 0.1, 0.5, 1);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::new("norm_1_2", n), &f, |b, f| b.iter(|| lorentz_norm(black_box(f), e)));
    }
    group.finish();
}

fn bench_littlewood_paley(c: &mut Criterion) {
    let mut group = c.benchmark_group("littlewood_paley");
    group.sample_size(10);
    group.bench_function("build_2d_r1", |b| b.iter(|| build_lp_family(2, 1, 8, 0.25, 0.75).unwrap()));
    let fam = build_lp_family(2, 1, 8, 0.25, 0.75).unwrap();
    let f = random_band(256, 0.75, 0.2, 0.9, 2);
    group.bench_function("reproduce_256", |b| b.iter(|| reproduce(black_box(&f), &fam).unwrap()));
    group.finish();
}

fn bench_dyadic(c: &mut Criterion) {
    let mut group = c.benchmark_group("dyadic");
    for n in [64usize, 256] {
        let f = sparse_mass(n, 16.0);
        group.bench_with_input(BenchmarkId::new("cz_decompose", n), &f, |b, f| b.iter(|| cz_decompose(black_box(f), 1.0).unwrap()));
        group.bench_with_input(BenchmarkId::new("hl_parabolic", n), &f, |b, f| {
            b.iter(|| hl_maximal(black_box(f), SquareFlavor::Parabolic { m: 2.0 }))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_spectral, bench_lorentz, bench_littlewood_paley, bench_dyadic);
criterion_main!(benches);
