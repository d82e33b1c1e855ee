use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use d2dmimo::channel::sample_fading;
use d2dmimo::csi::CsiFading;
use d2dmimo::pzf::{sample_sinr, CancelTargets};
use d2dmimo::{
    build_hex_layout, contaminated_se_unconditioned, pzf_filter, DetectionTarget, DropSpec,
    EstimatedCsi, FadingMode, LinkBudget, LinkSet, NetworkDrop, PzfParams, TrainingMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(radius: f64) -> DropSpec {
    DropSpec {
        ues_per_cell: 8,
        lambda: 12.0 / (PI * 500.0 * 500.0),
        d2d_distance: 20.0,
        region_radius: radius,
        sigma_db: 7.0,
    }
}

fn filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("pzf_filter");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in [64usize, 256, 1024] {
        let desired = sample_fading(m, &mut rng);
        let canceled: Vec<_> = (0..10).map(|_| sample_fading(m, &mut rng)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| pzf_filter(black_box(&desired), black_box(&canceled)).unwrap())
        });
    }
    group.finish();
}

fn drops(c: &mut Criterion) {
    let layout = build_hex_layout(2, 500.0);
    let spec = spec(3.0 * layout.circumradius());
    let mut seed = 0;
    c.bench_function("network_drop_generate", |b| {
        b.iter(|| {
            seed += 1;
            NetworkDrop::generate(&layout, &spec, seed).unwrap()
        })
    });
}

fn perfect_csi(c: &mut Criterion) {
    let layout = build_hex_layout(2, 500.0);
    let drop = NetworkDrop::generate(&layout, &spec(3.0 * layout.circumradius()), 3).unwrap();
    let links = LinkSet::build(
        &drop,
        DetectionTarget::Cellular { k: 0 },
        &LinkBudget::default(),
    )
    .unwrap();
    let targets = CancelTargets::from_links(&links, &PzfParams::new(3, 2, 100));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("sample_sinr");
    for (name, mode) in [
        ("projected", FadingMode::Projected),
        ("full", FadingMode::Full),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| sample_sinr(&links, &targets, 100, mode, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn estimated_csi(c: &mut Criterion) {
    let layout = build_hex_layout(2, 500.0);
    let drop = NetworkDrop::generate(&layout, &spec(3.0 * layout.circumradius()), 4).unwrap();
    let est = EstimatedCsi::new(&drop, &LinkBudget::default(), TrainingMode::Active).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    c.bench_function("estimated_csi_sample_m256", |b| {
        b.iter(|| est.sample(256, CsiFading::Projected, &mut rng).unwrap())
    });
}

fn large_array_integral(c: &mut Criterion) {
    let layout = build_hex_layout(2, 500.0);
    let budget = LinkBudget::default();
    let lambda = 4.0 / (PI * 500.0 * 500.0);
    c.bench_function("contaminated_se_unconditioned", |b| {
        b.iter(|| contaminated_se_unconditioned(&layout, &budget, black_box(lambda)).unwrap())
    });
}

criterion_group!(
    benches,
    filter,
    drops,
    perfect_csi,
    estimated_csi,
    large_array_integral
);
criterion_main!(benches);
