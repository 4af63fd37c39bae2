use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use thzra_core::analytics::{delay_ftp, energy_atp};
use thzra_core::protocol::{run_batch, run_frame, BatchSpec, Population};
use thzra_core::validation::bound_sweep;
use thzra_core::{Component, EnergyModel, Scheme, SeedTree};

fn frames(c: &mut Criterion) {
    let mut g = c.benchmark_group("frame");
    for k in [10u32, 40, 200] {
        for scheme in [Scheme::Ftp, Scheme::Atp] {
            let mut rng = SeedTree::new(1).stream(0, Component::Access);
            g.bench_with_input(BenchmarkId::new(scheme.as_str(), k), &k, |b, &k| {
                b.iter(|| run_frame(scheme, k, &mut rng).total_slots)
            });
        }
    }
    g.finish();
}

fn batches(c: &mut Criterion) {
    let spec = BatchSpec {
        scheme: Scheme::Atp,
        energy_model: EnergyModel::Unit,
        trials: 5000,
        population: Population::Active(10),
    };
    c.bench_function("batch_atp_k10_5000", |b| b.iter(|| run_batch(black_box(&spec), 7).stats.mean_delay()));
}

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    g.bench_function("delay_ftp_1e4", |b| b.iter(|| delay_ftp(black_box(10_000))));
    g.bench_function("energy_atp_1e4", |b| b.iter(|| energy_atp(black_box(10_000))));
    let ks: Vec<u64> = (3..=1000).collect();
    g.bench_function("bound_sweep_3_1000", |b| b.iter(|| bound_sweep(black_box(&ks)).len()));
    g.finish();
}

criterion_group!(benches, frames, batches, series);
criterion_main!(benches);
