use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use sobtc_core::avalanche::{AvalancheLabeler, AvalancheOptions};
use sobtc_core::lattice::{dornic_sample, InitialCondition, Simulation};
use sobtc_core::observables::{autocorrelation, spectrum};
use sobtc_core::{Geometry, LatticeConfig, ModelParams};

fn lattice_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice_step");
    for (d, l, rho) in [(3, 16, 1e-6), (3, 16, 0.5), (3, 32, 0.5), (2, 64, 0.5)] {
        let cfg = LatticeConfig { d, l, init: InitialCondition { rho, n: 2.6 }, ..Default::default() };
        let mut sim = Simulation::new(cfg, ModelParams::default()).unwrap();
        g.throughput(Throughput::Elements(sim.geometry().n_sites() as u64));
        g.bench_function(BenchmarkId::from_parameter(format!("d{d}_L{l}_rho{rho}")), |b| b.iter(|| sim.step().unwrap()));
    }
    g.finish();
}

fn kernel(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let mut g = c.benchmark_group("dornic_sample");
    for (name, rho0, beta) in [("absorbing", 0.0, 2.6e-7), ("active", 0.8, 2.6e-7)] {
        g.bench_function(name, |b| {
            b.iter(|| dornic_sample(black_box(rho0), -0.2, beta, 1.3, 0.05, &mut rng).unwrap())
        });
    }
    g.finish();
}

fn avalanches(c: &mut Criterion) {
    let geom = Geometry::new(3, 32).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let frames: Vec<Vec<f64>> = (0..16)
        .map(|_| (0..geom.n_sites()).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut g = c.benchmark_group("avalanche_labeling");
    g.throughput(Throughput::Elements((geom.n_sites() * frames.len()) as u64));
    g.bench_function("d3_L32_16_frames", |b| {
        b.iter(|| {
            let mut lab = AvalancheLabeler::new(geom, AvalancheOptions::default()).unwrap();
            for (k, f) in frames.iter().enumerate() {
                lab.push_frame(f, k as f64).unwrap();
            }
            black_box(lab.finish())
        })
    });
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let x: Vec<f64> = (0..1 << 15).map(|t| 2.5 + (t as f64 * 0.03).sin()).collect();
    c.bench_function("autocorrelation_32k", |b| b.iter(|| autocorrelation(black_box(&x), x.len() / 2).unwrap()));
    c.bench_function("spectrum_32k", |b| b.iter(|| spectrum(black_box(&x), 1.0, 3.0).unwrap()));
}

criterion_group!(benches, lattice_step, kernel, avalanches, analysis);
criterion_main!(benches);
