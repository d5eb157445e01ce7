use std::f64::consts::FRAC_PI_4;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use preamp_core::amplifiers::preamp_number_weight;
use preamp_core::density::linspace;
use preamp_core::heterodyne::QFunction;
use preamp_core::verification::{bch_coefficients, BchInput};
use preamp_core::{
    default_grid, fock_to_grid, heterodyne_sample, k_amplifier_apply, preamp_number_density, Efficiency, FockDim,
    MonteCarloOptions, StateSpec,
};

fn number_weight(c: &mut Criterion) {
    c.bench_function("number_weight/n12_g1000", |b| {
        b.iter(|| preamp_number_weight(black_box(12), black_box(1000), black_box(12.01)))
    });
    let rho = StateSpec::MeanPhotons(12.0).to_density(FockDim::new(64).unwrap()).unwrap();
    let h = linspace(0.0, 30.0, 6001);
    c.bench_function("number_density/comb_6001", |b| {
        b.iter(|| preamp_number_density(&rho, 1000, Efficiency::unit(), &h, MonteCarloOptions::default()).unwrap())
    });
}

fn q_function(c: &mut Criterion) {
    let mut group = c.benchmark_group("q_eval");
    for d in [32usize, 64] {
        let rho = StateSpec::Coherent(Complex64::new(1.5, 0.5)).to_density(FockDim::new(d).unwrap()).unwrap();
        let q = QFunction::new(&rho);
        group.bench_with_input(BenchmarkId::from_parameter(d), &q, |b, q| {
            b.iter(|| q.eval(black_box(Complex64::new(0.7, -0.3))))
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let rho = StateSpec::MeanPhotons(4.0).to_density(FockDim::new(48).unwrap()).unwrap();
    c.bench_function("heterodyne_sample/10k", |b| {
        b.iter(|| heterodyne_sample(&rho, 10_000, Efficiency::new(0.8).unwrap(), 1).unwrap())
    });
}

fn k_amplifier(c: &mut Criterion) {
    let grid = default_grid();
    let psi = StateSpec::Coherent(Complex64::from_polar(1.0, FRAC_PI_4)).to_fock(FockDim::new(48).unwrap()).unwrap();
    let gpsi = fock_to_grid(&psi, &grid).unwrap();
    c.bench_function("k_amplify/g8", |b| b.iter(|| k_amplifier_apply(&gpsi, black_box(8.0)).unwrap()));
    c.bench_function("fock_to_grid/d48", |b| b.iter(|| fock_to_grid(&psi, &grid).unwrap()));
}

fn bch(c: &mut Criterion) {
    let input = BchInput::asymptotic(1.0, 1.0, 1e3);
    c.bench_function("bch/asymptotic", |b| b.iter(|| bch_coefficients(black_box(input)).unwrap()));
}

criterion_group!(benches, number_weight, q_function, sampling, k_amplifier, bch);
criterion_main!(benches);
