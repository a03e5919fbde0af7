use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use epbs::fock::build_hamiltonian;
use epbs::observables::{lin_space, make_input, steady_onset, trace_evolution, InputKind};
use epbs::spectral::numeric_spectrum;
use epbs::{exec, BeamsplitterParams, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn evolution_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace_evolution");
    let grid = lin_space(0.0, 50.0, 2000);
    for n in [4usize, 16] {
        let params = BeamsplitterParams::new(1.0, 1.0, 1.2, n).unwrap();
        let input = make_input(InputKind::Noon, n, None).unwrap();
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| trace_evolution(black_box(&input), &params, &grid, mode).unwrap())
            });
        }
    }
    group.finish();
}

fn spectrum_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("numeric_spectrum_flow");
    let gammas = lin_space(0.0, 4.0, 400);
    let base = BeamsplitterParams::new(1.0, 1.0, 0.0, 12).unwrap();
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec::map(mode, &gammas, |&g| {
                    numeric_spectrum(&build_hamiltonian(&base.with_gamma(g)).unwrap()).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn steady_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("steady_onset");
    let params = BeamsplitterParams::new(1.0, 1.0, 2.4, 8).unwrap();
    let input = make_input(InputKind::Noon, 8, None).unwrap();
    let grid = lin_space(0.0, 40.0, 801);
    for (name, mode) in MODES {
        group.bench_function(name, |b| b.iter(|| steady_onset(&input, &params, &grid, mode).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, evolution_sweep, spectrum_sweep, steady_sweep);
criterion_main!(benches);
