//! Parallel-vs-sequential benchmarks of the data-parallel inner loops.
//!
//! The same closures run through the rayon-backed indexed map and its
//! sequential twin, so the comparison isolates the scheduling cost on the
//! actual physics workloads (ensemble scans, echo trajectories, Jacobian
//! columns). On a single core the two lanes should be close; the parallel
//! lane wins on multicore hosts.

use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use cohsim_core::config::{ResolvedConfig, RunConfig};
use cohsim_core::exec;
use cohsim_core::lindblad::{echo_under_heating, HeatingModel};
use cohsim_core::spin::{ramsey_scan, PulseMode};

fn resolved() -> ResolvedConfig {
    RunConfig::default().resolve(Path::new(".")).expect("default config resolves")
}

fn bench_ramsey_scan(c: &mut Criterion) {
    let r = resolved();
    let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.75e-6).collect();
    let chunks: Vec<Vec<f64>> = times.chunks(50).map(<[f64]>::to_vec).collect();
    let scan_chunk = |chunk: &Vec<f64>| {
        ramsey_scan(r.omega0, r.delta_mw, chunk, &r.spectrum, 71e-6, PulseMode::Detuned).unwrap()
    };
    let mut group = c.benchmark_group("ramsey_scan_2000pts");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(exec::map_slice(black_box(&chunks), scan_chunk)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::map_slice_seq(black_box(&chunks), scan_chunk)))
    });
    group.finish();
}

fn bench_echo_trajectories(c: &mut Criterion) {
    let r = resolved();
    let model = HeatingModel {
        kappa: 350.0,
        spectrum: r.spectrum.clone(),
        n_max: 12,
        tolerance: 1e-7,
    };
    let grid = [0.4e-3, 0.8e-3, 1.2e-3, 1.6e-3];
    let run_one = |&t_echo: &f64| {
        let times: Vec<f64> = (0..41).map(|i| t_echo - 0.2e-3 + i as f64 * 1e-5).collect();
        echo_under_heating(&model, r.omega0, r.delta_mw, 71e-6, t_echo, &times, PulseMode::Ideal)
            .unwrap()
    };
    let mut group = c.benchmark_group("echo_grid_4pts");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(exec::map_slice(black_box(&grid), run_one)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::map_slice_seq(black_box(&grid), run_one)))
    });
    group.finish();
}

fn bench_jacobian_columns(c: &mut Criterion) {
    let r = resolved();
    let times: Vec<f64> = (0..200).map(|k| k as f64 * 6e-6).collect();
    // one forward-difference column of the Ramsey model per parameter-like
    // shift, as the fitter builds them
    let column = |j: usize| {
        let delta = r.delta_mw * (1.0 + 1e-6 * (j as f64 + 1.0));
        ramsey_scan(r.omega0, delta, &times, &r.spectrum, 71e-6, PulseMode::Detuned).unwrap()
    };
    let mut group = c.benchmark_group("jacobian_12_columns");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(exec::map_indexed(12, column)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::map_indexed_seq(12, column)))
    });
    group.finish();
}

criterion_group!(benches, bench_ramsey_scan, bench_echo_trajectories, bench_jacobian_columns);
criterion_main!(benches);
