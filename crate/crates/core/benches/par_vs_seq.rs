//! Parallel-vs-sequential comparison for the two data-parallel hot paths:
//! sweep member runs and the sliding excitation scan. `par::map` fans out
//! over rayon when the `parallel` feature is on (the default); `par::map_seq`
//! is the sequential fallback that builds identically without the feature.
//!
//! Run with `cargo bench -p annex-core`.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use annex_core::harness::{parse_config, run_scenario, ScenarioConfig};
use annex_core::matcore::sym_eigenvalues;
use annex_core::par;
use annex_core::sigproc::{SignalTrace, TimeGrid};

const OSCILLATOR_SHORT: &str = r#"
id = "bench_osc"

[grid]
t0 = 0.0
h = 0.001
horizon = 12.0

[plant]
kind = "oscillator"
omega = 1.0
x0 = [2.0, -1.0]

[input]
kind = "constant"
value = 1.0

[noise]
harmonics = [{ amp = 0.1, freq = 20.0 }]
power = 0.1
sample_time = 0.01
seed = 23341

[estimator]
law = "A"
gamma = 100.0
window = 4.0
independent = [0, 1]
"#;

fn sweep_members(c: &mut Criterion) {
    let (cfg, _) = parse_config(OSCILLATOR_SHORT).unwrap();
    let members: Vec<ScenarioConfig> = [2.0, 3.0, 4.0, 6.0]
        .iter()
        .map(|&t| {
            let mut m = cfg.clone();
            m.estimator.window = Some(t);
            m
        })
        .collect();
    let mut group = c.benchmark_group("sweep_members");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || members.clone(),
            |ms| par::map(ms, |m| run_scenario(&m, None).unwrap().metrics),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || members.clone(),
            |ms| par::map_seq(ms, |m| run_scenario(&m, None).unwrap().metrics),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn excitation_scan(c: &mut Criterion) {
    // the eigenvalue scan over sliding window starts, isolated from the
    // prefix-sum setup
    let grid = TimeGrid::span(0.0, 1e-3, 120.0).unwrap();
    let x = SignalTrace::from_fn(grid, 4, |t| {
        vec![
            t.sin(),
            (2.0 * t).cos(),
            (0.5 * t).sin() + 0.2,
            (3.0 * t).cos() * (0.1 * t).sin(),
        ]
    })
    .unwrap();
    let n = 4usize;
    let w_steps = 20_000usize;
    let steps = grid.n_steps();
    let mut prefix = vec![0.0; steps * n * n];
    for k in 1..steps {
        let prev = x.sample(k - 1);
        let cur = x.sample(k);
        for i in 0..n {
            for j in 0..n {
                let e = i * n + j;
                prefix[k * n * n + e] = prefix[(k - 1) * n * n + e]
                    + 0.5 * grid.step() * (prev[i] * prev[j] + cur[i] * cur[j]);
            }
        }
    }
    let window = w_steps as f64 * grid.step();
    let starts: Vec<usize> = (0..steps - 1 - w_steps).step_by(49).collect();
    let eig_at = |s: usize| {
        let e = s + w_steps;
        let mut m = annex_core::matcore::Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] =
                    (prefix[e * n * n + i * n + j] - prefix[s * n * n + i * n + j]) / window;
            }
        }
        let ev = sym_eigenvalues(&m).unwrap();
        (ev[0], ev[n - 1])
    };

    let mut group = c.benchmark_group("excitation_scan");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || starts.clone(),
            |ss| par::map(ss, eig_at),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || starts.clone(),
            |ss| par::map_seq(ss, eig_at),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, sweep_members, excitation_scan);
criterion_main!(benches);
