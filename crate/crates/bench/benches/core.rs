use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dynav_bench::scene;
use dynav_core::eval::shortest_path;
use dynav_core::memory::MemoryGraph;
use dynav_core::policy::{self, AgentState, PolicyConfig};
use dynav_core::{boundary, merge, sample_initial, sense, OracleBackend, TraversabilityMask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sensing(c: &mut Criterion) {
    let (world, ep) = scene(1);
    let cfg = PolicyConfig::default();
    c.bench_function("sense", |b| {
        b.iter(|| sense(&world, black_box(&ep.start), &cfg.body, &cfg.sensor, 0).unwrap())
    });
}

fn proposer(c: &mut Criterion) {
    let (world, ep) = scene(1);
    let cfg = PolicyConfig::default();
    let obs = sense(&world, &ep.start, &cfg.body, &cfg.sensor, 0).unwrap();
    let mask = TraversabilityMask::ground_truth(&obs, cfg.mask_step);
    let bnd = boundary(&obs, &mask).unwrap();
    c.bench_function("boundary", |b| b.iter(|| boundary(black_box(&obs), &mask).unwrap()));
    c.bench_function("sample_initial", |b| {
        b.iter(|| sample_initial(black_box(&bnd), cfg.alpha, cfg.theta_delta, cfg.r_min).unwrap())
    });
}

fn path(c: &mut Criterion) {
    let (world, ep) = scene(2);
    let radius = PolicyConfig::default().body.radius;
    c.bench_function("shortest_path", |b| {
        b.iter(|| shortest_path(&world, black_box(&ep.start), &ep.goals[0], radius, 0.3).unwrap())
    });
}

fn graph(n: usize, agent: &str) -> MemoryGraph {
    let mut g = MemoryGraph::new();
    for k in 0..n {
        g.add_node(&format!("obj_{k}"), [format!("attr_{}", k % 7)], Some((k as f64, 0.0)), k as u64, agent)
            .unwrap();
        if k > 0 {
            g.add_edge(&format!("obj_{k}"), &format!("obj_{}", k - 1), "next to").unwrap();
        }
    }
    g
}

fn memory(c: &mut Criterion) {
    let (a, b2) = (graph(500, "agent_0"), graph(500, "agent_1"));
    c.bench_function("merge_500", |b| b.iter(|| merge(black_box(&a), black_box(&b2))));
    c.bench_function("render_text_500", |b| b.iter(|| a.render_text(black_box(64))));
}

fn step(c: &mut Criterion) {
    let (world, ep) = scene(3);
    let cfg = PolicyConfig::default();
    let backend = OracleBackend::default();
    c.bench_function("policy_step", |b| {
        b.iter_batched(
            || (AgentState::new(ep.start), MemoryGraph::new(), ChaCha8Rng::seed_from_u64(0)),
            |(state, mut mem, mut rng)| {
                policy::step(&state, &world, &mut mem, &ep.goals[0], &backend, &cfg, "bench#0", &mut rng).unwrap()
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, sensing, proposer, path, memory, step);
criterion_main!(benches);
