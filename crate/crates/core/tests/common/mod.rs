#![allow(dead_code)]

use std::path::PathBuf;

use dynav_core::backend::{BackendConfig, DecisionRequest, RemoteBackend, RequestKind, StubScript, StubServer};
use dynav_core::eval::{Budgets, EpisodeRun, EpisodeSpec, RunOptions, WorldSource};
use dynav_core::{run_episode, GoalSpec, MemoryGraph, Point, Pose, SemanticObject, WorldMap};
use serde_json::{json, Value};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> Value {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn remote(url: &str, timeout_ms: u64, max_retries: u32) -> RemoteBackend {
    RemoteBackend::new(BackendConfig {
        endpoint: url.to_string(),
        timeout_ms,
        max_retries,
        backoff_base_ms: 5,
        ..Default::default()
    })
    .unwrap()
}

pub fn score_request() -> DecisionRequest {
    serde_json::from_value(fixture("score_request.json")).unwrap()
}

/// Open 12×12 m room with a toilet the agent never reaches in a few steps.
pub fn room() -> WorldMap {
    WorldMap::open(12.0, 12.0, 0.1, Point::new(-6.0, -6.0))
        .with_objects(vec![SemanticObject::new("toilet_1", "toilet", Point::new(4.5, 4.5), 0.3)])
        .unwrap()
}

/// Filter keeps everything, scores are empty (every candidate 0) and the
/// stop check reports `s` from `stop_from` on.
pub fn stop_script(stop_from: u64, horizon: u64, s: f64) -> StubScript {
    let mut script = StubScript::default();
    script.push(RequestKind::Filter, None, json!({"version": "dynav/1", "kind": "filter"}));
    script.push(RequestKind::Score, None, json!({"version": "dynav/1", "kind": "score"}));
    script.push(RequestKind::StopCheck, None, json!({"version": "dynav/1", "kind": "stop_check", "s_stop": 0.0}));
    for k in stop_from..horizon {
        script.push(RequestKind::StopCheck, Some(k), json!({"version": "dynav/1", "kind": "stop_check", "s_stop": s}));
    }
    script
}

/// Runs one toilet episode in [`room`] against a stub serving `script`.
pub fn scripted_episode(script: StubScript) -> (EpisodeRun, Vec<DecisionRequest>) {
    let stub = StubServer::serve(0, script).unwrap();
    let backend = remote(&stub.url(), 2_000, 0);
    let spec = EpisodeSpec {
        id: "scripted".into(),
        world: WorldSource::File { path: "unused.json".into() },
        start: Pose::new(-4.0, -4.0, 0.0),
        goals: vec![GoalSpec::name("toilet")],
        budgets: Budgets { max_steps: 20, max_distance_m: 200.0 },
        success_threshold: 0.3,
        seed: 1,
    };
    let run = run_episode(&spec, &room(), &backend, MemoryGraph::new(), &RunOptions::default()).unwrap();
    let reqs = stub.requests();
    stub.shutdown();
    (run, reqs)
}
