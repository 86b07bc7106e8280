use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{path::shortest_path, EpisodeResult, EpisodeSpec, EvalError, GoalResult, Termination};
use crate::backend::DecisionBackend;
use crate::memory::MemoryGraph;
use crate::policy::{self, AgentState, PolicyConfig, StepRecord};
use crate::world::{self, SuccessCriterion, WorldMap};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub policy: PolicyConfig,
    pub visibility_required: bool,
    /// Consecutive steps with backend failures tolerated before aborting.
    pub max_backend_failures: u32,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: PolicyConfig::default(),
            visibility_required: false,
            max_backend_failures: 10,
            cancel: None,
        }
    }
}

impl RunOptions {
    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    /// Memory at the end of the episode.
    pub memory: MemoryGraph,
    pub records: Vec<StepRecord>,
}

/// Runs the goals of `spec` in order from the end pose of the previous
/// goal, carrying memory across goals.
pub fn run_episode(
    spec: &EpisodeSpec,
    world: &WorldMap,
    backend: &dyn DecisionBackend,
    mem0: MemoryGraph,
    opts: &RunOptions,
) -> Result<EpisodeRun, EvalError> {
    spec.validate()?;
    opts.policy.validate()?;
    let cfg = &opts.policy;
    let criterion = SuccessCriterion {
        threshold: spec.success_threshold,
        visibility_required: opts.visibility_required,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mem = mem0;
    let mut state = AgentState::new(spec.start);
    let mut traj = vec![spec.start];
    let mut records = Vec::new();
    let mut goals = Vec::new();
    let mut failures = 0u32;
    let mut aborted = false;

    for (gi, goal) in spec.goals.iter().enumerate() {
        let traj_start = traj.len() - 1;
        let shortest = match shortest_path(world, &state.pose, goal, cfg.body.radius, spec.success_threshold) {
            Ok(l) => Some(l),
            Err(EvalError::Unreachable) => {
                warn!("{} goal {gi} ({}) is unreachable; excluded from metrics", spec.id, goal.text);
                None
            }
            Err(e) => return Err(e),
        };
        state.stop_streak = 0;
        let session = format!("{}#{gi}", spec.id);
        let mut steps = 0u64;
        let mut length = 0.0;
        let mut success = false;
        let termination = loop {
            if aborted || opts.cancelled() {
                aborted = true;
                break Termination::Aborted;
            }
            if steps >= spec.budgets.max_steps || length >= spec.budgets.max_distance_m {
                break Termination::BudgetExhausted;
            }
            let out = policy::step(&state, world, &mut mem, goal, backend, cfg, &session, &mut rng)?;
            steps += 1;
            let before = *traj.last().unwrap();
            if out.decision_pose.position() != before.position() {
                length += before.position().dist(out.decision_pose.position());
                traj.push(out.decision_pose);
            }
            length += out.decision_pose.position().dist(out.state.pose.position());
            traj.push(out.state.pose);
            records.push(out.record(&spec.id, gi, mem.version()));
            state = out.state.clone();

            if out.decision.chosen.is_stop() {
                let obs = out.observation.as_ref().expect("stop decisions carry an observation");
                success = world::success(world, &state.pose, goal, obs, &criterion)?;
                break Termination::Stopped;
            }
            failures = if out.backend_failed() { failures + 1 } else { 0 };
            if failures > opts.max_backend_failures {
                warn!("{}: {failures} consecutive backend failures, aborting", spec.id);
                aborted = true;
                break Termination::Aborted;
            }
        };
        goals.push(GoalResult {
            goal: goal.clone(),
            success,
            path_length: length,
            shortest,
            steps,
            termination,
            traj_start,
            traj_end: traj.len() - 1,
        });
    }
    let termination = if aborted {
        Termination::Aborted
    } else {
        goals.last().map_or(Termination::Stopped, |g| g.termination)
    };
    Ok(EpisodeRun {
        result: EpisodeResult {
            episode_id: spec.id.clone(),
            goals,
            trajectory: traj,
            termination,
        },
        memory: mem,
        records,
    })
}

/// Runs episodes on a pool of `workers` threads. Output order follows
/// `specs`; each episode starts from a copy of `mem0`.
pub fn run_all(
    specs: &[EpisodeSpec],
    base_dir: &Path,
    backend: &dyn DecisionBackend,
    mem0: &MemoryGraph,
    opts: &RunOptions,
    workers: usize,
) -> Vec<Result<EpisodeRun, EvalError>> {
    let one = |spec: &EpisodeSpec| {
        let world = spec.world.load(base_dir)?;
        run_episode(spec, &world, backend, mem0.clone(), opts)
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(|| specs.par_iter().map(one).collect()),
        Err(e) => {
            warn!("thread pool unavailable ({e}); running serially");
            specs.iter().map(one).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::OracleBackend;
    use crate::eval::{path_length, Budgets, WorldSource};
    use crate::geometry::{Point, Pose};
    use crate::goal::GoalSpec;
    use crate::world::SemanticObject;

    fn plant_spec(max_steps: u64) -> (EpisodeSpec, WorldMap) {
        let w = WorldMap::open(12.0, 12.0, 0.1, Point::new(-6.0, -6.0))
            .with_objects(vec![SemanticObject::new("plant_1", "plant", Point::new(1.3, 0.0), 0.3)])
            .unwrap();
        let spec = EpisodeSpec {
            id: "plant".into(),
            world: WorldSource::File { path: "unused.json".into() },
            start: Pose::new(0.0, 0.0, 0.0),
            goals: vec![GoalSpec::name("plant")],
            budgets: Budgets { max_steps, max_distance_m: 50.0 },
            success_threshold: 0.3,
            seed: 1,
        };
        (spec, w)
    }

    #[test]
    fn visible_goal_one_meter_ahead() {
        let (spec, w) = plant_spec(50);
        let run = run_episode(&spec, &w, &OracleBackend::default(), MemoryGraph::new(), &RunOptions::default()).unwrap();
        let g = &run.result.goals[0];
        assert_eq!(g.termination, Termination::Stopped);
        assert!(g.success);
        assert!(g.steps <= 5, "{} steps", g.steps);
        let p = path_length(&run.result.trajectory, g.traj_start, g.traj_end);
        assert!((p - g.path_length).abs() < 1e-9);
    }

    #[test]
    fn zero_step_budget() {
        let (spec, w) = plant_spec(0);
        let run = run_episode(&spec, &w, &OracleBackend::default(), MemoryGraph::new(), &RunOptions::default()).unwrap();
        let g = &run.result.goals[0];
        assert_eq!(g.termination, Termination::BudgetExhausted);
        assert!(!g.success);
        assert_eq!(g.steps, 0);
        assert_eq!(g.path_length, 0.0);
    }

    #[test]
    fn bit_reproducible() {
        let (spec, w) = plant_spec(50);
        let a = run_episode(&spec, &w, &OracleBackend::default(), MemoryGraph::new(), &RunOptions::default()).unwrap();
        let b = run_episode(&spec, &w, &OracleBackend::default(), MemoryGraph::new(), &RunOptions::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a.result).unwrap(),
            serde_json::to_string(&b.result).unwrap()
        );
    }

    #[test]
    fn cancel_aborts() {
        let (spec, w) = plant_spec(50);
        let opts = RunOptions {
            cancel: Some(Arc::new(AtomicBool::new(true))),
            ..Default::default()
        };
        let run = run_episode(&spec, &w, &OracleBackend::default(), MemoryGraph::new(), &opts).unwrap();
        assert_eq!(run.result.termination, Termination::Aborted);
    }
}
