//! Rebuilding episode results from step logs.

use std::collections::BTreeMap;
use std::path::Path;

use super::{path::shortest_path, EpisodeResult, EpisodeSpec, EvalError, GoalResult, RunOptions, Termination};
use crate::policy::StepRecord;
use crate::world::{self, sense, SuccessCriterion};

/// Recomputes per-goal results for every spec that has log records.
/// Success is re-judged against the world at each final Stop.
pub fn results_from_logs(
    specs: &[EpisodeSpec],
    records: &[StepRecord],
    base_dir: &Path,
    opts: &RunOptions,
) -> Result<Vec<EpisodeResult>, EvalError> {
    let mut by_ep: BTreeMap<&str, Vec<&StepRecord>> = BTreeMap::new();
    for r in records {
        by_ep.entry(r.episode_id.as_str()).or_default().push(r);
    }
    let cfg = &opts.policy;
    let mut out = Vec::new();
    for spec in specs {
        let Some(recs) = by_ep.get_mut(spec.id.as_str()) else {
            continue;
        };
        recs.sort_by_key(|r| (r.goal_index, r.step));
        let world = spec.world.load(base_dir)?;
        let criterion = SuccessCriterion {
            threshold: spec.success_threshold,
            visibility_required: opts.visibility_required,
        };
        let mut traj = vec![spec.start];
        let mut goals = Vec::new();
        let mut aborted = false;
        for (gi, goal) in spec.goals.iter().enumerate() {
            let start = *traj.last().unwrap();
            let traj_start = traj.len() - 1;
            let shortest = match shortest_path(&world, &start, goal, cfg.body.radius, spec.success_threshold) {
                Ok(l) => Some(l),
                Err(EvalError::Unreachable) => None,
                Err(e) => return Err(e),
            };
            let mine: Vec<&StepRecord> = recs.iter().copied().filter(|r| r.goal_index == gi).collect();
            let mut length = 0.0;
            for r in &mine {
                let before = *traj.last().unwrap();
                if r.pose.position() != before.position() {
                    length += before.position().dist(r.pose.position());
                    traj.push(r.pose);
                }
                length += r.pose.position().dist(r.end_pose.position());
                traj.push(r.end_pose);
            }
            let last = mine.last();
            let (termination, success) = match last {
                Some(r) if r.chosen.is_stop() => {
                    let obs = sense(&world, &r.pose, &cfg.body, &cfg.sensor, r.step)?;
                    (Termination::Stopped, world::success(&world, &r.end_pose, goal, &obs, &criterion)?)
                }
                _ if mine.len() as u64 >= spec.budgets.max_steps || length >= spec.budgets.max_distance_m => {
                    (Termination::BudgetExhausted, false)
                }
                _ => (Termination::Aborted, false),
            };
            goals.push(GoalResult {
                goal: goal.clone(),
                success,
                path_length: length,
                shortest,
                steps: mine.len() as u64,
                termination,
                traj_start,
                traj_end: traj.len() - 1,
            });
            if termination == Termination::Aborted {
                aborted = true;
                break;
            }
        }
        let termination = if aborted {
            Termination::Aborted
        } else {
            goals.last().map_or(Termination::Stopped, |g| g.termination)
        };
        out.push(EpisodeResult {
            episode_id: spec.id.clone(),
            goals,
            trajectory: traj,
            termination,
        });
    }
    if out.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::OracleBackend;
    use crate::eval::run_episode;
    use crate::memory::MemoryGraph;
    use crate::world::{WorldGenSpec, worldgen};

    #[test]
    fn logs_reproduce_live_results() {
        let spec = WorldGenSpec::default();
        let eps = crate::eval::objectnav_episodes(2, 21, &spec, Default::default()).unwrap();
        let opts = RunOptions::default();
        let mut live = Vec::new();
        let mut records = Vec::new();
        for e in &eps {
            let crate::eval::WorldSource::Generated { seed, spec } = &e.world else { unreachable!() };
            let w = worldgen(*seed, spec).unwrap();
            let run = run_episode(e, &w, &OracleBackend::default(), MemoryGraph::new(), &opts).unwrap();
            live.push(run.result);
            records.extend(run.records);
        }
        // round-trip through JSONL as a log file would
        let text: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        let parsed: Vec<StepRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        let rebuilt = results_from_logs(&eps, &parsed, Path::new("."), &opts).unwrap();
        assert_eq!(rebuilt, live);
    }
}
