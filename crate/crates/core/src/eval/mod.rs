//! Episodes, budgets and benchmark metrics.

pub mod episodes;
pub mod logs;
pub mod metrics;
pub mod path;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use episodes::{objectnav_episodes, random_start, two_goal_episodes};
pub use logs::results_from_logs;
pub use metrics::{compute_metrics, CategoryStats, Report};
pub use path::shortest_path;
pub use report::{export_report, load_report};
pub use runner::{run_all, run_episode, EpisodeRun, RunOptions};

use crate::geometry::Pose;
use crate::goal::GoalSpec;
use crate::policy::PolicyError;
use crate::world::{worldgen, WorldError, WorldGenSpec, WorldMap};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("goal is unreachable from the start pose")]
    Unreachable,
    #[error("no object matches goal `{0}`")]
    UnresolvableGoal(String),
    #[error("no results to evaluate")]
    EmptyInput,
    #[error("invalid episode: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where an episode's world comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum WorldSource {
    File { path: PathBuf },
    Generated { seed: u64, spec: WorldGenSpec },
}

impl WorldSource {
    /// Relative file paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<WorldMap, WorldError> {
        match self {
            WorldSource::File { path } => WorldMap::load(base.join(path)),
            WorldSource::Generated { seed, spec } => worldgen(*seed, spec),
        }
    }
}

/// Per-goal limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub max_steps: u64,
    pub max_distance_m: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_steps: 200,
            max_distance_m: 200.0,
        }
    }
}

fn default_threshold() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    pub world: WorldSource,
    pub start: Pose,
    pub goals: Vec<GoalSpec>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Invalid(format!("{}: {m}", self.id)));
        if self.goals.is_empty() || self.goals.len() > 10 {
            return bad(format!("{} goals; need 1 to 10", self.goals.len()));
        }
        for g in &self.goals {
            if let Err(e) = g.validate() {
                return bad(e.to_string());
            }
        }
        if !(self.budgets.max_distance_m > 0.0) {
            return bad("max_distance_m must be > 0".into());
        }
        if !(self.success_threshold >= 0.0) {
            return bad("success_threshold must be ≥ 0".into());
        }
        if !self.start.is_finite() {
            return bad("start pose is not finite".into());
        }
        Ok(())
    }
}

/// A file of episode specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSet {
    pub episodes: Vec<EpisodeSpec>,
}

impl EpisodeSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)?;
        let set: EpisodeSet = serde_json::from_str(&text)?;
        for e in &set.episodes {
            e.validate()?;
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    BudgetExhausted,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub goal: GoalSpec,
    pub success: bool,
    /// Meters actually traveled on this sub-task.
    pub path_length: f64,
    /// Shortest feasible length from the sub-task start; `None` if unreachable.
    pub shortest: Option<f64>,
    pub steps: u64,
    pub termination: Termination,
    /// Trajectory indices bounding this sub-task (inclusive).
    pub traj_start: usize,
    pub traj_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub goals: Vec<GoalResult>,
    pub trajectory: Vec<Pose>,
    pub termination: Termination,
}

/// Sum of consecutive displacements over `traj[a..=b]`.
pub fn path_length(traj: &[Pose], a: usize, b: usize) -> f64 {
    traj[a..=b]
        .windows(2)
        .map(|w| w[0].position().dist(w[1].position()))
        .sum()
}
