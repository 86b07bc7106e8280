//! One navigation step: sense, propose, prompt, select, move, remember.

use std::collections::BTreeMap;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    DecisionBackend, DecisionRequest, DecisionResponse, MemoryOp, RequestKind, WireCandidate,
    WireObservation, WirePose,
};
use crate::geometry::{angle_dist, PolarAction, Pose};
use crate::goal::{GoalModality, GoalSpec};
use crate::memory::{MemoryGraph, SemanticFilter};
use crate::proposer::{
    self, Candidate, CandidateSet, ConstraintSet, FilterContext, ProposerError, TraversabilityMask,
};
use crate::world::{self, AgentBody, MotionResult, Observation, Sensor, WorldError, WorldMap};

pub const DEFAULT_TAU_STOP: f64 = 0.6;
/// Consecutive above-threshold stop scores needed to stop.
pub const STOP_STREAK: u32 = 2;

pub const TEMPLATE_FILTER: &str = "filter_v1";
pub const TEMPLATE_STOP: &str = "stop_v1";
pub const TEMPLATE_MEMORY: &str = "memory_extract_v1";

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub sensor: Sensor,
    pub body: AgentBody,
    pub alpha: f64,
    /// Radians.
    pub theta_delta: f64,
    pub r_min: f64,
    pub tau_stop: f64,
    pub mask_step: f64,
    /// Per-ray probability of a traversability misreading.
    pub mask_corruption: f64,
    pub constraints: ConstraintSet,
    /// Max clauses of memory text per prompt.
    pub memory_budget: usize,
    pub memory_hops: usize,
    pub use_memory: bool,
    /// Also send a separate memory-extraction request each step.
    pub memory_extract: bool,
    /// Wall clearance restored before each step; `None` means radius + 0.15 m.
    pub avoid_clearance: Option<f64>,
    pub agent_id: String,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            sensor: Sensor::default(),
            body: AgentBody::default(),
            alpha: proposer::DEFAULT_ALPHA,
            theta_delta: proposer::DEFAULT_THETA_DELTA,
            r_min: proposer::DEFAULT_R_MIN,
            tau_stop: DEFAULT_TAU_STOP,
            mask_step: proposer::DEFAULT_MASK_STEP,
            mask_corruption: 0.0,
            constraints: ConstraintSet::default(),
            memory_budget: 40,
            memory_hops: 2,
            use_memory: true,
            memory_extract: false,
            avoid_clearance: None,
            agent_id: "agent-0".to_string(),
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} must be in (0, 1)", self.alpha));
        }
        if !(self.theta_delta > 0.0 && self.theta_delta < std::f64::consts::PI) {
            return bad(format!("theta_delta {} must be in (0, π)", self.theta_delta));
        }
        if !(0.0..=1.0).contains(&self.tau_stop) {
            return bad(format!("tau_stop {} must be in [0, 1]", self.tau_stop));
        }
        if !(self.mask_step > 0.0) || self.r_min < 0.0 {
            return bad("mask_step must be > 0 and r_min ≥ 0".into());
        }
        if !(0.0..=1.0).contains(&self.mask_corruption) {
            return bad(format!("mask_corruption {} must be in [0, 1]", self.mask_corruption));
        }
        if !(self.body.radius > 0.0 && self.body.max_sense > 0.0) {
            return bad("body radius and max_sense must be > 0".into());
        }
        if self.memory_hops > crate::memory::MAX_HOPS {
            return bad(format!("memory_hops {} exceeds {}", self.memory_hops, crate::memory::MAX_HOPS));
        }
        if self.clearance() < self.body.radius {
            return bad("avoid_clearance must be ≥ body radius".into());
        }
        Ok(())
    }

    pub fn clearance(&self) -> f64 {
        self.avoid_clearance
            .unwrap_or(self.body.radius + world::AVOID_MARGIN)
    }
}

/// Spacing, turn and cap of the trail of past decision poses sent to the
/// backend.
pub const VISITED_SPACING: f64 = 0.25;
pub const VISITED_TURN: f64 = std::f64::consts::PI / 6.0;
pub const VISITED_CAP: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub pose: Pose,
    pub step: u64,
    pub stop_streak: u32,
    /// Past decision poses, oldest first.
    #[serde(default)]
    pub visited: Vec<Pose>,
}

impl AgentState {
    pub fn new(pose: Pose) -> Self {
        AgentState {
            pose,
            step: 0,
            stop_streak: 0,
            visited: Vec::new(),
        }
    }

    fn visit(&mut self, p: Pose) {
        let moved = |v: &Pose| {
            v.position().dist(p.position()) >= VISITED_SPACING || angle_dist(v.heading, p.heading) >= VISITED_TURN
        };
        if self.visited.last().is_none_or(moved) {
            self.visited.push(p);
            if self.visited.len() > VISITED_CAP {
                self.visited.remove(0);
            }
        }
    }
}

/// The prompt analogue: annotated observation, template, memory excerpt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub observation: WireObservation,
    pub candidates: Vec<WireCandidate>,
    pub template_id: String,
    pub memory_text: String,
    pub goal_text: String,
    pub constraints: Vec<String>,
    pub visited: Vec<WirePose>,
}

pub fn score_template(goal: &GoalSpec) -> &'static str {
    match goal.modality {
        GoalModality::Name { .. } => "score_name_v1",
        GoalModality::Description { .. } => "score_description_v1",
        GoalModality::Instance { .. } => "score_instance_v1",
    }
}

/// Memory retrieval: nodes matching the goal's category and attributes,
/// plus their `hops`-neighborhood.
pub fn memory_filter(goal: &GoalSpec, hops: usize) -> SemanticFilter {
    SemanticFilter {
        name_pattern: goal.category().map(str::to_string),
        required_attributes: goal.required_attributes().to_vec(),
        relation: None,
        hops,
    }
}

pub fn build_prompt(
    obs: &Observation,
    candidates: &CandidateSet,
    mem: &MemoryGraph,
    goal: &GoalSpec,
    cfg: &PolicyConfig,
) -> PromptBundle {
    let memory_text = if cfg.use_memory && !mem.is_empty() {
        match mem.spatial_query(&memory_filter(goal, cfg.memory_hops)) {
            Ok(sub) => sub.render_text(cfg.memory_budget),
            Err(e) => {
                warn!("memory query failed: {e}");
                String::new()
            }
        }
    } else {
        String::new()
    };
    PromptBundle {
        observation: WireObservation::from(obs),
        candidates: candidates.wire(),
        template_id: score_template(goal).to_string(),
        memory_text,
        goal_text: goal.text.clone(),
        constraints: cfg.constraints.constraints.clone(),
        visited: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// No traversable ray, or no candidate survived sampling and filtering.
    NoCandidates,
    /// Boxed in; reactive avoidance found no escape.
    Blocked,
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecision {
    pub scores: BTreeMap<u32, f64>,
    pub s_stop: Option<f64>,
    pub chosen: PolarAction,
    pub chosen_id: Option<u32>,
    pub stop_streak: u32,
    pub fallback: Option<Fallback>,
    #[serde(skip)]
    pub memory_ops: Vec<MemoryOp>,
}

/// Streak after observing `s_stop`.
pub fn update_streak(streak: u32, s_stop: f64, tau_stop: f64) -> u32 {
    if s_stop > tau_stop {
        streak + 1
    } else {
        0
    }
}

/// Highest score, lowest id on ties.
pub fn argmax(scores: &BTreeMap<u32, f64>) -> Option<u32> {
    let mut best: Option<(u32, f64)> = None;
    for (&id, &s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    best.map(|(id, _)| id)
}

fn fallback_rotation(cfg: &PolicyConfig) -> PolarAction {
    PolarAction::rotation(cfg.theta_delta)
}

/// Everything a backend request needs besides the payload.
#[derive(Debug, Clone, Copy)]
pub struct Session<'a> {
    pub id: &'a str,
    pub goal: &'a GoalSpec,
}

/// Scores the annotated bundle, checks for stop on the raw observation and
/// applies the stop rule. Any backend failure yields the fallback rotation
/// with the streak unchanged.
pub fn select_action(
    bundle: &PromptBundle,
    final_set: &CandidateSet,
    raw_obs: &Observation,
    streak: u32,
    backend: &dyn DecisionBackend,
    session: Session<'_>,
    cfg: &PolicyConfig,
) -> StepDecision {
    let failed = |e: String| StepDecision {
        scores: BTreeMap::new(),
        s_stop: None,
        chosen: fallback_rotation(cfg),
        chosen_id: None,
        stop_streak: streak,
        fallback: Some(Fallback::Backend(e)),
        memory_ops: vec![],
    };

    let mut scores = BTreeMap::new();
    let mut memory_ops = Vec::new();
    if !final_set.is_empty() {
        let mut req = DecisionRequest::new(
            RequestKind::Score,
            session.id,
            raw_obs.step,
            session.goal,
            bundle.observation.clone(),
        );
        req.candidates = Some(bundle.candidates.clone());
        req.memory_text = bundle.memory_text.clone();
        req.constraints = bundle.constraints.clone();
        req.template_id = bundle.template_id.clone();
        req.visited = bundle.visited.clone();
        let resp = match backend.decide(&req) {
            Ok(r) => r,
            Err(e) => return failed(e.to_string()),
        };
        scores = final_set.candidates.iter().map(|c| (c.id, 0.0)).collect();
        for s in &resp.scores {
            if let Some(v) = scores.get_mut(&s.id) {
                *v = s.s.clamp(0.0, 1.0);
            }
        }
        memory_ops = resp.memory_ops;
    }

    let req = DecisionRequest {
        template_id: TEMPLATE_STOP.to_string(),
        ..DecisionRequest::new(
            RequestKind::StopCheck,
            session.id,
            raw_obs.step,
            session.goal,
            WireObservation::from(raw_obs),
        )
    };
    let s_stop = match backend.decide(&req) {
        Ok(DecisionResponse { s_stop: Some(s), .. }) => s.clamp(0.0, 1.0),
        Ok(_) => return failed("stop check returned no s_stop".into()),
        Err(e) => return failed(e.to_string()),
    };
    let stop_streak = update_streak(streak, s_stop, cfg.tau_stop);

    let (chosen, chosen_id, fallback) = if stop_streak >= STOP_STREAK {
        (PolarAction::Stop, None, None)
    } else {
        match argmax(&scores).and_then(|id| final_set.get(id)) {
            Some(c) => (
                PolarAction::new_move(c.r, c.theta).unwrap_or_else(|| fallback_rotation(cfg)),
                Some(c.id),
                None,
            ),
            None => (fallback_rotation(cfg), None, Some(Fallback::NoCandidates)),
        }
    };
    StepDecision {
        scores,
        s_stop: Some(s_stop),
        chosen,
        chosen_id,
        stop_streak,
        fallback,
        memory_ops,
    }
}

/// Everything one step produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: AgentState,
    /// Pose the decision was made from (after reactive avoidance).
    pub decision_pose: Pose,
    pub decision: StepDecision,
    pub initial: CandidateSet,
    pub final_set: CandidateSet,
    pub motion: Option<MotionResult>,
    pub memory_changed: bool,
    pub observation: Option<Observation>,
}

impl StepOutcome {
    pub fn backend_failed(&self) -> bool {
        matches!(self.decision.fallback, Some(Fallback::Backend(_)))
    }

    pub fn record(&self, episode_id: &str, goal_index: usize, memory_version: u64) -> StepRecord {
        StepRecord {
            episode_id: episode_id.to_string(),
            goal_index,
            step: self.state.step - 1,
            pose: self.decision_pose,
            end_pose: self.state.pose,
            candidate_set: self.final_set.candidates.clone(),
            scores: self.decision.scores.clone(),
            s_stop: self.decision.s_stop,
            chosen: self.decision.chosen,
            traveled: self.motion.map_or(0.0, |m| m.traveled),
            memory_version,
            fallback: self.decision.fallback.clone(),
        }
    }
}

/// One line of the step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode_id: String,
    pub goal_index: usize,
    pub step: u64,
    /// Pose the decision was made from.
    pub pose: Pose,
    /// Pose after the chosen action.
    pub end_pose: Pose,
    pub candidate_set: Vec<Candidate>,
    pub scores: BTreeMap<u32, f64>,
    pub s_stop: Option<f64>,
    pub chosen: PolarAction,
    pub traveled: f64,
    pub memory_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<Fallback>,
}

fn empty_set(cfg: &PolicyConfig) -> CandidateSet {
    CandidateSet {
        candidates: vec![],
        alpha: cfg.alpha,
        theta_delta: cfg.theta_delta,
    }
}

/// Applies backend memory operations; returns whether the graph changed.
pub fn apply_memory_ops(mem: &mut MemoryGraph, ops: &[MemoryOp], step: u64, agent: &str) -> bool {
    let mut changed = false;
    for op in ops {
        let r = match op {
            MemoryOp::AddNode {
                name,
                attributes,
                location,
            } => mem.add_node(name, attributes, location.map(|[x, y]| (x, y)), step, agent),
            MemoryOp::AddEdge {
                start,
                target,
                relation,
            } => mem.add_edge(start, target, relation),
        };
        match r {
            Ok(c) => changed |= c,
            Err(e) => warn!("skipping memory op {op:?}: {e}"),
        }
    }
    changed
}

/// Runs one step of the policy from `state`.
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &AgentState,
    world: &WorldMap,
    mem: &mut MemoryGraph,
    goal: &GoalSpec,
    backend: &dyn DecisionBackend,
    cfg: &PolicyConfig,
    session_id: &str,
    rng: &mut impl Rng,
) -> Result<StepOutcome, PolicyError> {
    let session = Session { id: session_id, goal };
    let next = |pose: Pose, streak: u32| AgentState {
        pose,
        step: state.step + 1,
        stop_streak: streak,
        visited: state.visited.clone(),
    };

    // goal objects do not repel, so the agent can come to rest against one
    let is_goal = |o: &world::SemanticObject| goal.matches(&o.category, &o.attributes);
    let pose = match world::reactive_avoid_except(world, &state.pose, &cfg.body, cfg.clearance(), is_goal) {
        Ok(p) => p,
        Err(WorldError::NoEscape) => {
            let chosen = fallback_rotation(cfg);
            let motion = world::execute(world, &state.pose, &cfg.body, &chosen);
            return Ok(StepOutcome {
                state: next(motion.new_pose, state.stop_streak),
                decision_pose: state.pose,
                decision: StepDecision {
                    scores: BTreeMap::new(),
                    s_stop: None,
                    chosen,
                    chosen_id: None,
                    stop_streak: state.stop_streak,
                    fallback: Some(Fallback::Blocked),
                    memory_ops: vec![],
                },
                initial: empty_set(cfg),
                final_set: empty_set(cfg),
                motion: Some(motion),
                memory_changed: false,
                observation: None,
            });
        }
        Err(e) => return Err(e.into()),
    };

    let obs = world::sense(world, &pose, &cfg.body, &cfg.sensor, state.step)?;
    let mut mask = TraversabilityMask::ground_truth(&obs, cfg.mask_step);
    mask.corrupt(cfg.mask_corruption, cfg.body.max_sense, rng);

    let (initial, final_set, decision) = match proposer::boundary(&obs, &mask) {
        Ok(bnd) => {
            let initial = proposer::sample_initial(&bnd, cfg.alpha, cfg.theta_delta, cfg.r_min)
                .map_err(|e| PolicyError::Config(e.to_string()))?;
            let ctx = FilterContext {
                session_id,
                goal,
                template_id: TEMPLATE_FILTER,
                template: None,
            };
            match proposer::propose(&obs, &bnd, &initial, &cfg.constraints, backend, &ctx) {
                Ok(p) => {
                    let mut bundle = build_prompt(&obs, &p.final_set, mem, goal, cfg);
                    bundle.visited = state.visited.iter().chain([&pose]).map(WirePose::from).collect();
                    let d = select_action(&bundle, &p.final_set, &obs, state.stop_streak, backend, session, cfg);
                    (initial, p.final_set, d)
                }
                Err(ProposerError::Backend(e)) => {
                    let d = StepDecision {
                        scores: BTreeMap::new(),
                        s_stop: None,
                        chosen: fallback_rotation(cfg),
                        chosen_id: None,
                        stop_streak: state.stop_streak,
                        fallback: Some(Fallback::Backend(e.to_string())),
                        memory_ops: vec![],
                    };
                    (initial, empty_set(cfg), d)
                }
                Err(e) => return Err(PolicyError::Config(e.to_string())),
            }
        }
        Err(ProposerError::EmptyBoundary) => {
            let bundle = build_prompt(&obs, &empty_set(cfg), mem, goal, cfg);
            let d = select_action(&bundle, &empty_set(cfg), &obs, state.stop_streak, backend, session, cfg);
            (empty_set(cfg), empty_set(cfg), d)
        }
        Err(e) => return Err(PolicyError::Config(e.to_string())),
    };

    let motion = (!decision.chosen.is_stop())
        .then(|| world::execute(world, &pose, &cfg.body, &decision.chosen));

    let mut memory_changed = false;
    if cfg.use_memory {
        memory_changed |= apply_memory_ops(mem, &decision.memory_ops, state.step, &cfg.agent_id);
        if cfg.memory_extract {
            let req = DecisionRequest {
                template_id: TEMPLATE_MEMORY.to_string(),
                ..DecisionRequest::new(
                    RequestKind::MemoryExtract,
                    session_id,
                    state.step,
                    goal,
                    WireObservation::from(&obs),
                )
            };
            match backend.decide(&req) {
                Ok(r) => memory_changed |= apply_memory_ops(mem, &r.memory_ops, state.step, &cfg.agent_id),
                Err(e) => warn!("memory extraction failed: {e}"),
            }
        }
    }

    let new_pose = motion.map_or(pose, |m| m.new_pose);
    let mut state_out = next(new_pose, decision.stop_streak);
    state_out.visit(pose);
    Ok(StepOutcome {
        state: state_out,
        decision_pose: pose,
        decision,
        initial,
        final_set,
        motion,
        memory_changed,
        observation: Some(obs),
    })
}
