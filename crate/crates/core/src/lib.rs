//! Object-goal navigation with dynamic polar action proposals, a graph
//! memory bank and confidence-based action selection, on a deterministic
//! 2D simulator. Decisions go through a pluggable [`backend`].

pub mod backend;
pub mod eval;
pub mod geometry;
pub mod goal;
pub mod memory;
pub mod policy;
pub mod proposer;
pub mod world;

pub use backend::{
    BackendConfig, BackendError, DecisionBackend, DecisionRequest, DecisionResponse, OracleBackend,
    RemoteBackend, RequestKind, StubScript, StubServer,
};
pub use eval::{
    compute_metrics, run_episode, shortest_path, EpisodeResult, EpisodeSpec, GoalResult, Report,
    Termination,
};
pub use geometry::{PolarAction, Point, Pose};
pub use goal::{GoalModality, GoalSpec};
pub use memory::{merge, MemoryEdge, MemoryGraph, MemoryNode};
pub use policy::{AgentState, PolicyConfig, StepDecision, StepRecord};
pub use proposer::{
    boundary, propose, sample_initial, BoundaryPoint, Candidate, CandidateSet, ConstraintSet,
    TraversabilityMask,
};
pub use world::{
    execute, reactive_avoid, reactive_avoid_except, sense, success, worldgen, AgentBody, Observation, SemanticObject,
    WorldGenSpec, WorldMap,
};
