//! `dynav/1` wire messages. Angles travel in degrees and distances in meters.

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use super::BackendError;
use crate::geometry::Pose;
use crate::goal::GoalSpec;
use crate::proposer::Candidate;
use crate::world::{Hit, Observation};

pub const PROTOCOL_VERSION: &str = "dynav/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Filter,
    Score,
    StopCheck,
    MemoryExtract,
}

impl RequestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RequestKind::Filter => "filter",
            RequestKind::Score => "score",
            RequestKind::StopCheck => "stop_check",
            RequestKind::MemoryExtract => "memory_extract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirePose {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

impl From<&Pose> for WirePose {
    fn from(p: &Pose) -> Self {
        WirePose {
            x: p.x,
            y: p.y,
            heading_deg: p.heading.to_degrees(),
        }
    }
}

impl WirePose {
    pub fn to_pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.heading_deg.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRay {
    pub theta_deg: f64,
    pub distance_m: f64,
    /// Instance name of the object hit, `"wall"`, or null for no return.
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObservation {
    pub pose: WirePose,
    pub fov_deg: f64,
    pub rays: Vec<WireRay>,
}

impl From<&Observation> for WireObservation {
    fn from(obs: &Observation) -> Self {
        WireObservation {
            pose: WirePose::from(&obs.pose),
            fov_deg: obs.fov.to_degrees(),
            rays: obs
                .rays
                .iter()
                .map(|r| {
                    let (label, category, attributes, tags) = match &r.hit {
                        Hit::None => (None, None, vec![], BTreeSet::new()),
                        Hit::Wall => (Some("wall".to_string()), None, vec![], BTreeSet::new()),
                        Hit::Object(o) => (
                            Some(o.name.clone()),
                            Some(o.category.clone()),
                            o.attributes.clone(),
                            o.tags.clone(),
                        ),
                    };
                    WireRay {
                        theta_deg: r.theta.to_degrees(),
                        distance_m: r.depth,
                        label,
                        category,
                        attributes,
                        tags,
                    }
                })
                .collect(),
        }
    }
}

impl WireRay {
    pub fn is_object(&self) -> bool {
        self.category.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub id: u32,
    pub r_m: f64,
    pub theta_deg: f64,
}

impl From<&Candidate> for WireCandidate {
    fn from(c: &Candidate) -> Self {
        WireCandidate {
            id: c.id,
            r_m: c.r,
            theta_deg: c.theta.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub version: String,
    pub kind: RequestKind,
    pub session_id: String,
    pub step: u64,
    pub goal_text: String,
    /// Structured goal for backends that do not parse `goal_text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalSpec>,
    pub observation: WireObservation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<WireCandidate>>,
    #[serde(default)]
    pub memory_text: String,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub hazard_clearance_m: f64,
    pub template_id: String,
    /// Prompt template text, attached by clients configured with a template directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    /// Poses the agent has decided from so far, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visited: Vec<WirePose>,
}

impl DecisionRequest {
    /// A request with no candidates, constraints or memory; callers fill
    /// in what their kind needs.
    pub fn new(
        kind: RequestKind,
        session_id: &str,
        step: u64,
        goal: &GoalSpec,
        observation: WireObservation,
    ) -> Self {
        DecisionRequest {
            version: PROTOCOL_VERSION.to_string(),
            kind,
            session_id: session_id.to_string(),
            step,
            goal_text: goal.text.clone(),
            goal: Some(goal.clone()),
            observation,
            candidates: None,
            memory_text: String::new(),
            constraints: Vec::new(),
            hazard_clearance_m: 0.0,
            template_id: String::new(),
            template: None,
            visited: Vec::new(),
        }
    }

    pub fn candidate_ids(&self) -> BTreeSet<u32> {
        self.candidates
            .iter()
            .flatten()
            .map(|c| c.id)
            .collect()
    }

    /// Shape rules per kind: stop checks see no candidates, filter and score
    /// requests carry at least one.
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.version != PROTOCOL_VERSION {
            return Err(BackendError::SchemaViolation(format!(
                "request version `{}`",
                self.version
            )));
        }
        match (self.kind, &self.candidates) {
            (RequestKind::StopCheck, Some(_)) => Err(BackendError::SchemaViolation(
                "stop_check requests must not carry candidates".into(),
            )),
            (RequestKind::Filter | RequestKind::Score, None) => Err(BackendError::SchemaViolation(
                format!("{} request without candidates", self.kind.as_str()),
            )),
            (RequestKind::Filter | RequestKind::Score, Some(c)) if c.is_empty() => Err(
                BackendError::SchemaViolation(format!("{} request with no candidates", self.kind.as_str())),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireScore {
    pub id: u32,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum MemoryOp {
    AddNode {
        name: String,
        #[serde(default)]
        attributes: Vec<String>,
        #[serde(default)]
        location: Option<[f64; 2]>,
    },
    AddEdge {
        start: String,
        target: String,
        relation: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub version: String,
    pub kind: RequestKind,
    #[serde(default)]
    pub removals: Vec<u32>,
    #[serde(default)]
    pub adjustments: Vec<WireCandidate>,
    #[serde(default)]
    pub scores: Vec<WireScore>,
    #[serde(default)]
    pub s_stop: Option<f64>,
    #[serde(default)]
    pub memory_ops: Vec<MemoryOp>,
    #[serde(default)]
    pub rationale: Option<String>,
}

impl DecisionResponse {
    pub fn empty(kind: RequestKind) -> Self {
        DecisionResponse {
            version: PROTOCOL_VERSION.to_string(),
            kind,
            removals: vec![],
            adjustments: vec![],
            scores: vec![],
            s_stop: None,
            memory_ops: vec![],
            rationale: None,
        }
    }

    /// Clamps every confidence into `[0, 1]`; returns how many were changed.
    pub fn clamp_scores(&mut self) -> usize {
        let mut n = 0;
        for s in &mut self.scores {
            let c = s.s.clamp(0.0, 1.0);
            if c != s.s {
                n += 1;
                s.s = c;
            }
        }
        if let Some(s) = self.s_stop.as_mut() {
            let c = s.clamp(0.0, 1.0);
            if c != *s {
                n += 1;
                *s = c;
            }
        }
        n
    }
}

/// Checks a response against its request and clamps out-of-range scores.
pub fn validate_response(
    req: &DecisionRequest,
    mut resp: DecisionResponse,
) -> Result<DecisionResponse, BackendError> {
    let bad = |m: String| Err(BackendError::SchemaViolation(m));
    if resp.version != PROTOCOL_VERSION {
        return bad(format!("response version `{}`", resp.version));
    }
    if resp.kind != req.kind {
        return bad(format!(
            "response kind `{}` answers a `{}` request",
            resp.kind.as_str(),
            req.kind.as_str()
        ));
    }
    let ids = req.candidate_ids();
    let referenced = resp
        .removals
        .iter()
        .chain(resp.adjustments.iter().map(|a| &a.id))
        .chain(resp.scores.iter().map(|s| &s.id));
    for id in referenced {
        if !ids.contains(id) {
            return bad(format!("response references unknown candidate {id}"));
        }
    }
    let mut seen = BTreeSet::new();
    for s in &resp.scores {
        if !seen.insert(s.id) {
            return bad(format!("duplicate score for candidate {}", s.id));
        }
        if s.s.is_nan() {
            return bad(format!("score for candidate {} is NaN", s.id));
        }
    }
    match resp.s_stop {
        Some(s) if s.is_nan() => return bad("s_stop is NaN".into()),
        None if req.kind == RequestKind::StopCheck => {
            return bad("stop_check response without s_stop".into())
        }
        _ => {}
    }
    let clamped = resp.clamp_scores();
    if clamped > 0 {
        warn!(
            "clamped {clamped} out-of-range confidence(s) in {} response for step {}",
            req.kind.as_str(),
            req.step
        );
    }
    Ok(resp)
}
