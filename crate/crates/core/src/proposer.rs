//! Polar action proposals: navigable boundary, angular sampling with a
//! safety margin, and backend-side safety filtering.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    BackendError, DecisionBackend, DecisionRequest, RequestKind, WireCandidate, WireObservation,
};
use crate::geometry::angle_dist;
use crate::goal::GoalSpec;
use crate::world::Observation;

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_THETA_DELTA: f64 = 15.0 * std::f64::consts::PI / 180.0;
pub const DEFAULT_R_MIN: f64 = 0.5;
/// Spacing of traversability samples along each ray.
pub const DEFAULT_MASK_STEP: f64 = 0.05;

const SEPARATION_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProposerError {
    #[error("no ray has a traversable extent")]
    EmptyBoundary,
    #[error("mask covers {mask} rays but the observation has {rays}")]
    MaskMismatch { mask: usize, rays: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Per-ray ground traversability, sampled every `step` meters outward from
/// the agent (sample `k` covers distance `(k + 1) * step`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityMask {
    pub step: f64,
    pub rays: Vec<Vec<bool>>,
}

impl TraversabilityMask {
    /// Ground truth: free up to the first return on each ray.
    pub fn ground_truth(obs: &Observation, step: f64) -> Self {
        let rays = obs
            .rays
            .iter()
            .map(|r| {
                let n = ((r.depth / step) + 1e-9).floor() as usize;
                vec![true; n]
            })
            .collect();
        TraversabilityMask { step, rays }
    }

    /// Every ray traversable out to `depth`.
    pub fn uniform(n_rays: usize, depth: f64, step: f64) -> Self {
        let n = ((depth / step) + 1e-9).floor() as usize;
        TraversabilityMask {
            step,
            rays: vec![vec![true; n]; n_rays],
        }
    }

    /// Segmentation error model: each ray independently, with probability
    /// `eps`, is misread as open ground out to `d_max`.
    pub fn corrupt(&mut self, eps: f64, d_max: f64, rng: &mut impl Rng) {
        if eps <= 0.0 {
            return;
        }
        let n = ((d_max / self.step) + 1e-9).floor() as usize;
        for ray in &mut self.rays {
            if rng.random_bool(eps.min(1.0)) {
                *ray = vec![true; n];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub r: f64,
    pub theta: f64,
    /// Index of the ray this point was read from.
    pub ray: usize,
}

/// Farthest contiguous traversable extent along each ray. Rays whose first
/// sample is blocked are omitted.
pub fn boundary(
    obs: &Observation,
    mask: &TraversabilityMask,
) -> Result<Vec<BoundaryPoint>, ProposerError> {
    if mask.rays.len() != obs.rays.len() {
        return Err(ProposerError::MaskMismatch {
            mask: mask.rays.len(),
            rays: obs.rays.len(),
        });
    }
    let out: Vec<BoundaryPoint> = mask
        .rays
        .iter()
        .zip(&obs.rays)
        .enumerate()
        .filter_map(|(k, (samples, ray))| {
            let run = samples.iter().take_while(|&&t| t).count();
            (run > 0).then(|| BoundaryPoint {
                r: run as f64 * mask.step,
                theta: ray.theta,
                ray: k,
            })
        })
        .collect();
    if out.is_empty() {
        return Err(ProposerError::EmptyBoundary);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub alpha: f64,
    pub theta_delta: f64,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.candidates.iter().map(|c| c.id).collect()
    }

    pub fn get(&self, id: u32) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    pub fn wire(&self) -> Vec<WireCandidate> {
        self.candidates.iter().map(WireCandidate::from).collect()
    }

    /// Smallest angular gap between any two candidates.
    pub fn min_separation(&self) -> Option<f64> {
        let c = &self.candidates;
        let mut best: Option<f64> = None;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                let d = (c[i].theta - c[j].theta).abs();
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub hazard_clearance: f64,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<String>, hazard_clearance: f64) -> Result<Self, ProposerError> {
        if !(hazard_clearance >= 0.0 && hazard_clearance.is_finite()) {
            return Err(ProposerError::InvalidParameter(format!(
                "hazard clearance {hazard_clearance}"
            )));
        }
        Ok(ConstraintSet {
            constraints,
            hazard_clearance,
        })
    }
}

fn check_params(alpha: f64, theta_delta: f64) -> Result<(), ProposerError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProposerError::InvalidParameter(format!("alpha {alpha} not in (0, 1)")));
    }
    if !(theta_delta > 0.0 && theta_delta.is_finite()) {
        return Err(ProposerError::InvalidParameter(format!("theta_delta {theta_delta}")));
    }
    Ok(())
}

/// Greedy far-first sampling: points are visited by descending `r` (ties:
/// smaller `|θ|`, then smaller `θ`) and kept when at least `theta_delta`
/// from every point kept so far. Ids run 1.. in ascending `θ`.
pub fn sample_initial(
    bnd: &[BoundaryPoint],
    alpha: f64,
    theta_delta: f64,
    r_min: f64,
) -> Result<CandidateSet, ProposerError> {
    check_params(alpha, theta_delta)?;
    let mut order: Vec<&BoundaryPoint> = bnd.iter().filter(|p| alpha * p.r >= r_min).collect();
    order.sort_by(|a, b| {
        b.r.total_cmp(&a.r)
            .then(a.theta.abs().total_cmp(&b.theta.abs()))
            .then(a.theta.total_cmp(&b.theta))
    });
    let mut kept: Vec<&BoundaryPoint> = Vec::new();
    for p in order {
        if kept
            .iter()
            .all(|k| (k.theta - p.theta).abs() >= theta_delta - SEPARATION_EPS)
        {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(CandidateSet {
        candidates: kept
            .iter()
            .enumerate()
            .map(|(k, p)| Candidate {
                id: k as u32 + 1,
                r: alpha * p.r,
                theta: p.theta,
            })
            .collect(),
        alpha,
        theta_delta,
    })
}

/// Everything the filter request needs beyond the observation and candidates.
#[derive(Debug, Clone)]
pub struct FilterContext<'a> {
    pub session_id: &'a str,
    pub goal: &'a GoalSpec,
    pub template_id: &'a str,
    pub template: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub boundary: Vec<BoundaryPoint>,
    pub initial: CandidateSet,
    #[serde(rename = "final")]
    pub final_set: CandidateSet,
    /// Adjustments that were rejected by the clamp rules.
    pub dropped_adjustments: Vec<WireCandidate>,
}

/// Sends `initial` to the backend for safety filtering and applies the
/// returned removals and (validated) adjustments.
pub fn propose(
    obs: &Observation,
    bnd: &[BoundaryPoint],
    initial: &CandidateSet,
    constraints: &ConstraintSet,
    backend: &dyn DecisionBackend,
    ctx: &FilterContext<'_>,
) -> Result<Proposal, ProposerError> {
    if initial.is_empty() {
        return Ok(Proposal {
            boundary: bnd.to_vec(),
            initial: initial.clone(),
            final_set: initial.clone(),
            dropped_adjustments: vec![],
        });
    }
    let mut req = DecisionRequest::new(
        RequestKind::Filter,
        ctx.session_id,
        obs.step,
        ctx.goal,
        WireObservation::from(obs),
    );
    req.candidates = Some(initial.wire());
    req.constraints = constraints.constraints.clone();
    req.hazard_clearance_m = constraints.hazard_clearance;
    req.template_id = ctx.template_id.to_string();
    req.template = ctx.template.map(str::to_string);
    let resp = backend.decide(&req)?;

    let mut kept: Vec<Candidate> = initial
        .candidates
        .iter()
        .filter(|c| !resp.removals.contains(&c.id))
        .copied()
        .collect();
    let mut dropped = Vec::new();
    for adj in &resp.adjustments {
        let Some(pos) = kept.iter().position(|c| c.id == adj.id) else {
            continue;
        };
        match validate_adjustment(obs, bnd, initial, &kept, pos, adj) {
            Some(c) => kept[pos] = c,
            None => {
                log::warn!("dropping invalid adjustment for candidate {}", adj.id);
                dropped.push(*adj);
            }
        }
    }
    Ok(Proposal {
        boundary: bnd.to_vec(),
        initial: initial.clone(),
        final_set: CandidateSet {
            candidates: kept,
            alpha: initial.alpha,
            theta_delta: initial.theta_delta,
        },
        dropped_adjustments: dropped,
    })
}

fn validate_adjustment(
    obs: &Observation,
    bnd: &[BoundaryPoint],
    initial: &CandidateSet,
    kept: &[Candidate],
    pos: usize,
    adj: &WireCandidate,
) -> Option<Candidate> {
    let orig = initial.get(adj.id)?;
    let (r, theta) = (adj.r_m, adj.theta_deg.to_radians());
    if !(r.is_finite() && theta.is_finite()) || r <= 0.0 || r > orig.r {
        return None;
    }
    if angle_dist(theta, orig.theta) > initial.theta_delta / 2.0 {
        return None;
    }
    if theta.abs() > obs.fov / 2.0 + 1e-12 {
        return None;
    }
    // margin at the new bearing
    let ray = obs.nearest_ray(theta)?;
    let b = bnd.iter().find(|p| p.ray == ray)?;
    if r > initial.alpha * b.r + 1e-12 {
        return None;
    }
    let separated = kept
        .iter()
        .enumerate()
        .all(|(k, c)| k == pos || (c.theta - theta).abs() >= initial.theta_delta - SEPARATION_EPS);
    separated.then_some(Candidate {
        id: adj.id,
        r,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{DecisionResponse, OracleBackend};
    use crate::geometry::{Point, Pose};
    use crate::world::{sense, AgentBody, Sensor, SemanticObject, WorldMap};
    use proptest::prelude::*;
    use std::sync::Mutex;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn pts(list: &[(f64, f64)]) -> Vec<BoundaryPoint> {
        list.iter()
            .enumerate()
            .map(|(k, &(r, t))| BoundaryPoint {
                r,
                theta: deg(t),
                ray: k,
            })
            .collect()
    }

    /// Among all subsets that are pairwise separated and maximal, the greedy
    /// rule picks the one whose sorted r-sequence (with the tie order) is
    /// lexicographically largest. Exhaustive, so only for small inputs.
    fn keep_set_oracle(p: &[BoundaryPoint], td: f64) -> Vec<usize> {
        let n = p.len();
        let rank = |i: usize| (-p[i].r, p[i].theta.abs(), p[i].theta);
        let mut best: Option<Vec<usize>> = None;
        for mask in 0u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let ok = set.iter().all(|&i| {
                set.iter()
                    .all(|&j| i == j || (p[i].theta - p[j].theta).abs() >= td - SEPARATION_EPS)
            });
            if !ok {
                continue;
            }
            let mut s = set.clone();
            s.sort_by(|&a, &b| rank(a).partial_cmp(&rank(b)).unwrap());
            let better = match &best {
                None => true,
                Some(b) => {
                    let key = |v: &Vec<usize>| v.iter().map(|&i| rank(i)).collect::<Vec<_>>();
                    let (ks, kb) = (key(&s), key(b));
                    // lexicographically smaller rank-sequence wins; a strict
                    // prefix loses to its extension
                    let mut res = None;
                    for (x, y) in ks.iter().zip(&kb) {
                        if x != y {
                            res = Some(x.partial_cmp(y).unwrap().is_lt());
                            break;
                        }
                    }
                    res.unwrap_or(ks.len() > kb.len())
                }
            };
            if better {
                best = Some(s);
            }
        }
        let mut b = best.unwrap_or_default();
        b.sort_by(|&a, &c| p[a].theta.partial_cmp(&p[c].theta).unwrap());
        b
    }

    #[test]
    fn worked_example() {
        let b = pts(&[(5.0, 0.0), (2.0, -5.0), (1.0, 8.0), (4.0, 30.0), (3.0, -20.0)]);
        let set = sample_initial(&b, 0.8, deg(10.0), 0.0).unwrap();
        let got: Vec<(u32, f64, f64)> = set
            .candidates
            .iter()
            .map(|c| (c.id, (c.r * 1e9).round() / 1e9, (c.theta.to_degrees() * 1e9).round() / 1e9))
            .collect();
        assert_eq!(got, vec![(1, 2.4, -20.0), (2, 4.0, 0.0), (3, 3.2, 30.0)]);
        let oracle = keep_set_oracle(&b, deg(10.0));
        assert_eq!(oracle, vec![4, 0, 3]);
    }

    #[test]
    fn single_and_total_conflict() {
        let set = sample_initial(&pts(&[(5.0, 0.0)]), 0.8, deg(10.0), 0.0).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.candidates[0].r - 4.0).abs() < 1e-12);

        let b = pts(&[(2.0, -3.0), (6.0, 1.0), (3.0, 4.0), (5.0, -1.0)]);
        let set = sample_initial(&b, 0.8, deg(10.0), 0.0).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.candidates[0].r - 4.8).abs() < 1e-12);
    }

    #[test]
    fn tie_prefers_straight_ahead_then_left() {
        let b = pts(&[(3.0, 5.0), (3.0, -2.0), (3.0, 2.0)]);
        let set = sample_initial(&b, 0.5, deg(10.0), 0.0).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.candidates[0].theta - deg(-2.0)).abs() < 1e-12);
    }

    #[test]
    fn r_min_drops_near_points() {
        let b = pts(&[(0.5, 0.0), (3.0, 40.0)]);
        let set = sample_initial(&b, 0.8, deg(10.0), 0.5).unwrap();
        assert_eq!(set.len(), 1);
        assert!(sample_initial(&b, 1.0, deg(10.0), 0.5).is_err());
        assert!(sample_initial(&b, 0.8, 0.0, 0.5).is_err());
    }

    fn open_obs(depth: f64) -> Observation {
        let w = WorldMap::open(40.0, 40.0, 0.1, Point::new(-20.0, -20.0));
        let body = AgentBody {
            max_sense: depth,
            ..Default::default()
        };
        sense(&w, &Pose::new(0.0, 0.0, 0.0), &body, &Sensor::default(), 0).unwrap()
    }

    #[test]
    fn boundary_rules() {
        let obs = open_obs(5.0);
        let mask = TraversabilityMask::ground_truth(&obs, 0.05);
        let b = boundary(&obs, &mask).unwrap();
        assert_eq!(b.len(), obs.rays.len());
        assert!(b.iter().all(|p| (p.r - 5.0).abs() < 1e-9));

        let mut m = mask.clone();
        let center = obs.rays.len() / 2;
        m.rays[center][0] = false;
        let b = boundary(&obs, &m).unwrap();
        assert!(b.iter().all(|p| p.ray != center));

        // 3 m open, then a blocked stretch, then open again
        let mut m = mask.clone();
        let k = (3.0f64 / 0.05).round() as usize;
        for s in k..k + 10 {
            m.rays[center][s] = false;
        }
        let b = boundary(&obs, &m).unwrap();
        let p = b.iter().find(|p| p.ray == center).unwrap();
        let scan = m.rays[center].iter().position(|t| !t).unwrap() as f64 * 0.05;
        assert!((p.r - scan).abs() < 1e-9 && (p.r - 3.0).abs() < 1e-9);

        let empty = TraversabilityMask {
            step: 0.05,
            rays: vec![vec![false; 3]; obs.rays.len()],
        };
        assert!(matches!(boundary(&obs, &empty), Err(ProposerError::EmptyBoundary)));
        let short = TraversabilityMask::uniform(3, 1.0, 0.05);
        assert!(matches!(boundary(&obs, &short), Err(ProposerError::MaskMismatch { .. })));
    }

    #[test]
    fn corruption_extends_rays() {
        use rand::SeedableRng;
        let obs = open_obs(2.0);
        let mut m = TraversabilityMask::ground_truth(&obs, 0.05);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        m.corrupt(1.0, 10.0, &mut rng);
        assert!(m.rays.iter().all(|r| r.len() == 200));
        let mut clean = TraversabilityMask::ground_truth(&obs, 0.05);
        let before = clean.clone();
        clean.corrupt(0.0, 10.0, &mut rng);
        assert_eq!(clean, before);
    }

    struct Scripted(Mutex<Option<DecisionResponse>>);

    impl DecisionBackend for Scripted {
        fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError> {
            let r = self.0.lock().unwrap().clone().unwrap();
            crate::backend::validate_response(req, r)
        }
    }

    fn ctx(goal: &GoalSpec) -> FilterContext<'_> {
        FilterContext {
            session_id: "t",
            goal,
            template_id: "filter/v1",
            template: None,
        }
    }

    #[test]
    fn oracle_identity_without_hazards() {
        let obs = open_obs(6.0);
        let b = boundary(&obs, &TraversabilityMask::ground_truth(&obs, 0.05)).unwrap();
        let init = sample_initial(&b, 0.8, deg(15.0), 0.5).unwrap();
        let goal = GoalSpec::name("toilet");
        let p = propose(&obs, &b, &init, &ConstraintSet::default(), &OracleBackend::default(), &ctx(&goal))
            .unwrap();
        assert_eq!(p.final_set, init);
    }

    #[test]
    fn adjustment_clamp_rules() {
        let obs = open_obs(6.0);
        let b = boundary(&obs, &TraversabilityMask::ground_truth(&obs, 0.05)).unwrap();
        let init = sample_initial(&b, 0.8, deg(15.0), 0.5).unwrap();
        let goal = GoalSpec::name("toilet");
        let c = init.candidates[2];
        let mut resp = DecisionResponse::empty(RequestKind::Filter);
        resp.adjustments = vec![
            // beyond boundary: dropped
            WireCandidate { id: c.id, r_m: c.r + 1.0, theta_deg: c.theta.to_degrees() },
        ];
        resp.removals = vec![init.candidates[0].id];
        let be = Scripted(Mutex::new(Some(resp.clone())));
        let p = propose(&obs, &b, &init, &ConstraintSet::default(), &be, &ctx(&goal)).unwrap();
        assert_eq!(p.final_set.get(c.id), Some(&c));
        assert!(p.final_set.get(init.candidates[0].id).is_none());
        assert_eq!(p.dropped_adjustments.len(), 1);

        // small, legal adjustment is applied once the neighbors are gone
        resp.removals = init.ids().into_iter().filter(|&id| id != c.id).collect();
        resp.adjustments = vec![WireCandidate {
            id: c.id,
            r_m: c.r / 2.0,
            theta_deg: c.theta.to_degrees() + 3.0,
        }];
        *be.0.lock().unwrap() = Some(resp.clone());
        let p = propose(&obs, &b, &init, &ConstraintSet::default(), &be, &ctx(&goal)).unwrap();
        let got = p.final_set.get(c.id).unwrap();
        assert!((got.r - c.r / 2.0).abs() < 1e-12);

        // rotation beyond θ_δ/2 is dropped
        resp.adjustments = vec![WireCandidate {
            id: c.id,
            r_m: c.r / 2.0,
            theta_deg: c.theta.to_degrees() + 8.0,
        }];
        *be.0.lock().unwrap() = Some(resp);
        let p = propose(&obs, &b, &init, &ConstraintSet::default(), &be, &ctx(&goal)).unwrap();
        assert_eq!(p.final_set.get(c.id), Some(&c));
    }

    #[test]
    fn oracle_removes_near_hazard() {
        let w = WorldMap::open(20.0, 20.0, 0.1, Point::new(-10.0, -10.0))
            .with_objects(vec![SemanticObject::new(
                "caution_sign_1",
                "caution_sign",
                Point::new(2.0, 0.0),
                0.6,
            )
            .with_tag("hazard")])
            .unwrap();
        let body = AgentBody::default();
        let obs = sense(&w, &Pose::new(0.0, 0.0, 0.0), &body, &Sensor::default(), 0).unwrap();
        let b = boundary(&obs, &TraversabilityMask::ground_truth(&obs, 0.05)).unwrap();
        let init = sample_initial(&b, 0.8, deg(15.0), 0.5).unwrap();
        let sign = &w.objects()[0];
        let near = |c: &Candidate| sign.boundary_dist(obs.pose.project(c.r, c.theta)) < 0.6;
        assert!(init.candidates.iter().any(near));
        let goal = GoalSpec::name("toilet");
        let cs = ConstraintSet::new(vec![], 0.6).unwrap();
        let p = propose(&obs, &b, &init, &cs, &OracleBackend::default(), &ctx(&goal)).unwrap();
        assert!(!p.final_set.candidates.iter().any(near));
        assert!(p.final_set.len() < init.len());
    }

    fn arb_boundary() -> impl Strategy<Value = Vec<BoundaryPoint>> {
        prop::collection::vec((0.05f64..10.0, -65.0f64..65.0), 1..40).prop_map(|v| {
            let mut v = v;
            v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            v.dedup_by(|a, b| a.1 == b.1);
            v.iter()
                .enumerate()
                .map(|(k, &(r, t))| BoundaryPoint {
                    r: (r * 20.0).round() / 20.0,
                    theta: t.to_radians(),
                    ray: k,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn sampling_laws(b in arb_boundary(), alpha in 0.1f64..0.99, td in 1.0f64..40.0, r_min in 0.0f64..1.0) {
            let td = td.to_radians();
            let set = sample_initial(&b, alpha, td, r_min).unwrap();
            if let Some(gap) = set.min_separation() {
                prop_assert!(gap >= td - 1e-9);
            }
            for (k, c) in set.candidates.iter().enumerate() {
                prop_assert_eq!(c.id, k as u32 + 1);
                let src = b.iter().find(|p| p.theta == c.theta).unwrap();
                prop_assert!(c.r <= alpha * src.r + 1e-12);
                prop_assert!(c.r >= r_min);
            }
            // every eligible point left out conflicts with a kept point at least as far
            for p in b.iter().filter(|p| alpha * p.r >= r_min) {
                if set.candidates.iter().any(|c| c.theta == p.theta) {
                    continue;
                }
                let covered = set
                    .candidates
                    .iter()
                    .any(|c| (c.theta - p.theta).abs() < td && c.r >= alpha * p.r - 1e-12);
                prop_assert!(covered);
            }
        }

        #[test]
        fn greedy_matches_exhaustive(b in prop::collection::vec((1u32..8, -60i32..60), 1..10), td in 3i32..30) {
            let mut v: Vec<(f64, f64)> = b.iter().map(|&(r, t)| (r as f64, t as f64)).collect();
            v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            v.dedup_by(|a, b| a.1 == b.1);
            let p = pts(&v);
            let set = sample_initial(&p, 0.5, deg(td as f64), 0.0).unwrap();
            let oracle: Vec<f64> = keep_set_oracle(&p, deg(td as f64)).iter().map(|&i| p[i].theta).collect();
            let got: Vec<f64> = set.candidates.iter().map(|c| c.theta).collect();
            prop_assert_eq!(got, oracle);
        }
    }
}
