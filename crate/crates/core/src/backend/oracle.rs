//! Deterministic rule-based backend. It only looks at what a request
//! carries (rays, candidates, memory text), never at the world.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::wire::{
    validate_response, DecisionRequest, DecisionResponse, MemoryOp, RequestKind, WirePose, WireRay,
    WireScore,
};
use super::{BackendError, DecisionBackend};
use crate::geometry::{angle_dist, Point, Pose};
use crate::goal::{normalize_term, GoalSpec};
use crate::memory::parse_text;

pub const HAZARD_TAG: &str = "hazard";
const NEXT_TO: &str = "next to";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Stop when the goal is seen at or within this range.
    pub success_threshold: f64,
    /// Upper bound on the size of any hazard; used when a hazard is seen by
    /// too few rays to fit its outline.
    pub max_hazard_radius: f64,
    pub next_to_distance: f64,
    pub tie_jitter: f64,
    /// Kernel widths (m) of the visit density and of view coverage, used
    /// while exploring.
    pub visit_sigma: f64,
    pub view_sigma: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            success_threshold: 0.3,
            max_hazard_radius: 1.0,
            next_to_distance: 1.0,
            tie_jitter: 0.01,
            visit_sigma: 1.0,
            view_sigma: 2.5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    pub cfg: OracleConfig,
}

impl OracleBackend {
    pub fn new(cfg: OracleConfig) -> Self {
        OracleBackend { cfg }
    }

    pub fn respond(&self, req: &DecisionRequest) -> DecisionResponse {
        match req.kind {
            RequestKind::Filter => self.filter(req),
            RequestKind::Score => self.score(req),
            RequestKind::StopCheck => self.stop(req),
            RequestKind::MemoryExtract => {
                let mut r = DecisionResponse::empty(RequestKind::MemoryExtract);
                r.memory_ops = self.memory_ops(req);
                r
            }
        }
    }

    fn filter(&self, req: &DecisionRequest) -> DecisionResponse {
        let mut resp = DecisionResponse::empty(RequestKind::Filter);
        let pose = req.observation.pose.to_pose();
        let nouns: Vec<String> = req.constraints.iter().filter_map(|c| constraint_noun(c)).collect();
        let named = |ray: &WireRay| {
            let terms = [ray.label.as_deref(), ray.category.as_deref()];
            nouns.iter().any(|n| {
                terms
                    .iter()
                    .flatten()
                    .any(|t| normalize_term(t).contains(n.as_str()))
            })
        };
        let discs = if req.hazard_clearance_m > 0.0 {
            self.hazard_discs(req, &pose, &named)
        } else {
            Vec::new()
        };
        for c in req.candidates.iter().flatten() {
            let theta = c.theta_deg.to_radians();
            let q = pose.project(c.r_m, theta);
            let near_hazard = discs
                .iter()
                .any(|d| q.dist(d.center) - d.radius < req.hazard_clearance_m + 1e-9);
            let on_named = nearest_ray(&req.observation.rays, c.theta_deg).is_some_and(&named);
            if near_hazard || on_named {
                resp.removals.push(c.id);
            }
        }
        if !resp.removals.is_empty() {
            resp.rationale = Some(format!("removed {:?} near hazards or constraints", resp.removals));
        }
        resp
    }

    /// Outline estimates of hazard-tagged or constraint-named objects in view.
    fn hazard_discs(
        &self,
        req: &DecisionRequest,
        pose: &Pose,
        named: &dyn Fn(&WireRay) -> bool,
    ) -> Vec<Disc> {
        let mut groups: BTreeMap<&str, Vec<Point>> = BTreeMap::new();
        for ray in &req.observation.rays {
            let Some(label) = ray.label.as_deref() else {
                continue;
            };
            if ray.is_object() && (ray.tags.contains(HAZARD_TAG) || named(ray)) {
                groups
                    .entry(label)
                    .or_default()
                    .push(pose.project(ray.distance_m, ray.theta_deg.to_radians()));
            }
        }
        let r_max = self.cfg.max_hazard_radius;
        groups
            .values()
            .map(|pts| {
                let fit = (pts.len() >= 3)
                    .then(|| circumcircle(pts[0], pts[pts.len() / 2], pts[pts.len() - 1]))
                    .flatten()
                    .filter(|d| {
                        d.radius <= r_max
                            && pts.iter().all(|p| (p.dist(d.center) - d.radius).abs() < 1e-3)
                    });
                // any surface point is within 2·r_max of the whole outline
                fit.unwrap_or(Disc {
                    center: pts[0],
                    radius: 2.0 * r_max,
                })
            })
            .collect()
    }

    fn score(&self, req: &DecisionRequest) -> DecisionResponse {
        let mut resp = DecisionResponse::empty(RequestKind::Score);
        let goal = goal_of(req);
        let pose = req.observation.pose.to_pose();
        let cands = req.candidates.as_deref().unwrap_or_default();
        let visible = visible_goal(&goal, &req.observation.rays);
        let remembered = visible
            .is_none()
            .then(|| remembered_goal(&goal, &req.memory_text, &pose))
            .flatten();
        resp.scores = match (visible, remembered) {
            (Some(ray), _) => {
                resp.rationale = Some("goal in view".to_string());
                let bearing = ray.theta_deg.to_radians();
                cands
                    .iter()
                    .map(|c| WireScore {
                        id: c.id,
                        s: 1.0 - angle_dist(c.theta_deg.to_radians(), bearing) / std::f64::consts::PI,
                    })
                    .collect()
            }
            (None, Some(target)) => {
                // out of view: close the remaining distance, so a goal behind
                // the agent is approached by short turning moves
                resp.rationale = Some("goal remembered".to_string());
                cands
                    .iter()
                    .map(|c| WireScore {
                        id: c.id,
                        s: {
                            let theta = c.theta_deg.to_radians();
                            let aim = 1.0 - angle_dist(theta, pose.relative_bearing(target)) / std::f64::consts::PI;
                            let gap = pose.project(c.r_m, theta).dist(target);
                            0.5 * aim + 0.5 / (1.0 + gap)
                        },
                    })
                    .collect()
            }
            (None, None) => {
                resp.rationale = Some("exploring".to_string());
                let r_max = cands.iter().map(|c| c.r_m).fold(0.0, f64::max);
                let visited: Vec<Pose> = req.visited.iter().map(WirePose::to_pose).collect();
                let half_fov = req.observation.fov_deg.to_radians() / 2.0;
                let j = self.cfg.tie_jitter;
                cands
                    .iter()
                    .map(|c| {
                        let reach = if r_max > 0.0 { c.r_m / r_max } else { 0.0 };
                        let theta = c.theta_deg.to_radians();
                        let end = pose.project(c.r_m, theta);
                        let frac = if visited.is_empty() {
                            reach
                        } else {
                            let heading = pose.heading + theta;
                            // the visit penalty grows without bound, so a loop
                            // eventually loses to anything off it
                            let raw = reach + self.view_novelty(&visited, end, heading, half_fov)
                                - 1.0 * self.visit_density(&visited, end);
                            1.0 / (1.0 + (-raw).exp())
                        };
                        WireScore {
                            id: c.id,
                            s: (1.0 - j) * frac + j * unit_hash(&req.session_id, req.step, c.id),
                        }
                    })
                    .collect()
            }
        };
        resp.memory_ops = self.memory_ops(req);
        resp
    }

    /// Gaussian-kernel count of past decision positions around `p`.
    fn visit_density(&self, visited: &[Pose], p: Point) -> f64 {
        let s2 = 2.0 * self.cfg.visit_sigma * self.cfg.visit_sigma;
        visited.iter().map(|v| (-v.position().dist(p).powi(2) / s2).exp()).sum()
    }

    /// How unseen the ground ahead of `from` along `heading` is, in (0, 1]:
    /// probe points count as seen by past poses that faced them.
    fn view_novelty(&self, visited: &[Pose], from: Point, heading: f64, half_fov: f64) -> f64 {
        let s2 = 2.0 * self.cfg.view_sigma * self.cfg.view_sigma;
        let probes = [(-0.5, 2.0), (0.0, 1.5), (0.0, 3.0), (0.5, 2.0)];
        probes
            .iter()
            .map(|&(a, d)| {
                let q = from.offset(heading + a * half_fov, d);
                let seen: f64 = visited
                    .iter()
                    .filter(|v| v.relative_bearing(q).abs() <= half_fov)
                    .map(|v| (-v.position().dist(q).powi(2) / s2).exp())
                    .sum();
                1.0 / (1.0 + seen)
            })
            .sum::<f64>()
            / probes.len() as f64
    }

    fn stop(&self, req: &DecisionRequest) -> DecisionResponse {
        let mut resp = DecisionResponse::empty(RequestKind::StopCheck);
        let goal = goal_of(req);
        let close = req
            .observation
            .rays
            .iter()
            .any(|r| ray_matches(&goal, r) && r.distance_m <= self.cfg.success_threshold);
        resp.s_stop = Some(if close { 1.0 } else { 0.0 });
        resp
    }

    /// One node per object in view (at its nearest seen point) and
    /// "next to" edges between objects seen within `next_to_distance`.
    fn memory_ops(&self, req: &DecisionRequest) -> Vec<MemoryOp> {
        let pose = req.observation.pose.to_pose();
        let mut seen: BTreeMap<&str, (&WireRay, Point)> = BTreeMap::new();
        for ray in &req.observation.rays {
            let (Some(label), true) = (ray.label.as_deref(), ray.is_object()) else {
                continue;
            };
            let p = pose.project(ray.distance_m, ray.theta_deg.to_radians());
            match seen.get(label) {
                Some((best, _)) if best.distance_m <= ray.distance_m => {}
                _ => {
                    seen.insert(label, (ray, p));
                }
            }
        }
        let mut ops: Vec<MemoryOp> = seen
            .iter()
            .map(|(name, (ray, p))| MemoryOp::AddNode {
                name: name.to_string(),
                attributes: ray.attributes.clone(),
                location: Some([p.x, p.y]),
            })
            .collect();
        let list: Vec<(&str, Point)> = seen.iter().map(|(n, (_, p))| (*n, *p)).collect();
        for (i, (a, pa)) in list.iter().enumerate() {
            for (b, pb) in &list[i + 1..] {
                if pa.dist(*pb) <= self.cfg.next_to_distance {
                    ops.push(MemoryOp::AddEdge {
                        start: a.to_string(),
                        target: b.to_string(),
                        relation: NEXT_TO.to_string(),
                    });
                }
            }
        }
        ops
    }
}

impl DecisionBackend for OracleBackend {
    fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError> {
        req.validate()?;
        validate_response(req, self.respond(req))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Disc {
    center: Point,
    radius: f64,
}

fn circumcircle(a: Point, b: Point, c: Point) -> Option<Disc> {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-12 {
        return None;
    }
    let (b2, c2) = (bx * bx + by * by, cx * cx + cy * cy);
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = Point::new(a.x + ux, a.y + uy);
    let radius = (ux * ux + uy * uy).sqrt();
    radius.is_finite().then_some(Disc { center, radius })
}

/// "stay away from the oven" → "oven".
pub fn constraint_noun(constraint: &str) -> Option<String> {
    const LEADS: [&str; 8] = [
        "stay away from",
        "keep away from",
        "keep clear of",
        "do not go near",
        "don't go near",
        "avoid",
        "steer clear of",
        "stay clear of",
    ];
    let mut s = normalize_term(constraint);
    s = s.trim_end_matches(['.', '!', ',']).trim().to_string();
    for lead in LEADS {
        if let Some(rest) = s.strip_prefix(lead) {
            s = rest.trim().to_string();
            break;
        }
    }
    for art in ["the ", "a ", "an ", "any "] {
        if let Some(rest) = s.strip_prefix(art) {
            s = rest.trim().to_string();
            break;
        }
    }
    (!s.is_empty()).then_some(s)
}

fn goal_of(req: &DecisionRequest) -> GoalSpec {
    req.goal
        .clone()
        .unwrap_or_else(|| GoalSpec::name(normalize_term(&req.goal_text)))
}

fn ray_matches(goal: &GoalSpec, ray: &WireRay) -> bool {
    ray.category
        .as_deref()
        .is_some_and(|c| goal.matches(c, &ray.attributes))
}

fn visible_goal<'a>(goal: &GoalSpec, rays: &'a [WireRay]) -> Option<&'a WireRay> {
    rays.iter()
        .filter(|r| ray_matches(goal, r))
        .min_by(|a, b| a.distance_m.total_cmp(&b.distance_m))
}

fn remembered_goal(goal: &GoalSpec, memory_text: &str, pose: &Pose) -> Option<Point> {
    parse_text(memory_text)
        .into_iter()
        .filter(|n| goal.matches_node(&n.name, n.attributes.iter()))
        .filter_map(|n| n.location.map(|(x, y)| Point::new(x, y)))
        .min_by(|a, b| a.dist(pose.position()).total_cmp(&b.dist(pose.position())))
}

fn nearest_ray(rays: &[WireRay], theta_deg: f64) -> Option<&WireRay> {
    rays.iter()
        .min_by(|a, b| (a.theta_deg - theta_deg).abs().total_cmp(&(b.theta_deg - theta_deg).abs()))
}

/// FNV-1a over (session, step, id), mapped to [0, 1).
fn unit_hash(session: &str, step: u64, id: u32) -> f64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = session
        .bytes()
        .chain(step.to_le_bytes())
        .chain(id.to_le_bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::wire::{WireCandidate, WireObservation, WirePose};
    use std::collections::BTreeSet;

    fn ray(theta_deg: f64, d: f64, label: Option<&str>, category: Option<&str>) -> WireRay {
        WireRay {
            theta_deg,
            distance_m: d,
            label: label.map(str::to_string),
            category: category.map(str::to_string),
            attributes: vec![],
            tags: BTreeSet::new(),
        }
    }

    fn request(kind: RequestKind, rays: Vec<WireRay>, cands: &[(u32, f64, f64)]) -> DecisionRequest {
        let obs = WireObservation {
            pose: WirePose { x: 0.0, y: 0.0, heading_deg: 0.0 },
            fov_deg: 131.0,
            rays,
        };
        let mut req = DecisionRequest::new(kind, "s", 3, &GoalSpec::name("toilet"), obs);
        if kind != RequestKind::StopCheck {
            req.candidates = Some(
                cands
                    .iter()
                    .map(|&(id, r_m, theta_deg)| WireCandidate { id, r_m, theta_deg })
                    .collect(),
            );
        }
        req
    }

    fn best(resp: &DecisionResponse) -> u32 {
        let mut s = resp.scores.clone();
        s.sort_by(|a, b| b.s.total_cmp(&a.s).then(a.id.cmp(&b.id)));
        s[0].id
    }

    #[test]
    fn visible_goal_scores_by_angle() {
        let rays = vec![
            ray(-30.0, 5.0, Some("wall"), None),
            ray(10.0, 3.0, Some("toilet_1"), Some("toilet")),
        ];
        let req = request(RequestKind::Score, rays, &[(1, 2.0, -30.0), (2, 2.0, 0.0), (3, 2.0, 12.0)]);
        let resp = OracleBackend::default().decide(&req).unwrap();
        assert_eq!(best(&resp), 3);
        // 1 − |12 − 10| / 180
        let s3 = resp.scores.iter().find(|s| s.id == 3).unwrap().s;
        assert!((s3 - (1.0 - 2.0 / 180.0)).abs() < 1e-12);
    }

    #[test]
    fn frontier_prefers_far() {
        let req = request(RequestKind::Score, vec![ray(0.0, 9.0, None, None)], &[(1, 2.0, -20.0), (2, 4.0, 0.0), (3, 3.0, 20.0)]);
        let b = OracleBackend::default();
        let resp = b.decide(&req).unwrap();
        assert_eq!(best(&resp), 2);
        assert_eq!(resp, b.decide(&req).unwrap());
        assert!(resp.scores.iter().all(|s| (0.0..=1.0).contains(&s.s)));
    }

    #[test]
    fn visited_ground_loses_to_new_ground() {
        let cands = [(1, 3.0, -40.0), (2, 3.0, 40.0)];
        let mut req = request(RequestKind::Score, vec![ray(0.0, 9.0, None, None)], &cands);
        let b = OracleBackend::default();
        let fresh = b.decide(&req).unwrap();
        assert!(fresh.scores.iter().all(|s| (0.0..=1.0).contains(&s.s)));
        // trail running through the endpoint of candidate 2
        let a = 40f64.to_radians();
        let end = Point::new(3.0 * a.cos(), 3.0 * a.sin());
        req.visited = (0..4)
            .map(|_| WirePose { x: end.x, y: end.y, heading_deg: 90.0 })
            .collect();
        let resp = b.decide(&req).unwrap();
        assert_eq!(best(&resp), 1);
        // more laps keep pushing it down
        req.visited.extend(req.visited.clone());
        let again = b.decide(&req).unwrap();
        let s2 = |r: &DecisionResponse| r.scores.iter().find(|s| s.id == 2).unwrap().s;
        assert!(s2(&again) < s2(&resp));
    }

    #[test]
    fn remembered_goal_steers() {
        let mut req = request(RequestKind::Score, vec![ray(0.0, 9.0, None, None)], &[(1, 4.0, -40.0), (2, 4.0, 0.0), (3, 1.0, 40.0)]);
        // toilet remembered up and to the left of the agent
        req.memory_text = "toilet_1 (white) at (2.0, 2.0).\nsofa_1 at (5.0, 0.0).".into();
        let resp = OracleBackend::default().decide(&req).unwrap();
        assert_eq!(best(&resp), 3);
    }

    #[test]
    fn next_to_edges() {
        let rays = vec![
            ray(-2.0, 3.0, Some("chair_1"), Some("chair")),
            ray(2.0, 3.0, Some("table_1"), Some("table")),
            ray(60.0, 3.0, Some("lamp_1"), Some("lamp")),
        ];
        let req = request(RequestKind::Score, rays, &[(1, 1.0, 0.0)]);
        let ops = OracleBackend::default().decide(&req).unwrap().memory_ops;
        let nodes = ops.iter().filter(|o| matches!(o, MemoryOp::AddNode { .. })).count();
        assert_eq!(nodes, 3);
        // chair/table endpoints are 2·3·sin(2°) ≈ 0.21 m apart
        let edges: Vec<_> = ops
            .iter()
            .filter_map(|o| match o {
                MemoryOp::AddEdge { start, target, .. } => Some((start.as_str(), target.as_str())),
                _ => None,
            })
            .collect();
        assert_eq!(edges, vec![("chair_1", "table_1")]);
    }

    #[test]
    fn stop_rule() {
        let b = OracleBackend::default();
        let at = |d: f64| {
            let req = request(RequestKind::StopCheck, vec![ray(0.0, d, Some("toilet_1"), Some("toilet"))], &[]);
            b.decide(&req).unwrap().s_stop.unwrap()
        };
        assert_eq!(at(0.25), 1.0);
        assert_eq!(at(0.3), 1.0);
        assert_eq!(at(2.0), 0.0);
        let req = request(RequestKind::StopCheck, vec![ray(0.0, 0.2, Some("sofa_1"), Some("sofa"))], &[]);
        assert_eq!(b.decide(&req).unwrap().s_stop, Some(0.0));
    }

    #[test]
    fn hazard_removal() {
        // a sign of radius 0.3 centered 2 m ahead, seen by five rays
        let c = Point::new(2.0, 0.0);
        let rays: Vec<WireRay> = [-6.0f64, -3.0, 0.0, 3.0, 6.0]
            .iter()
            .map(|&t| {
                let (s, co) = t.to_radians().sin_cos();
                let d = crate::world::sensing::cast_circle(Point::new(0.0, 0.0), co, s, c, 0.3).unwrap();
                let mut r = ray(t, d, Some("wet_floor_sign_1"), Some("wet_floor_sign"));
                r.tags.insert(HAZARD_TAG.into());
                r
            })
            .collect();
        // candidate 1 lands 0.3 m from the sign; candidate 2 is far away
        let mut req = request(RequestKind::Filter, rays, &[(1, 1.4, 0.0), (2, 3.0, 60.0)]);
        req.hazard_clearance_m = 0.5;
        let resp = OracleBackend::default().decide(&req).unwrap();
        assert_eq!(resp.removals, vec![1]);
        assert!(resp.adjustments.is_empty());
        req.hazard_clearance_m = 0.0;
        assert!(OracleBackend::default().decide(&req).unwrap().removals.is_empty());
    }

    #[test]
    fn constraint_keyword_removal() {
        let rays = vec![ray(0.0, 3.0, Some("oven_1"), Some("oven")), ray(40.0, 6.0, Some("wall"), None)];
        let mut req = request(RequestKind::Filter, rays, &[(1, 2.0, 1.0), (2, 4.0, 40.0)]);
        req.constraints = vec!["stay away from the oven".into()];
        assert_eq!(OracleBackend::default().decide(&req).unwrap().removals, vec![1]);
        assert_eq!(constraint_noun("Avoid the caution sign."), Some("caution sign".into()));
        assert_eq!(constraint_noun("avoid"), None);
    }

    #[test]
    fn circle_fit_is_exact() {
        let c = Point::new(1.5, -2.0);
        let on = |a: f64| c.offset(a, 0.4);
        let d = circumcircle(on(0.1), on(0.5), on(1.2)).unwrap();
        assert!(d.center.dist(c) < 1e-9 && (d.radius - 0.4).abs() < 1e-9);
        assert!(circumcircle(Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)).is_none());
    }
}
