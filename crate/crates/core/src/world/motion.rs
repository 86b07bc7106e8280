//! Agent kinematics: rotate-then-translate moves with swept-disc collision,
//! and reactive backing away from obstacles.

use serde::{Deserialize, Serialize};

use super::{AgentBody, SemanticObject, WorldError, WorldMap};
use crate::geometry::{normalize_angle, PolarAction, Point, Pose};

/// Gap left between the body and an obstacle when a move is cut short.
pub const CONTACT_EPS: f64 = 1e-4;
const MAX_ADVANCE_ITERS: usize = 100_000;
/// Longest single advancement step; bounds the clearance search window.
const MAX_STRIDE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionResult {
    pub new_pose: Pose,
    pub traveled: f64,
    pub truncated: bool,
}

/// Executes a polar action. The body sweeps along the new heading until
/// either `r` is covered or it comes within `CONTACT_EPS` of touching a wall
/// or object; every intermediate disc stays collision-free.
pub fn execute(world: &WorldMap, pose: &Pose, body: &AgentBody, action: &PolarAction) -> MotionResult {
    let (r, theta) = match *action {
        PolarAction::Move { r, theta } => (r, theta),
        PolarAction::Stop => {
            return MotionResult {
                new_pose: *pose,
                traveled: 0.0,
                truncated: false,
            }
        }
    };
    let heading = normalize_angle(pose.heading + theta);
    let start = pose.position();
    let mut s = 0.0;
    for _ in 0..MAX_ADVANCE_ITERS {
        if s >= r {
            break;
        }
        let p = start.offset(heading, s);
        let cap = body.radius + MAX_STRIDE;
        let free = world.clearance(p, cap) - body.radius;
        if free <= CONTACT_EPS {
            break;
        }
        // conservative advancement: moving by less than the free gap cannot
        // bring any obstacle inside the disc
        s = (s + free - CONTACT_EPS / 2.0).min(r);
    }
    let new_pose = Pose {
        x: if s > 0.0 { start.offset(heading, s).x } else { pose.x },
        y: if s > 0.0 { start.offset(heading, s).y } else { pose.y },
        heading,
    };
    MotionResult {
        new_pose,
        traveled: s,
        truncated: s < r,
    }
}

/// If a wall or object is closer than `clearance`, pushes the agent straight
/// away from the nearest obstacle point until `clearance` is restored or it
/// has moved `2 × clearance`.
pub fn reactive_avoid(
    world: &WorldMap,
    pose: &Pose,
    body: &AgentBody,
    clearance: f64,
) -> Result<Pose, WorldError> {
    reactive_avoid_except(world, pose, body, clearance, |_| false)
}

/// Like [`reactive_avoid`], but objects for which `skip` holds do not repel;
/// they still count when checking that the displaced pose is collision-free.
pub fn reactive_avoid_except(
    world: &WorldMap,
    pose: &Pose,
    body: &AgentBody,
    clearance: f64,
    skip: impl Fn(&SemanticObject) -> bool,
) -> Result<Pose, WorldError> {
    let p = pose.position();
    let mut nearest: Option<(f64, Point)> = world
        .nearest_wall(p, clearance)
        .map(|n| (n.dist, n.point));
    for o in world.objects().iter().filter(|o| !skip(o)) {
        let d = o.boundary_dist(p);
        if nearest.is_none_or(|(b, _)| d < b) {
            nearest = Some((d, o.center));
        }
    }
    let (dist, from) = match nearest {
        Some((d, q)) if d < clearance => (d, q),
        _ => return Ok(*pose),
    };
    if p.dist(from) < 1e-9 {
        return Err(WorldError::NoEscape);
    }
    let away = from.bearing_to(p);
    let step = (world.resolution() / 4.0).min(0.005);
    let max_disp = 2.0 * clearance;
    let mut best: Option<(f64, Pose)> = None;
    let mut s = step;
    loop {
        let s_now = s.min(max_disp);
        let q = p.offset(away, s_now);
        if world.contains(q) {
            let gap = world.clearance_excluding(q, clearance, &skip);
            let free = world.clearance(q, clearance) >= body.radius;
            if free {
                if gap >= clearance {
                    return Ok(pose.with_position(q));
                }
                if best.is_none_or(|(b, _)| gap > b) {
                    best = Some((gap, pose.with_position(q)));
                }
            }
        }
        if s_now >= max_disp {
            break;
        }
        s += step;
    }
    match best {
        Some((gap, q)) if gap > dist => Ok(q),
        _ => Err(WorldError::NoEscape),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::world::SemanticObject;
    use std::f64::consts::PI;

    #[test]
    fn rotate_then_translate() {
        let w = WorldMap::open(20.0, 20.0, 0.1, Point::new(-10.0, -10.0));
        let m = execute(
            &w,
            &Pose::new(0.0, 0.0, 0.0),
            &AgentBody::default(),
            &PolarAction::Move { r: 2.0, theta: PI / 2.0 },
        );
        assert!(m.new_pose.x.abs() < 1e-12);
        assert!((m.new_pose.y - 2.0).abs() < 1e-12);
        assert!((m.new_pose.heading - PI / 2.0).abs() < 1e-12);
        assert_eq!(m.traveled, 2.0);
        assert!(!m.truncated);
    }

    #[test]
    fn pure_rotation() {
        let w = WorldMap::open(20.0, 20.0, 0.1, Point::new(-10.0, -10.0));
        let start = Pose::new(1.0, -2.0, 0.5);
        let m = execute(&w, &start, &AgentBody::default(), &PolarAction::rotation(PI / 4.0));
        assert_eq!((m.new_pose.x, m.new_pose.y), (1.0, -2.0));
        assert!((m.new_pose.heading - (0.5 + PI / 4.0)).abs() < 1e-12);
        assert_eq!(m.traveled, 0.0);
        assert!(!m.truncated);
    }

    /// Steps forward 1 mm at a time until the disc would overlap a wall.
    fn sweep_oracle(w: &WorldMap, start: Point, heading: f64, radius: f64, r: f64) -> f64 {
        let mut s = 0.0;
        while s + 0.001 <= r {
            let q = start.offset(heading, s + 0.001);
            if w.clearance(q, radius + 1.0) < radius {
                break;
            }
            s += 0.001;
        }
        s
    }

    #[test]
    fn truncated_at_wall() {
        // wall face 3 m ahead of the agent
        let mut rows = vec![];
        for _ in 0..60 {
            rows.push(format!("{}{}", ".".repeat(80), "#".repeat(20)));
        }
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let w = WorldMap::from_ascii(&refs, 0.1, Point::new(0.0, 0.0), vec![]).unwrap();
        let body = AgentBody::default();
        let start = Pose::new(5.0, 3.0, 0.0);
        let m = execute(&w, &start, &body, &PolarAction::Move { r: 5.0, theta: 0.0 });
        let oracle = sweep_oracle(&w, start.position(), 0.0, body.radius, 5.0);
        assert!((oracle - (3.0 - 0.17)).abs() <= 0.001);
        assert!((m.traveled - oracle).abs() <= 0.0011, "{} vs {oracle}", m.traveled);
        assert!(m.truncated);
        assert!(w.clearance(m.new_pose.position(), 1.0) >= body.radius);
    }

    #[test]
    fn truncated_at_object() {
        let mut w = WorldMap::open(20.0, 20.0, 0.1, Point::new(0.0, 0.0));
        w.objects
            .push(SemanticObject::new("sofa", "sofa", Point::new(12.0, 10.3), 0.4));
        let body = AgentBody::default();
        let start = Pose::new(8.0, 10.0, 0.0);
        let m = execute(&w, &start, &body, &PolarAction::Move { r: 6.0, theta: 0.0 });
        let oracle = sweep_oracle(&w, start.position(), 0.0, body.radius, 6.0);
        assert!((m.traveled - oracle).abs() <= 0.0011);
        assert!(m.truncated);
    }

    #[test]
    fn avoid_moves_directly_away() {
        // wall face at x = 1.0, agent 0.10 m from it
        let mut rows = vec![];
        for _ in 0..40 {
            rows.push(format!("{}{}", "#".repeat(10), ".".repeat(30)));
        }
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let w = WorldMap::from_ascii(&refs, 0.1, Point::new(0.0, 0.0), vec![]).unwrap();
        let body = AgentBody::default();
        let clearance = 0.32;
        let start = Pose::new(1.10, 2.0, 1.0);
        // brute-force nearest obstacle distance over all cells
        let mut brute = f64::INFINITY;
        for j in 0..40i64 {
            for i in 0..40i64 {
                if w.is_obstacle(i, j) {
                    let q = Point::new(
                        start.x.clamp(i as f64 * 0.1, i as f64 * 0.1 + 0.1),
                        start.y.clamp(j as f64 * 0.1, j as f64 * 0.1 + 0.1),
                    );
                    brute = brute.min(start.position().dist(q));
                }
            }
        }
        assert!((brute - 0.10).abs() < 1e-9);
        let moved = reactive_avoid(&w, &start, &body, clearance).unwrap();
        assert!(moved.x - start.x >= clearance - brute - 1e-9);
        assert!((moved.y - start.y).abs() < 1e-9);
        assert_eq!(moved.heading, start.heading);
    }

    #[test]
    fn avoid_objects_unless_skipped() {
        let w = WorldMap::open(20.0, 20.0, 0.1, Point::new(-10.0, -10.0))
            .with_objects(vec![SemanticObject::new("bin_1", "trash_can", Point::new(0.5, 0.0), 0.3)])
            .unwrap();
        let body = AgentBody::default();
        let p = Pose::new(0.0, 0.0, 1.0);
        let moved = reactive_avoid(&w, &p, &body, 0.32).unwrap();
        assert!(moved.x < -0.1 && moved.y.abs() < 1e-9);
        assert!(w.objects()[0].boundary_dist(moved.position()) >= 0.32 - 1e-9);
        assert_eq!(reactive_avoid_except(&w, &p, &body, 0.32, |o| o.category == "trash_can").unwrap(), p);
    }

    #[test]
    fn avoid_identity_when_clear() {
        let w = WorldMap::open(10.0, 10.0, 0.1, Point::new(0.0, 0.0));
        let p = Pose::new(5.0, 5.0, 0.2);
        assert_eq!(reactive_avoid(&w, &p, &AgentBody::default(), 0.32).unwrap(), p);
    }

    #[test]
    fn avoid_no_escape_when_enclosed() {
        let w = WorldMap::from_ascii(&["#####", "#...#", "#####"], 0.1, Point::new(0.0, 0.0), vec![])
            .unwrap();
        let p = Pose::new(0.25, 0.15, 0.0);
        assert!(matches!(
            reactive_avoid(&w, &p, &AgentBody::default(), 0.32),
            Err(WorldError::NoEscape)
        ));
    }
}
