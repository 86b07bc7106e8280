//! Synthetic egocentric scans: a fan of semantic depth rays.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AgentBody, WorldError, WorldMap};
use crate::geometry::{Point, Pose};

/// Default ray count.
pub const DEFAULT_RAYS: usize = 181;
/// Horizontal field of view of the simulated camera, 131°.
pub const DEFAULT_FOV: f64 = 131.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub n_rays: usize,
    pub fov: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        Sensor {
            n_rays: DEFAULT_RAYS,
            fov: DEFAULT_FOV,
        }
    }
}

impl Sensor {
    /// Agent-frame angle of ray `k`; rays span `[-fov/2, fov/2]` inclusive.
    pub fn ray_theta(&self, k: usize) -> f64 {
        -self.fov / 2.0 + self.fov * k as f64 / (self.n_rays - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRef {
    pub name: String,
    pub category: String,
    pub attributes: Vec<String>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Hit {
    None,
    Wall,
    Object(ObjectRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    /// Agent-frame angle in radians.
    pub theta: f64,
    pub depth: f64,
    pub hit: Hit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub rays: Vec<Ray>,
    pub pose: Pose,
    pub step: u64,
    pub fov: f64,
}

impl Observation {
    /// World-frame endpoint of ray `k`.
    pub fn endpoint(&self, k: usize) -> Point {
        let r = &self.rays[k];
        self.pose.project(r.depth, r.theta)
    }

    /// Index of the ray closest in angle to `theta`.
    pub fn nearest_ray(&self, theta: f64) -> Option<usize> {
        self.rays
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.theta - theta)
                    .abs()
                    .total_cmp(&(b.1.theta - theta).abs())
            })
            .map(|(k, _)| k)
    }
}

/// Distance along the ray to the first obstacle cell, if within `max_t`.
pub(crate) fn cast_grid(world: &WorldMap, o: Point, dx: f64, dy: f64, max_t: f64) -> Option<f64> {
    let res = world.resolution();
    let origin = world.origin();
    let (mut i, mut j) = world.cell_coords(o);
    if world.is_obstacle(i, j) {
        return Some(0.0);
    }
    let step_i: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_j: i64 = if dy > 0.0 { 1 } else { -1 };
    // boundaries are recomputed from integer indices so distances to
    // axis-aligned faces come out exact
    let next_x = |i: i64| -> f64 {
        if dx == 0.0 {
            f64::INFINITY
        } else {
            let edge = if dx > 0.0 { i + 1 } else { i };
            (origin.x + edge as f64 * res - o.x) / dx
        }
    };
    let next_y = |j: i64| -> f64 {
        if dy == 0.0 {
            f64::INFINITY
        } else {
            let edge = if dy > 0.0 { j + 1 } else { j };
            (origin.y + edge as f64 * res - o.y) / dy
        }
    };
    loop {
        let (tx, ty) = (next_x(i), next_y(j));
        let t = if tx < ty {
            i += step_i;
            tx
        } else {
            j += step_j;
            ty
        };
        if t > max_t {
            return None;
        }
        if world.is_obstacle(i, j) {
            return Some(t.max(0.0));
        }
    }
}

/// Smallest non-negative ray parameter hitting a circle, if any.
pub(crate) fn cast_circle(o: Point, dx: f64, dy: f64, c: Point, radius: f64) -> Option<f64> {
    let (fx, fy) = (c.x - o.x, c.y - o.y);
    let b = fx * dx + fy * dy;
    let cc = fx * fx + fy * fy - radius * radius;
    if cc <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - cc;
    if disc < 0.0 || b <= 0.0 {
        return None;
    }
    // numerically stable smaller root of t² - 2bt + cc = 0
    let t = cc / (b + disc.sqrt());
    Some(t)
}

/// Casts `sensor.n_rays` rays evenly across the field of view.
pub fn sense(
    world: &WorldMap,
    pose: &Pose,
    body: &AgentBody,
    sensor: &Sensor,
    step: u64,
) -> Result<Observation, WorldError> {
    if sensor.n_rays < 8 {
        return Err(WorldError::InvalidSensor(format!(
            "need at least 8 rays, got {}",
            sensor.n_rays
        )));
    }
    if !(sensor.fov > 0.0 && sensor.fov < std::f64::consts::TAU) {
        return Err(WorldError::InvalidSensor("fov must be in (0, 2π)".into()));
    }
    let o = pose.position();
    if !pose.is_finite() || !world.contains(o) {
        return Err(WorldError::PoseOutOfBounds { x: pose.x, y: pose.y });
    }
    let d_max = body.max_sense;
    let rays = (0..sensor.n_rays)
        .map(|k| {
            let theta = sensor.ray_theta(k);
            let (s, c) = (pose.heading + theta).sin_cos();
            let mut best = d_max;
            let mut hit = Hit::None;
            if let Some(t) = cast_grid(world, o, c, s, d_max) {
                best = t;
                hit = Hit::Wall;
            }
            for obj in world.objects() {
                if let Some(t) = cast_circle(o, c, s, obj.center, obj.radius) {
                    if t < best || (t <= best && hit == Hit::None) {
                        best = t;
                        hit = Hit::Object(ObjectRef {
                            name: obj.name.clone(),
                            category: obj.category.clone(),
                            attributes: obj.attributes.clone(),
                            tags: obj.tags.clone(),
                        });
                    }
                }
            }
            Ray {
                theta,
                depth: best.max(1e-9),
                hit,
            }
        })
        .collect();
    Ok(Observation {
        rays,
        pose: *pose,
        step,
        fov: sensor.fov,
    })
}
