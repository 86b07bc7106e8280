//! Planar poses, polar actions and angle helpers.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Smallest absolute difference between two angles, in `[0, π]`.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point reached by moving `r` along world-frame bearing `bearing`.
    pub fn offset(self, bearing: f64, r: f64) -> Point {
        Point::new(self.x + r * bearing.cos(), self.y + r * bearing.sin())
    }

    pub fn bearing_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Agent pose in the world frame. `heading` is kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn with_position(&self, p: Point) -> Pose {
        Pose {
            x: p.x,
            y: p.y,
            heading: self.heading,
        }
    }

    /// World-frame point at polar offset `(r, theta)` in the agent frame.
    pub fn project(&self, r: f64, theta: f64) -> Point {
        self.position().offset(self.heading + theta, r)
    }

    /// Bearing of a world point relative to the agent heading, in `[-π, π)`.
    pub fn relative_bearing(&self, p: Point) -> f64 {
        normalize_angle(self.position().bearing_to(p) - self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// A polar action: rotate by `theta` (relative yaw), then translate `r` forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolarAction {
    Move { r: f64, theta: f64 },
    Stop,
}

impl PolarAction {
    /// Builds a move, normalizing `theta`. Returns `None` for negative or non-finite `r`.
    pub fn new_move(r: f64, theta: f64) -> Option<Self> {
        if !(r.is_finite() && r >= 0.0 && theta.is_finite()) {
            return None;
        }
        Some(PolarAction::Move {
            r,
            theta: normalize_angle(theta),
        })
    }

    pub fn rotation(theta: f64) -> Self {
        PolarAction::Move {
            r: 0.0,
            theta: normalize_angle(theta),
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, PolarAction::Stop)
    }
}
