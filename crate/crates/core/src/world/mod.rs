//! Deterministic 2D world: occupancy grid plus disc-shaped semantic objects.
//!
//! Cell `(i, j)` covers `[ox + i·res, ox + (i+1)·res) × [oy + j·res, oy + (j+1)·res)`
//! where `(ox, oy)` is the map origin. Everything outside the grid counts as
//! obstacle.

mod format;
pub mod gen;
pub mod motion;
pub mod sensing;

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Pose};
use crate::goal::GoalSpec;

pub use format::WorldFile;
pub use gen::{worldgen, WorldGenSpec};
pub use motion::{execute, reactive_avoid, reactive_avoid_except, MotionResult};
pub use sensing::{sense, Hit, ObjectRef, Observation, Ray, Sensor};

/// Default agent radius in meters.
pub const AGENT_RADIUS: f64 = 0.17;
/// Default sensing range in meters.
pub const DEFAULT_MAX_SENSE: f64 = 10.0;
/// Extra clearance on top of the body radius used by reactive avoidance.
pub const AVOID_MARGIN: f64 = 0.15;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("pose ({x:.3}, {y:.3}) lies outside the map")]
    PoseOutOfBounds { x: f64, y: f64 },
    #[error("no collision-free escape pose exists")]
    NoEscape,
    #[error("no object in the world matches goal `{0}`")]
    UnresolvableGoal(String),
    #[error("world generation failed: {0}")]
    GenerationFailed(String),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("invalid sensor: {0}")]
    InvalidSensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("world file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Obstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticObject {
    pub name: String,
    pub category: String,
    pub attributes: Vec<String>,
    pub center: Point,
    pub radius: f64,
    pub tags: BTreeSet<String>,
}

impl SemanticObject {
    pub fn new(name: &str, category: &str, center: Point, radius: f64) -> Self {
        SemanticObject {
            name: name.to_string(),
            category: category.to_string(),
            attributes: Vec::new(),
            center,
            radius,
            tags: BTreeSet::new(),
        }
    }

    pub fn with_attributes(mut self, attrs: &[&str]) -> Self {
        self.attributes = attrs.iter().map(|a| a.to_string()).collect();
        self
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tags.insert(tag.to_string());
        self
    }

    pub fn is_hazard(&self) -> bool {
        self.tags.contains("hazard")
    }

    /// Signed distance from `p` to the disc boundary (negative inside).
    pub fn boundary_dist(&self, p: Point) -> f64 {
        p.dist(self.center) - self.radius
    }
}

/// The agent's physical footprint and sensing range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentBody {
    pub radius: f64,
    pub max_sense: f64,
}

impl Default for AgentBody {
    fn default() -> Self {
        AgentBody {
            radius: AGENT_RADIUS,
            max_sense: DEFAULT_MAX_SENSE,
        }
    }
}

/// Immutable after construction; share it across episodes freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorldFile", into = "WorldFile")]
pub struct WorldMap {
    resolution: f64,
    width: usize,
    height: usize,
    origin: Point,
    cells: Vec<Cell>,
    objects: Vec<SemanticObject>,
}

/// Nearest obstacle to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestObstacle {
    pub dist: f64,
    pub point: Point,
}

impl WorldMap {
    pub fn new(
        resolution: f64,
        width: usize,
        height: usize,
        origin: Point,
        cells: Vec<Cell>,
        objects: Vec<SemanticObject>,
    ) -> Result<Self, WorldError> {
        let w = WorldMap {
            resolution,
            width,
            height,
            origin,
            cells,
            objects,
        };
        w.validate()?;
        Ok(w)
    }

    /// Builds a map from ASCII rows, `#` for obstacle and anything else free.
    /// The first row is the top of the map (largest y).
    pub fn from_ascii(
        rows: &[&str],
        resolution: f64,
        origin: Point,
        objects: Vec<SemanticObject>,
    ) -> Result<Self, WorldError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = vec![Cell::Free; width * height];
        for (row_idx, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(WorldError::Invalid("ragged ascii rows".into()));
            }
            let j = height - 1 - row_idx;
            for (i, ch) in row.chars().enumerate() {
                if ch == '#' {
                    cells[j * width + i] = Cell::Obstacle;
                }
            }
        }
        WorldMap::new(resolution, width, height, origin, cells, objects)
    }

    /// Open map of `width_m × height_m` with no walls except the map edge.
    pub fn open(width_m: f64, height_m: f64, resolution: f64, origin: Point) -> Self {
        let width = (width_m / resolution).round() as usize;
        let height = (height_m / resolution).round() as usize;
        WorldMap::new(
            resolution,
            width,
            height,
            origin,
            vec![Cell::Free; width * height],
            Vec::new(),
        )
        .expect("open map is valid")
    }

    /// Replaces the object list, re-validating the map.
    pub fn with_objects(mut self, objects: Vec<SemanticObject>) -> Result<Self, WorldError> {
        self.objects = objects;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), WorldError> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(WorldError::Invalid("resolution must be > 0".into()));
        }
        if self.width == 0 || self.height == 0 || self.cells.len() != self.width * self.height {
            return Err(WorldError::Invalid(format!(
                "grid has {} cells, expected {}x{}",
                self.cells.len(),
                self.width,
                self.height
            )));
        }
        if !self.cells.contains(&Cell::Free) {
            return Err(WorldError::Invalid("map has no free cell".into()));
        }
        let (x0, y0, x1, y1) = self.bounds();
        let mut names = HashSet::new();
        for o in &self.objects {
            if !names.insert(o.name.as_str()) {
                return Err(WorldError::Invalid(format!("duplicate object `{}`", o.name)));
            }
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return Err(WorldError::Invalid(format!("object `{}` radius <= 0", o.name)));
            }
            let c = o.center;
            if c.x - o.radius < x0 || c.x + o.radius > x1 || c.y - o.radius < y0 || c.y + o.radius > y1
            {
                return Err(WorldError::Invalid(format!(
                    "object `{}` footprint leaves the map",
                    o.name
                )));
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }
    pub fn objects(&self) -> &[SemanticObject] {
        &self.objects
    }

    pub fn object(&self, name: &str) -> Option<&SemanticObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// `(x0, y0, x1, y1)` of the mapped area in meters.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        let (x0, y0, x1, y1) = self.bounds();
        p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1
    }

    /// Cell index (possibly out of range) containing `p`.
    pub fn cell_coords(&self, p: Point) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, i: i64, j: i64) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    pub fn in_grid(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn idx(&self, i: i64, j: i64) -> usize {
        j as usize * self.width + i as usize
    }

    /// Out-of-grid cells are obstacles.
    pub fn is_obstacle(&self, i: i64, j: i64) -> bool {
        !self.in_grid(i, j) || self.cells[self.idx(i, j)] == Cell::Obstacle
    }

    fn cell_rect_dist(&self, p: Point, i: i64, j: i64) -> (f64, Point) {
        let x0 = self.origin.x + i as f64 * self.resolution;
        let y0 = self.origin.y + j as f64 * self.resolution;
        let q = Point::new(
            p.x.clamp(x0, x0 + self.resolution),
            p.y.clamp(y0, y0 + self.resolution),
        );
        (p.dist(q), q)
    }

    /// Nearest obstacle cell or map edge within `cap` of `p`.
    pub fn nearest_wall(&self, p: Point, cap: f64) -> Option<NearestObstacle> {
        let (x0, y0, x1, y1) = self.bounds();
        if !self.contains(p) {
            return Some(NearestObstacle { dist: 0.0, point: p });
        }
        let mut best: Option<NearestObstacle> = None;
        let mut consider = |dist: f64, point: Point| {
            if dist <= cap && best.is_none_or(|b| dist < b.dist) {
                best = Some(NearestObstacle { dist, point });
            }
        };
        consider(p.x - x0, Point::new(x0, p.y));
        consider(x1 - p.x, Point::new(x1, p.y));
        consider(p.y - y0, Point::new(p.x, y0));
        consider(y1 - p.y, Point::new(p.x, y1));

        let reach = (cap / self.resolution).ceil() as i64 + 1;
        let (ci, cj) = self.cell_coords(p);
        for j in (cj - reach).max(0)..=(cj + reach).min(self.height as i64 - 1) {
            for i in (ci - reach).max(0)..=(ci + reach).min(self.width as i64 - 1) {
                if self.cells[self.idx(i, j)] == Cell::Obstacle {
                    let (d, q) = self.cell_rect_dist(p, i, j);
                    consider(d, q);
                }
            }
        }
        best
    }

    /// Distance from `p` to the nearest wall, capped at `cap`.
    pub fn wall_clearance(&self, p: Point, cap: f64) -> f64 {
        self.nearest_wall(p, cap).map_or(cap, |n| n.dist)
    }

    /// Distance from `p` to the nearest wall or object boundary, capped at
    /// `cap`. Negative when `p` is inside an object.
    pub fn clearance(&self, p: Point, cap: f64) -> f64 {
        self.clearance_excluding(p, cap, |_| false)
    }

    pub fn clearance_excluding(
        &self,
        p: Point,
        cap: f64,
        skip: impl Fn(&SemanticObject) -> bool,
    ) -> f64 {
        let mut c = self.wall_clearance(p, cap);
        for o in &self.objects {
            if !skip(o) {
                c = c.min(o.boundary_dist(p));
            }
        }
        c
    }

    /// Objects satisfying `goal`.
    pub fn matching_objects<'a>(
        &'a self,
        goal: &'a GoalSpec,
    ) -> impl Iterator<Item = &'a SemanticObject> + 'a {
        self.objects
            .iter()
            .filter(move |o| goal.matches(&o.category, &o.attributes))
    }

    /// Per-cell traversability for a disc of radius `inflate`: a cell is open
    /// iff it is free and its center keeps at least `inflate` from every wall
    /// and from every object not skipped.
    pub fn inflated_free(
        &self,
        inflate: f64,
        skip: impl Fn(&SemanticObject) -> bool,
    ) -> Vec<bool> {
        let mut open = vec![false; self.cells.len()];
        for j in 0..self.height as i64 {
            for i in 0..self.width as i64 {
                let k = self.idx(i, j);
                if self.cells[k] == Cell::Obstacle {
                    continue;
                }
                let c = self.cell_center(i, j);
                open[k] = self.clearance_excluding(c, inflate + self.resolution, &skip) >= inflate;
            }
        }
        open
    }

    /// 4-connected component labels over `open` cells; `None` for closed cells.
    pub fn components(&self, open: &[bool]) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut label = vec![None; open.len()];
        let mut sizes = Vec::new();
        for start in 0..open.len() {
            if !open[start] || label[start].is_some() {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            label[start] = Some(id);
            while let Some(k) = queue.pop_front() {
                size += 1;
                let (i, j) = ((k % self.width) as i64, (k / self.width) as i64);
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (ni, nj) = (i + di, j + dj);
                    if self.in_grid(ni, nj) {
                        let nk = self.idx(ni, nj);
                        if open[nk] && label[nk].is_none() {
                            label[nk] = Some(id);
                            queue.push_back(nk);
                        }
                    }
                }
            }
            sizes.push(size);
        }
        (label, sizes)
    }

    /// True when all free cells form one 4-connected region.
    pub fn free_space_connected(&self) -> bool {
        let open: Vec<bool> = self.cells.iter().map(|c| *c == Cell::Free).collect();
        self.components(&open).1.len() == 1
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), WorldError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }
}

/// Success predicate settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub threshold: f64,
    #[serde(default)]
    pub visibility_required: bool,
}

impl Default for SuccessCriterion {
    fn default() -> Self {
        SuccessCriterion {
            threshold: 0.3,
            visibility_required: false,
        }
    }
}

/// Distance from `pose` to the nearest boundary of an object matching `goal`.
pub fn goal_distance(world: &WorldMap, pose: &Pose, goal: &GoalSpec) -> Result<f64, WorldError> {
    world
        .matching_objects(goal)
        .map(|o| o.boundary_dist(pose.position()))
        .min_by(f64::total_cmp)
        .ok_or_else(|| WorldError::UnresolvableGoal(goal.text.clone()))
}

/// Is the agent within `criterion.threshold` (inclusive) of a matching object,
/// and, when visibility is required, does `obs` see one?
pub fn success(
    world: &WorldMap,
    pose: &Pose,
    goal: &GoalSpec,
    obs: &Observation,
    criterion: &SuccessCriterion,
) -> Result<bool, WorldError> {
    let dist = goal_distance(world, pose, goal)?;
    if dist > criterion.threshold {
        return Ok(false);
    }
    if criterion.visibility_required {
        return Ok(obs.rays.iter().any(|r| match &r.hit {
            Hit::Object(o) => goal.matches(&o.category, &o.attributes),
            _ => false,
        }));
    }
    Ok(true)
}
