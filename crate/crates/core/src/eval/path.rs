//! Grid shortest paths for the SPL denominator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::EvalError;
use crate::geometry::Pose;
use crate::goal::GoalSpec;
use crate::world::WorldMap;

/// Cells a disc of `radius` may occupy (goal objects do not block) and the
/// cells that count as arrived: within `threshold` of a goal boundary.
pub fn search_grid(
    world: &WorldMap,
    goal: &GoalSpec,
    radius: f64,
    threshold: f64,
) -> Result<(Vec<bool>, Vec<bool>), EvalError> {
    let goals: Vec<_> = world.matching_objects(goal).collect();
    if goals.is_empty() {
        return Err(EvalError::UnresolvableGoal(goal.text.clone()));
    }
    let open = world.inflated_free(radius, |o| goal.matches(&o.category, &o.attributes));
    let mut target = vec![false; open.len()];
    for j in 0..world.height() as i64 {
        for i in 0..world.width() as i64 {
            let k = world.idx(i, j);
            if open[k] {
                let c = world.cell_center(i, j);
                target[k] = goals.iter().any(|o| o.boundary_dist(c) <= threshold);
            }
        }
    }
    Ok((open, target))
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// 8-connected Dijkstra on the inflated grid, no corner cutting, from the
/// start cell to the nearest arrival cell. Length in meters.
pub fn shortest_path(
    world: &WorldMap,
    start: &Pose,
    goal: &GoalSpec,
    radius: f64,
    threshold: f64,
) -> Result<f64, EvalError> {
    let (open, target) = search_grid(world, goal, radius, threshold)?;
    let (si, sj) = world.cell_coords(start.position());
    if !world.in_grid(si, sj) {
        return Err(EvalError::Unreachable);
    }
    let (w, h) = (world.width() as i64, world.height() as i64);
    let res = world.resolution();
    let mut dist = vec![f64::INFINITY; open.len()];
    let s = world.idx(si, sj);
    dist[s] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, s)]);
    while let Some(Entry(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        if target[k] {
            return Ok(d);
        }
        let (i, j) = (k as i64 % w, k as i64 / w);
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= w || nj >= h {
                continue;
            }
            let nk = world.idx(ni, nj);
            if !open[nk] {
                continue;
            }
            let diagonal = di != 0 && dj != 0;
            if diagonal && !(open[world.idx(i + di, j)] && open[world.idx(i, j + dj)]) {
                continue;
            }
            let nd = d + if diagonal { std::f64::consts::SQRT_2 * res } else { res };
            if nd < dist[nk] {
                dist[nk] = nd;
                heap.push(Entry(nd, nk));
            }
        }
    }
    Err(EvalError::Unreachable)
}
