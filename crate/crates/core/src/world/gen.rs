//! Procedural indoor worlds: rooms on a grid joined by doorways, with
//! furniture blocks and semantic objects.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, SemanticObject, WorldError, WorldMap, AGENT_RADIUS};
use crate::geometry::Point;

const COLORS: &[&str] = &[
    "red", "blue", "green", "white", "black", "grey", "brown", "yellow", "beige", "orange",
];
const MATERIALS: &[&str] = &[
    "wooden", "leather", "metal", "plastic", "fabric", "glass", "ceramic", "wicker",
];
const DISTRACTORS: &[&str] = &[
    "lamp", "bookshelf", "cabinet", "refrigerator", "sink", "desk", "printer", "trash_can",
];
/// Category used for hazard objects.
pub const HAZARD_CATEGORY: &str = "caution_sign";

const MAX_LAYOUT_TRIES: usize = 40;
const MAX_PLACE_TRIES: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenSpec {
    pub rooms: usize,
    pub categories: Vec<String>,
    pub objects_per_category: usize,
    pub distractors: usize,
    pub hazards: usize,
    pub resolution: f64,
    pub room_min_m: f64,
    pub room_max_m: f64,
    pub door_width_m: f64,
    /// Chance that a room gets a furniture block.
    pub clutter: f64,
}

impl Default for WorldGenSpec {
    fn default() -> Self {
        WorldGenSpec {
            rooms: 3,
            categories: vec!["sofa".into(), "toilet".into()],
            objects_per_category: 1,
            distractors: 3,
            hazards: 0,
            resolution: 0.1,
            room_min_m: 4.0,
            room_max_m: 6.5,
            door_width_m: 1.2,
            clutter: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Room {
    /// Inclusive cell range of the room interior.
    i0: usize,
    j0: usize,
    i1: usize,
    j1: usize,
}

struct Layout {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    rooms: Vec<Room>,
    doors: Vec<(usize, usize)>,
}

fn carve(cells: &mut [Cell], width: usize, i0: usize, j0: usize, i1: usize, j1: usize, c: Cell) {
    for j in j0..=j1 {
        for i in i0..=i1 {
            cells[j * width + i] = c;
        }
    }
}

fn build_layout(spec: &WorldGenSpec, rng: &mut ChaCha8Rng) -> Layout {
    let res = spec.resolution;
    let cols = (spec.rooms as f64).sqrt().ceil() as usize;
    let rows = spec.rooms.div_ceil(cols);
    let span = |rng: &mut ChaCha8Rng| -> usize {
        let m = rng.random_range(spec.room_min_m..=spec.room_max_m);
        (m / res).round().max(4.0) as usize
    };
    let col_w: Vec<usize> = (0..cols).map(|_| span(rng)).collect();
    let row_h: Vec<usize> = (0..rows).map(|_| span(rng)).collect();
    let width = col_w.iter().sum::<usize>() + cols + 1;
    let height = row_h.iter().sum::<usize>() + rows + 1;
    let mut cells = vec![Cell::Obstacle; width * height];

    // snake order keeps consecutive rooms adjacent
    let mut slots = Vec::new();
    for r in 0..rows {
        for k in 0..cols {
            let c = if r % 2 == 0 { k } else { cols - 1 - k };
            slots.push((r, c));
        }
    }
    slots.truncate(spec.rooms);

    let col_start: Vec<usize> = (0..cols)
        .map(|c| 1 + col_w[..c].iter().sum::<usize>() + c)
        .collect();
    let row_start: Vec<usize> = (0..rows)
        .map(|r| 1 + row_h[..r].iter().sum::<usize>() + r)
        .collect();
    let room_at = |r: usize, c: usize| Room {
        i0: col_start[c],
        j0: row_start[r],
        i1: col_start[c] + col_w[c] - 1,
        j1: row_start[r] + row_h[r] - 1,
    };
    let rooms: Vec<Room> = slots.iter().map(|&(r, c)| room_at(r, c)).collect();
    for room in &rooms {
        carve(&mut cells, width, room.i0, room.j0, room.i1, room.j1, Cell::Free);
    }

    let door_cells = ((spec.door_width_m / res).round() as usize).max(1);
    let margin = ((0.5 / res).round() as usize).max(1);
    let mut doors = Vec::new();
    let mut connect = |a: (usize, usize), b: (usize, usize), cells: &mut Vec<Cell>, rng: &mut ChaCha8Rng| {
        let (ra, rb) = (room_at(a.0, a.1), room_at(b.0, b.1));
        if a.0 == b.0 {
            // side by side: vertical wall column between them
            let wall_i = ra.i0.max(rb.i0) - 1;
            let lo = ra.j0 + margin;
            let hi = (ra.j1 + 1).saturating_sub(margin + door_cells).max(lo);
            let j = rng.random_range(lo..=hi);
            carve(cells, width, wall_i, j, wall_i, (j + door_cells - 1).min(ra.j1), Cell::Free);
            doors.push((wall_i, j + door_cells / 2));
        } else {
            let wall_j = ra.j0.max(rb.j0) - 1;
            let lo = ra.i0 + margin;
            let hi = (ra.i1 + 1).saturating_sub(margin + door_cells).max(lo);
            let i = rng.random_range(lo..=hi);
            carve(cells, width, i, wall_j, (i + door_cells - 1).min(ra.i1), wall_j, Cell::Free);
            doors.push((i + door_cells / 2, wall_j));
        }
    };
    for w in slots.windows(2) {
        connect(w[0], w[1], &mut cells, rng);
    }
    // occasional extra doors create loops
    for (k, &a) in slots.iter().enumerate() {
        for &b in slots.iter().skip(k + 2) {
            let adjacent = (a.0 == b.0 && a.1.abs_diff(b.1) == 1) || (a.1 == b.1 && a.0.abs_diff(b.0) == 1);
            if adjacent && rng.random_bool(0.3) {
                connect(a, b, &mut cells, rng);
            }
        }
    }
    Layout {
        width,
        height,
        cells,
        rooms,
        doors,
    }
}

fn add_clutter(layout: &mut Layout, spec: &WorldGenSpec, rng: &mut ChaCha8Rng) {
    let res = spec.resolution;
    let keep_out = (1.2 / res).ceil() as i64;
    for room in layout.rooms.clone() {
        if !rng.random_bool(spec.clutter.clamp(0.0, 1.0)) {
            continue;
        }
        let w = ((rng.random_range(0.4..1.0)) / res).round() as usize;
        let h = ((rng.random_range(0.4..1.0)) / res).round() as usize;
        let pad = (0.8 / res).round() as usize;
        if room.i1 < room.i0 + 2 * pad + w || room.j1 < room.j0 + 2 * pad + h {
            continue;
        }
        let i = rng.random_range(room.i0 + pad..=room.i1 - pad - w);
        let j = rng.random_range(room.j0 + pad..=room.j1 - pad - h);
        let near_door = layout.doors.iter().any(|&(di, dj)| {
            let ci = (i + w / 2) as i64;
            let cj = (j + h / 2) as i64;
            (ci - di as i64).abs() < keep_out + w as i64 && (cj - dj as i64).abs() < keep_out + h as i64
        });
        if !near_door {
            carve(&mut layout.cells, layout.width, i, j, i + w - 1, j + h - 1, Cell::Obstacle);
        }
    }
}

fn pick_attributes(rng: &mut ChaCha8Rng) -> Vec<String> {
    vec![
        COLORS.choose(rng).unwrap().to_string(),
        MATERIALS.choose(rng).unwrap().to_string(),
    ]
}

fn try_generate(spec: &WorldGenSpec, rng: &mut ChaCha8Rng) -> Result<WorldMap, String> {
    let mut layout = build_layout(spec, rng);
    add_clutter(&mut layout, spec, rng);
    let res = spec.resolution;
    let mut world = WorldMap::new(
        res,
        layout.width,
        layout.height,
        Point::new(0.0, 0.0),
        layout.cells.clone(),
        Vec::new(),
    )
    .map_err(|e| e.to_string())?;
    if !world.free_space_connected() {
        return Err("free space not connected".into());
    }

    let mut wanted: Vec<(String, BTreeSet<String>)> = Vec::new();
    for c in &spec.categories {
        for _ in 0..spec.objects_per_category.max(1) {
            wanted.push((c.clone(), BTreeSet::new()));
        }
    }
    let pool: Vec<&str> = DISTRACTORS
        .iter()
        .copied()
        .filter(|d| !spec.categories.iter().any(|c| c == d))
        .collect();
    for _ in 0..spec.distractors {
        if let Some(d) = pool.choose(rng) {
            wanted.push((d.to_string(), BTreeSet::new()));
        }
    }
    for _ in 0..spec.hazards {
        wanted.push((HAZARD_CATEGORY.to_string(), BTreeSet::from(["hazard".to_string()])));
    }

    let door_pts: Vec<Point> = layout
        .doors
        .iter()
        .map(|&(i, j)| world.cell_center(i as i64, j as i64))
        .collect();
    let mut objects: Vec<SemanticObject> = Vec::new();
    let mut counters = std::collections::HashMap::new();
    for (category, tags) in wanted {
        let radius = if tags.is_empty() {
            rng.random_range(0.2..0.5)
        } else {
            0.25
        };
        let mut placed = None;
        for _ in 0..MAX_PLACE_TRIES {
            let room = layout.rooms.choose(rng).unwrap();
            let (x0, y0) = (room.i0 as f64 * res, room.j0 as f64 * res);
            let (x1, y1) = ((room.i1 + 1) as f64 * res, (room.j1 + 1) as f64 * res);
            let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
            if world.wall_clearance(p, radius + 1.0) < radius + 0.6 {
                continue;
            }
            if door_pts.iter().any(|d| d.dist(p) < radius + 1.2) {
                continue;
            }
            if objects.iter().any(|o| o.center.dist(p) < o.radius + radius + 0.9) {
                continue;
            }
            placed = Some(p);
            break;
        }
        let Some(center) = placed else {
            return Err(format!("could not place a {category}"));
        };
        let n = counters.entry(category.clone()).or_insert(0);
        *n += 1;
        objects.push(SemanticObject {
            name: format!("{}_{}", category.replace(' ', "_"), n),
            category,
            attributes: pick_attributes(rng),
            center,
            radius,
            tags,
        });
    }
    world.objects = objects;

    // every object must be reachable by the agent from the main region
    let open = world.inflated_free(AGENT_RADIUS, |_| false);
    let (label, sizes) = world.components(&open);
    let main = (0..sizes.len()).max_by_key(|&k| sizes[k]).ok_or("no open cells")?;
    for o in &world.objects {
        let reach = o.radius + 0.3;
        let cells = (reach / res).ceil() as i64 + 1;
        let (ci, cj) = world.cell_coords(o.center);
        let mut ok = false;
        for j in cj - cells..=cj + cells {
            for i in ci - cells..=ci + cells {
                if world.in_grid(i, j)
                    && label[world.idx(i, j)] == Some(main)
                    && world.cell_center(i, j).dist(o.center) <= reach
                {
                    ok = true;
                }
            }
        }
        if !ok {
            return Err(format!("{} unreachable", o.name));
        }
    }
    Ok(world)
}

/// Generates a world; identical `(seed, spec)` always yield the same map.
pub fn worldgen(seed: u64, spec: &WorldGenSpec) -> Result<WorldMap, WorldError> {
    if spec.rooms == 0 {
        return Err(WorldError::GenerationFailed("need at least one room".into()));
    }
    if spec.categories.is_empty() {
        return Err(WorldError::GenerationFailed(
            "need at least one object category".into(),
        ));
    }
    if !(spec.resolution > 0.0 && spec.room_min_m > 0.0 && spec.room_min_m <= spec.room_max_m) {
        return Err(WorldError::GenerationFailed("bad room or grid sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..MAX_LAYOUT_TRIES {
        match try_generate(spec, &mut rng) {
            Ok(w) => return Ok(w),
            Err(e) => last = e,
        }
    }
    Err(WorldError::GenerationFailed(format!(
        "gave up after {MAX_LAYOUT_TRIES} attempts: {last}"
    )))
}
