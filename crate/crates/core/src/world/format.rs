//! On-disk world format (`dynav-world/1`).
//!
//! Grid rows are run-length encoded strings of `<count><symbol>` runs where
//! `.` is free and `#` is obstacle, e.g. `"3#40.3#"`. Row 0 is the bottom row
//! (smallest y).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Cell, SemanticObject, WorldError, WorldMap};
use crate::geometry::Point;

pub const WORLD_FORMAT: &str = "dynav-world/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldFile {
    pub format: String,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default = "zero_origin")]
    pub origin: [f64; 2],
    pub grid: Vec<String>,
    pub objects: Vec<ObjectFile>,
}

fn zero_origin() -> [f64; 2] {
    [0.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectFile {
    pub name: String,
    pub category: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

fn encode_row(row: &[Cell]) -> String {
    let mut out = String::new();
    let mut iter = row.iter().peekable();
    while let Some(&c) = iter.next() {
        let mut n = 1;
        while iter.peek() == Some(&&c) {
            iter.next();
            n += 1;
        }
        out.push_str(&n.to_string());
        out.push(if c == Cell::Free { '.' } else { '#' });
    }
    out
}

fn decode_row(s: &str, width: usize, row: usize) -> Result<Vec<Cell>, WorldError> {
    let mut out = Vec::with_capacity(width);
    let mut count = String::new();
    for ch in s.chars() {
        match ch {
            '0'..='9' => count.push(ch),
            '.' | '#' => {
                let n: usize = count
                    .parse()
                    .map_err(|_| WorldError::Invalid(format!("row {row}: run without count")))?;
                count.clear();
                let cell = if ch == '.' { Cell::Free } else { Cell::Obstacle };
                out.extend(std::iter::repeat_n(cell, n));
            }
            other => {
                return Err(WorldError::Invalid(format!(
                    "row {row}: unexpected symbol `{other}`"
                )))
            }
        }
    }
    if !count.is_empty() || out.len() != width {
        return Err(WorldError::Invalid(format!(
            "row {row} decodes to {} cells, expected {width}",
            out.len()
        )));
    }
    Ok(out)
}

impl From<WorldMap> for WorldFile {
    fn from(w: WorldMap) -> Self {
        WorldFile {
            format: WORLD_FORMAT.to_string(),
            resolution: w.resolution,
            width: w.width,
            height: w.height,
            origin: [w.origin.x, w.origin.y],
            grid: w.cells.chunks(w.width).map(encode_row).collect(),
            objects: w
                .objects
                .into_iter()
                .map(|o| ObjectFile {
                    name: o.name,
                    category: o.category,
                    attributes: o.attributes,
                    center: [o.center.x, o.center.y],
                    radius: o.radius,
                    tags: o.tags,
                })
                .collect(),
        }
    }
}

impl TryFrom<WorldFile> for WorldMap {
    type Error = WorldError;

    fn try_from(f: WorldFile) -> Result<Self, Self::Error> {
        if f.format != WORLD_FORMAT {
            return Err(WorldError::Invalid(format!(
                "unsupported format `{}`",
                f.format
            )));
        }
        if f.grid.len() != f.height {
            return Err(WorldError::Invalid(format!(
                "{} grid rows, expected {}",
                f.grid.len(),
                f.height
            )));
        }
        let mut cells = Vec::with_capacity(f.width * f.height);
        for (j, row) in f.grid.iter().enumerate() {
            cells.extend(decode_row(row, f.width, j)?);
        }
        let objects = f
            .objects
            .into_iter()
            .map(|o| SemanticObject {
                name: o.name,
                category: o.category,
                attributes: o.attributes,
                center: Point::new(o.center[0], o.center[1]),
                radius: o.radius,
                tags: o.tags,
            })
            .collect();
        WorldMap::new(
            f.resolution,
            f.width,
            f.height,
            Point::new(f.origin[0], f.origin[1]),
            cells,
            objects,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rle_rows() {
        let row = [Cell::Obstacle, Cell::Free, Cell::Free, Cell::Obstacle];
        assert_eq!(encode_row(&row), "1#2.1#");
        assert_eq!(decode_row("1#2.1#", 4, 0).unwrap(), row);
        assert!(decode_row("3.", 4, 0).is_err());
        assert!(decode_row("2x2.", 4, 0).is_err());
        assert!(decode_row(".", 1, 0).is_err());
    }

    #[test]
    fn rejects_bad_header() {
        let w = WorldMap::open(2.0, 2.0, 0.5, Point::new(0.0, 0.0));
        let mut f = WorldFile::from(w);
        f.format = "other".into();
        assert!(WorldMap::try_from(f).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(bits in proptest::collection::vec(any::<bool>(), 1..120), w in 1usize..12, r in 0.3f64..0.9) {
            let width = w;
            let height = bits.len().div_ceil(width);
            let mut cells: Vec<Cell> = (0..width * height)
                .map(|k| if bits.get(k).copied().unwrap_or(false) { Cell::Obstacle } else { Cell::Free })
                .collect();
            cells[0] = Cell::Free;
            let obj = SemanticObject::new("o", "thing", Point::new(r, r), r / 3.0)
                .with_attributes(&["red"])
                .with_tag("hazard");
            let map = WorldMap::new(1.0 / 3.0 + r, width, height, Point::new(-1.25, 0.1), cells, vec![])
                .unwrap();
            let mut map = map;
            let (x0, y0, x1, y1) = map.bounds();
            if x1 - x0 > 2.0 * r && y1 - y0 > 2.0 * r {
                map.objects.push(SemanticObject { center: Point::new(x0 + r, y0 + r), ..obj });
            }
            let json = map.to_json();
            let back: WorldMap = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &map);
            prop_assert_eq!(back.to_json(), json);
        }
    }
}
