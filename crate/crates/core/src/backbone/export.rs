use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{PairPrediction, PointMap};
use crate::error::{Error, Result};
use crate::geom::{CameraPose, FrameTag, ImageGrid};
use crate::graph::Edge;
use crate::io::{self, pgm, PlyTable, PlyType};

const COLUMNS: [(&str, PlyType); 8] = [
    ("col", PlyType::Int),
    ("row", PlyType::Int),
    ("u", PlyType::Double),
    ("v", PlyType::Double),
    ("x", PlyType::Double),
    ("y", PlyType::Double),
    ("z", PlyType::Double),
    ("confidence", PlyType::Double),
];

#[derive(Serialize, Deserialize)]
struct EdgeMeta {
    edge: Edge,
    width: usize,
    height: usize,
    frame: FrameTag,
    pose_b: CameraPose,
}

/// Writes `edge.json`, `pointmap_{a,b}.ply` and 8-bit `confidence_{a,b}.pgm`
/// previews. The PLY files carry the exact values.
pub fn write_prediction(pred: &PairPrediction, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = EdgeMeta {
        edge: pred.edge,
        width: pred.pointmap_a.width,
        height: pred.pointmap_a.height,
        frame: pred.pointmap_a.frame,
        pose_b: pred.pose_b,
    };
    io::write_json(&meta, &dir.join("edge.json"))?;
    for (name, map) in [("a", &pred.pointmap_a), ("b", &pred.pointmap_b)] {
        let mut table = PlyTable::new(&COLUMNS);
        for i in map.valid_indices() {
            let (p, px) = (map.points[i], map.pixels[i]);
            table.rows.push(vec![
                (i % map.width) as f64,
                (i / map.width) as f64,
                px[0],
                px[1],
                p.x,
                p.y,
                p.z,
                map.confidence[i],
            ]);
        }
        table.write(&dir.join(format!("pointmap_{name}.ply")))?;
        let mut img = ImageGrid::new(map.width, map.height, 1);
        for i in map.valid_indices() {
            img.set(i % map.width, i / map.width, 0, (map.confidence[i].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
        pgm::write(&img, &dir.join(format!("confidence_{name}.pgm")))?;
    }
    Ok(())
}

pub fn read_prediction(dir: &Path) -> Result<PairPrediction> {
    let meta: EdgeMeta = io::read_json(&dir.join("edge.json"))?;
    let read_map = |name: &str| -> Result<PointMap> {
        let path = dir.join(format!("pointmap_{name}.ply"));
        let table = PlyTable::read(&path)?;
        let cols: Vec<usize> = COLUMNS
            .iter()
            .map(|(c, _)| table.column(c).ok_or_else(|| Error::parse(&path, 0, format!("missing property {c}"))))
            .collect::<Result<_>>()?;
        let mut map = PointMap::new(meta.width, meta.height, meta.frame);
        for (r, row) in table.rows.iter().enumerate() {
            let get = |j: usize| row[cols[j]];
            let (col, rw) = (get(0), get(1));
            if !(col >= 0.0 && rw >= 0.0 && (col as usize) < meta.width && (rw as usize) < meta.height) {
                // header lines precede the rows
                let line = table.properties.len() + 5 + r;
                return Err(Error::parse(&path, line, format!("cell ({col}, {rw}) outside the grid")));
            }
            map.set(
                (col as usize, rw as usize),
                [get(2), get(3)],
                Vector3::new(get(4), get(5), get(6)),
                get(7),
            );
        }
        Ok(map)
    };
    Ok(PairPrediction {
        edge: meta.edge,
        pointmap_a: read_map("a")?,
        pointmap_b: read_map("b")?,
        pose_b: meta.pose_b,
    })
}
