use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Observations, PointLabel, SceneGroundTruth, SceneSpec};
use crate::backbone::Correspondence;
use crate::error::{Error, Result};
use crate::geom::{CameraPose, Intrinsics, MirrorPlane};
use crate::io::{self, pgm, PlyTable, PlyType};

pub const SCENE_FILES: [&str; 3] = ["scene.json", "cloud.ply", "mask.pgm"];
pub const CORRS_FILE: &str = "corrs.csv";

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    spec: SceneSpec,
    intrinsics: Intrinsics,
    plane: MirrorPlane,
    real_pose: CameraPose,
    virtual_pose: CameraPose,
}

/// Writes `scene.json`, `cloud.ply` (x y z label) and `mask.pgm`.
pub fn export(gt: &SceneGroundTruth, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let doc = SceneDoc {
        spec: gt.spec.clone(),
        intrinsics: gt.intrinsics,
        plane: gt.plane,
        real_pose: gt.real,
        virtual_pose: gt.virtual_pose,
    };
    io::write_json(&doc, &dir.join("scene.json"))?;
    let mut table = PlyTable::new(&[
        ("x", PlyType::Double),
        ("y", PlyType::Double),
        ("z", PlyType::Double),
        ("label", PlyType::UChar),
    ]);
    table.rows = gt
        .points
        .iter()
        .zip(&gt.labels)
        .map(|(p, l)| vec![p.x, p.y, p.z, l.0 as f64])
        .collect();
    table.write(&dir.join("cloud.ply"))?;
    pgm::write(&gt.mask, &dir.join("mask.pgm"))
}

/// Writes `corrs.csv` with header `ua,va,ub,vb,weight`.
pub fn export_observations(obs: &Observations, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(CORRS_FILE);
    if obs.correspondences.is_empty() {
        // csv writes no header for zero rows
        return std::fs::write(&path, "ua,va,ub,vb,weight\n").map_err(|e| Error::io(&path, e));
    }
    io::write_csv(&obs.correspondences, &path)
}

pub fn import(dir: &Path) -> Result<SceneGroundTruth> {
    let doc: SceneDoc = io::read_json(&dir.join("scene.json"))?;
    let ply_path = dir.join("cloud.ply");
    let table = PlyTable::read(&ply_path)?;
    let cols: Vec<usize> = ["x", "y", "z", "label"]
        .iter()
        .map(|c| {
            table
                .column(c)
                .ok_or_else(|| Error::parse(&ply_path, 0, format!("missing property {c}")))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        points.push(Vector3::new(row[cols[0]], row[cols[1]], row[cols[2]]));
        labels.push(PointLabel(row[cols[3]] as u8));
    }
    let mask_path = dir.join("mask.pgm");
    let mask = pgm::read(&mask_path)?;
    let k = doc.intrinsics;
    if mask.width != k.width as usize || mask.height != k.height as usize {
        return Err(Error::parse(
            &mask_path,
            1,
            format!("mask is {}x{}, camera is {}x{}", mask.width, mask.height, k.width, k.height),
        ));
    }
    Ok(SceneGroundTruth {
        spec: doc.spec,
        intrinsics: k,
        plane: doc.plane,
        real: doc.real_pose,
        virtual_pose: doc.virtual_pose,
        points,
        labels,
        mask,
    })
}

pub fn import_correspondences(dir: &Path) -> Result<Vec<Correspondence>> {
    io::read_csv(&dir.join(CORRS_FILE))
}
