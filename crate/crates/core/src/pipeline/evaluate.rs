use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::reconstruct::{ReconPoses, CLOUD_FILE, POSES_FILE};
use super::require;
use crate::error::{Error, Result};
use crate::io::{self, PlyTable};
use crate::metrics::{evaluate, markdown_table, registered_pose_errors, MetricsReport, PoseErrors};
use crate::synth::{self, PointLabel};

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_MD: &str = "metrics.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricsReport,
    /// Virtual-camera error relative to the real camera, when the
    /// reconstruction carries poses.
    pub pose: Option<PoseErrors>,
}

/// Points and labels of a PLY with `x y z label` properties.
pub fn read_labeled_cloud(path: &Path) -> Result<Vec<(Vector3<f64>, PointLabel)>> {
    let table = PlyTable::read(path)?;
    let cols: Vec<usize> = ["x", "y", "z", "label"]
        .iter()
        .map(|c| table.column(c).ok_or_else(|| Error::parse(path, 0, format!("missing property {c}"))))
        .collect::<Result<_>>()?;
    Ok(table
        .rows
        .iter()
        .map(|r| (Vector3::new(r[cols[0]], r[cols[1]], r[cols[2]]), PointLabel(r[cols[3]] as u8)))
        .collect())
}

/// Points that count for the metrics: seen directly or through the mirror,
/// and not on the mirror itself.
pub fn scoring_cloud(cloud: &[(Vector3<f64>, PointLabel)]) -> Vec<Vector3<f64>> {
    cloud
        .iter()
        .filter(|(_, l)| l.is_visible() && !l.is_mirror_surface())
        .map(|(p, _)| *p)
        .collect()
}

/// Scores `recon/cloud.ply` against the scene's ground truth and writes
/// `metrics.json` and `metrics.md` into `recon`.
pub fn evaluate_dirs(recon: &Path, scene: &Path, tau: f64) -> Result<Evaluation> {
    let pred_path = recon.join(CLOUD_FILE);
    require(&pred_path)?;
    for f in synth::SCENE_FILES {
        require(&scene.join(f))?;
    }
    let gt = synth::import(scene)?;
    let pred = scoring_cloud(&read_labeled_cloud(&pred_path)?);
    let truth: Vec<Vector3<f64>> = gt
        .points
        .iter()
        .zip(&gt.labels)
        .filter(|(_, l)| l.is_visible() && !l.is_mirror_surface())
        .map(|(p, _)| *p)
        .collect();
    let metrics = evaluate(&pred, &truth, tau)?;
    let poses_path = recon.join(POSES_FILE);
    let pose = if poses_path.exists() {
        let poses: ReconPoses = io::read_json(&poses_path)?;
        poses
            .virtual_views
            .values()
            .next()
            .map(|vir| registered_pose_errors(&poses.real, vir, &gt.real, &gt.virtual_pose))
    } else {
        None
    };
    let eval = Evaluation { metrics, pose };
    io::write_json(&eval, &recon.join(METRICS_JSON))?;
    let name = recon.file_name().map_or("reconstruction".into(), |n| n.to_string_lossy().into_owned());
    let mut md = markdown_table(&[(name, metrics)]);
    if let Some(p) = pose {
        let unit = if p.absolute { "units" } else { "%" };
        md.push_str(&format!("\nT_err: {:.4} {unit}, R_err: {:.4} deg\n", p.t_err, p.r_err));
    }
    let md_path = recon.join(METRICS_MD);
    std::fs::write(&md_path, md).map_err(|e| Error::io(&md_path, e))?;
    Ok(eval)
}
