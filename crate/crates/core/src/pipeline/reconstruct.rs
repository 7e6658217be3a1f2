use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{create_dir, require, BackboneMode, PipelineConfig};
use crate::align::{optimize_traced, write_trace, GlobalState, TraceRow};
use crate::backbone::{add_mirror_surface, simulate_backbone, triangulate_pair, Correspondence, PairPrediction};
use crate::error::{Error, Result};
use crate::geom::{CameraPose, MirrorPlane};
use crate::graph::build_static;
use crate::io::{self, PlyTable, PlyType};
use crate::synth::{self, PointLabel, SceneGroundTruth, CORRS_FILE};

pub const CLOUD_FILE: &str = "cloud.ply";
pub const POSES_FILE: &str = "poses.json";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: GlobalState,
    pub trace: Vec<TraceRow>,
}

/// Estimated cameras and mirror planes, keyed by view name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconPoses {
    pub real: CameraPose,
    pub virtual_views: BTreeMap<String, CameraPose>,
    pub planes: BTreeMap<String, MirrorPlane>,
}

impl ReconPoses {
    pub fn from_state(state: &GlobalState) -> Result<Self> {
        let real = state
            .views
            .iter()
            .find(|v| v.view.is_real())
            .ok_or_else(|| Error::UnknownView("no real view".into()))?
            .pose;
        Ok(ReconPoses {
            real,
            virtual_views: state
                .views
                .iter()
                .filter(|v| !v.view.is_real())
                .map(|v| (v.view.to_string(), v.pose))
                .collect(),
            planes: state.planes.iter().map(|(v, p)| (v.to_string(), *p)).collect(),
        })
    }
}

/// Pair prediction for the scene's single real/virtual edge.
///
/// `Triangulate` needs `corrs` and adds the mirror surface under the mask
/// using the scene's plane; `Simulate` draws noise from `seed`.
pub fn predict(gt: &SceneGroundTruth, corrs: Option<&[Correspondence]>, cfg: &PipelineConfig, seed: u64) -> Result<PairPrediction> {
    let edge = build_static(1)?.edges[0];
    match cfg.backbone {
        BackboneMode::Simulate => simulate_backbone(gt, &edge, &cfg.noise.backbone(), seed),
        BackboneMode::Triangulate => {
            let corrs = corrs.ok_or_else(|| Error::EmptyInput("triangulation needs correspondences".into()))?;
            let mut pred = triangulate_pair(&gt.intrinsics, &gt.real, &gt.reflection(), corrs)?;
            add_mirror_surface(&mut pred.pointmap_a, &gt.intrinsics, &gt.camera_plane(), &gt.mask)?;
            Ok(pred)
        }
    }
}

/// Runs backbone and optimizer on one scene. The trace is kept in `trace`
/// when the optimizer fails.
pub fn reconstruct(
    gt: &SceneGroundTruth,
    corrs: Option<&[Correspondence]>,
    cfg: &PipelineConfig,
    seed: u64,
    trace: &mut Vec<TraceRow>,
) -> Result<GlobalState> {
    cfg.validate()?;
    let pred = predict(gt, corrs, cfg, seed)?;
    let preds = [pred];
    let initial = GlobalState::from_predictions(&gt.intrinsics, &preds, &gt.real, Some(&gt.mask))?;
    let opt = crate::align::AlignConfig {
        seed,
        ..cfg.optimizer
    };
    optimize_traced(&initial, &preds, &opt, trace)
}

/// Optimized points of every view. Real-view pixels on the mirror are
/// replaced by their ray's intersection with the estimated plane and
/// labelled as mirror surface; the other real-view points are labelled
/// direct and virtual-view points via-mirror.
pub fn fused_cloud(state: &GlobalState) -> Vec<(Vector3<f64>, PointLabel)> {
    let k = &state.intrinsics;
    let mut out = Vec::new();
    for v in &state.views {
        if !v.view.is_real() {
            out.extend(v.points(k).into_iter().map(|p| (p, PointLabel(PointLabel::VIA_MIRROR))));
            continue;
        }
        let mirror: &[usize] = state.mirror_slots.get(&v.view).map_or(&[], |s| s.as_slice());
        let plane = state
            .symmetric_pairs()
            .into_iter()
            .find(|(r, _)| state.views[*r].view == v.view)
            .and_then(|(_, j)| state.planes.get(&state.views[j].view));
        let center = v.pose.center();
        for i in 0..v.cells.len() {
            let p = v.point(k, i);
            if mirror.binary_search(&i).is_err() {
                out.push((p, PointLabel(PointLabel::DIRECT)));
            } else if let Some((s, x)) = plane.and_then(|pl| pl.intersect_ray(&center, &(p - center))) {
                if s > 0.0 {
                    out.push((x, PointLabel(PointLabel::MIRROR_SURFACE)));
                }
            }
        }
    }
    out
}

/// Writes `cloud.ply` (x y z, label, gray/blue/black colors by label),
/// `poses.json` and `trace.csv`.
pub fn write_reconstruction(rec: &Reconstruction, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut table = PlyTable::new(&[
        ("x", PlyType::Double),
        ("y", PlyType::Double),
        ("z", PlyType::Double),
        ("label", PlyType::UChar),
        ("red", PlyType::UChar),
        ("green", PlyType::UChar),
        ("blue", PlyType::UChar),
    ]);
    table.rows = fused_cloud(&rec.state)
        .into_iter()
        .map(|(p, l)| {
            let [r, g, b] = if l.is_mirror_surface() {
                [0.0, 0.0, 0.0]
            } else if l.via_mirror() {
                [90.0, 140.0, 220.0]
            } else {
                [180.0, 180.0, 180.0]
            };
            vec![p.x, p.y, p.z, l.0 as f64, r, g, b]
        })
        .collect();
    table.write(&dir.join(CLOUD_FILE))?;
    io::write_json(&ReconPoses::from_state(&rec.state)?, &dir.join(POSES_FILE))?;
    write_trace(&rec.trace, &dir.join(TRACE_FILE))
}

/// `reconstruct` on a scene directory. The mask is required; triangulation
/// also needs the correspondence file. On optimizer failure the trace is
/// still written to `out`.
pub fn reconstruct_dir(scene: &Path, out: &Path, cfg: &PipelineConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    for f in synth::SCENE_FILES {
        require(&scene.join(f))?;
    }
    let gt = synth::import(scene)?;
    let corrs = match cfg.backbone {
        BackboneMode::Triangulate => {
            require(&scene.join(CORRS_FILE))?;
            Some(synth::import_correspondences(scene)?)
        }
        BackboneMode::Simulate => None,
    };
    let mut trace = Vec::new();
    let seed = super::mix_seed(gt.spec.seed, cfg.seed);
    match reconstruct(&gt, corrs.as_deref(), cfg, seed, &mut trace) {
        Ok(state) => {
            let rec = Reconstruction { state, trace };
            write_reconstruction(&rec, out)?;
            Ok(rec)
        }
        Err(e) => {
            if !trace.is_empty() {
                create_dir(out)?;
                write_trace(&trace, &out.join(TRACE_FILE))?;
            }
            Err(e)
        }
    }
}
