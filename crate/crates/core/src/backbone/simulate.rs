use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use super::{view_frame, PairPrediction, PointMap, CONFIDENCE_RHO};
use crate::error::{Error, Result};
use crate::geom::CameraPose;
use crate::graph::{Edge, ViewId, ViewKind};
use crate::synth::{SceneGroundTruth, ViewSample};

/// Noise injected into simulated predictions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BackboneNoise {
    /// Per-coordinate Gaussian point noise (units).
    pub point: f64,
    /// Rotation magnitude of the view-B pose error (degrees).
    pub pose_deg: f64,
    /// Translation magnitude of the view-B pose error (units).
    pub pose_trans: f64,
    /// Standard deviation of the log scale.
    pub scale: f64,
}

impl BackboneNoise {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("point", self.point),
            ("pose_deg", self.pose_deg),
            ("pose_trans", self.pose_trans),
            ("scale", self.scale),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::ConfigError(format!("noise {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn view_pose(gt: &SceneGroundTruth, v: ViewId) -> Result<(CameraPose, Vec<ViewSample>)> {
    match (v.kind, v.frame_time) {
        (ViewKind::Real, 0) => Ok((gt.real, gt.real_view())),
        (ViewKind::Virtual(1), 0) => Ok((gt.virtual_pose, gt.virtual_view())),
        _ => Err(Error::UnknownView(v.to_string())),
    }
}

/// Stable 64-bit key of an edge, used as the random stream id.
fn edge_stream(edge: &Edge) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf29ce484222325;
    for b in format!("{}|{}", edge.a, edge.b).bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Ground-truth pointmaps of `edge` in view A's frame, corrupted by point
/// noise, a rigid error on view B's pose and a global scale. View B's points
/// move with its pose error, so each map stays internally consistent with
/// the reported `pose_b`.
pub fn simulate_backbone(gt: &SceneGroundTruth, edge: &Edge, noise: &BackboneNoise, seed: u64) -> Result<PairPrediction> {
    noise.validate()?;
    let (pose_a, samples_a) = view_pose(gt, edge.a)?;
    let (pose_b_world, samples_b) = view_pose(gt, edge.b)?;
    if edge.a == edge.b {
        return Err(Error::UnknownView(format!("self edge {}", edge.a)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(edge_stream(edge));

    let pose_b = pose_b_world.compose(&pose_a.inverse());
    let perturb = if noise.pose_deg > 0.0 || noise.pose_trans > 0.0 {
        let axis: [f64; 3] = UnitSphere.sample(&mut rng);
        let dir: [f64; 3] = UnitSphere.sample(&mut rng);
        let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), noise.pose_deg.to_radians());
        Some(CameraPose {
            rotation: rot,
            translation: Vector3::from(dir) * noise.pose_trans,
        })
    } else {
        None
    };
    let scale = if noise.scale > 0.0 {
        (Normal::new(0.0, noise.scale).expect("finite").sample(&mut rng) as f64).exp()
    } else {
        1.0
    };
    let point_noise = (noise.point > 0.0).then(|| Normal::new(0.0, noise.point).expect("finite"));

    let k = &gt.intrinsics;
    let frame = view_frame(edge.a);
    let mut build = |samples: &[ViewSample], moved: Option<(&CameraPose, &CameraPose)>| {
        let mut map = PointMap::for_intrinsics(k, frame);
        for s in samples {
            let clean = pose_a.transform(&gt.points[s.index]);
            let mut x = clean;
            if let Some(n) = &point_noise {
                x += Vector3::from_fn(|_, _| rng.sample(n));
            }
            if let Some((true_b, noisy_b)) = moved {
                x = noisy_b.inverse_transform(&true_b.transform(&x));
            }
            if scale != 1.0 {
                x *= scale;
            }
            let conf = 1.0 / (1.0 + (x - clean).norm() / CONFIDENCE_RHO);
            map.set(s.cell, [s.projection.u, s.projection.v], x, conf);
        }
        map
    };
    let pointmap_a = build(&samples_a, None);
    let noisy_b = perturb.map(|p| p.compose(&pose_b));
    let pointmap_b = build(&samples_b, noisy_b.as_ref().map(|n| (&pose_b, n)));

    let mut reported = noisy_b.unwrap_or(pose_b);
    reported.translation *= scale;
    Ok(PairPrediction {
        edge: *edge,
        pointmap_a,
        pointmap_b,
        pose_b: reported,
    })
}
