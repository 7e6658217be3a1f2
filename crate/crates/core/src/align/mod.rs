//! Global alignment of pairwise pointmaps with a mirror-symmetry prior.
//!
//! Each view keeps a global pointmap parameterized by one depth per observed
//! pixel along that pixel's ray, so a view's points move with its pose. Each
//! edge carries a rigid transform and a log scale mapping its pair-frame
//! predictions into the world. The objective is
//!
//! ```text
//! Σ_e Σ_{v∈e} Σ_j O_vj ‖U_vj − σ_e P_e S_vj‖
//!   + λ_rot   Σ_j (1 − |q'_real · q_vir_j|)
//!   + λ_trans Σ_j ‖t'_real − t_vir_j‖²
//! ```
//!
//! where `(q', t')` is the real pose reflected across the mirror plane of
//! virtual view `j` (world frame), re-estimated from the real view's mirror
//! pixels during optimization.

mod loss;
mod optimize;
mod quat;

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::backbone::PairPrediction;
use crate::error::{Error, Result};
use crate::geom::{reflected_pose, rotation_angle, CameraPose, FrameTag, ImageGrid, Intrinsics, MirrorPlane};
use crate::graph::{Edge, ViewId};
use crate::plane::{estimate_plane_facing, MaskedCloud};

pub use loss::{pairwise_loss, rot_loss, total_loss, total_loss_with_gradient, trans_loss};
pub use optimize::{optimize, optimize_traced, write_trace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub pose: CameraPose,
    pub log_scale: f64,
}

impl EdgeParams {
    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }
}

/// Observed pixels of one view and their depths along the pixel rays.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    pub view: ViewId,
    pub pose: CameraPose,
    /// Row-major cell indices, ascending.
    pub cells: Vec<usize>,
    pub pixels: Vec<[f64; 2]>,
    pub depths: Vec<f64>,
}

impl ViewState {
    /// Global pointmap `U = C⁻¹ (d · K⁻¹ [u, v, 1])`.
    pub fn points(&self, k: &Intrinsics) -> Vec<Vector3<f64>> {
        (0..self.cells.len()).map(|i| self.point(k, i)).collect()
    }

    pub fn point(&self, k: &Intrinsics, i: usize) -> Vector3<f64> {
        let [u, v] = self.pixels[i];
        self.pose.inverse_transform(&(k.ray(u, v) * self.depths[i]))
    }

    pub fn slot(&self, cell: usize) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    pub intrinsics: Intrinsics,
    /// Views in id order; index 0 is the first real view.
    pub views: Vec<ViewState>,
    pub edges: BTreeMap<Edge, EdgeParams>,
    /// World-frame mirror plane per virtual view.
    pub planes: BTreeMap<ViewId, MirrorPlane>,
    /// Slots of each real view that lie on the mirror.
    pub mirror_slots: BTreeMap<ViewId, Vec<usize>>,
}

impl GlobalState {
    /// Builds the starting state from predictions: `anchor` fixes the first
    /// real view, other poses are chained through each edge's `pose_b`,
    /// edge transforms start at `C_A⁻¹` with unit scale and depths are the
    /// projections of the mapped predictions onto the pixel rays. Mirror
    /// planes are fitted to the real view's points under `mask`.
    pub fn from_predictions(
        k: &Intrinsics,
        preds: &[PairPrediction],
        anchor: &CameraPose,
        mask: Option<&ImageGrid>,
    ) -> Result<Self> {
        if preds.is_empty() {
            return Err(Error::EmptyInput("no pair predictions".into()));
        }
        let mut poses: BTreeMap<ViewId, CameraPose> = BTreeMap::new();
        let first_real = preds
            .iter()
            .flat_map(|p| [p.edge.a, p.edge.b])
            .filter(|v| v.is_real())
            .min()
            .ok_or_else(|| Error::ConfigError("graph has no real view".into()))?;
        poses.insert(first_real, *anchor);
        loop {
            let mut changed = false;
            for p in preds {
                match (poses.get(&p.edge.a).copied(), poses.get(&p.edge.b).copied()) {
                    (Some(a), None) => {
                        poses.insert(p.edge.b, p.pose_b.compose(&a));
                        changed = true;
                    }
                    (None, Some(b)) => {
                        poses.insert(p.edge.a, p.pose_b.inverse().compose(&b));
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        for p in preds {
            for v in [p.edge.a, p.edge.b] {
                if !poses.contains_key(&v) {
                    return Err(Error::ConfigError(format!("view {v} is not connected to {first_real}")));
                }
            }
        }

        let mut views = Vec::new();
        for (&view, &pose) in &poses {
            let mut cells: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
            for p in preds {
                for (v, map) in [(p.edge.a, &p.pointmap_a), (p.edge.b, &p.pointmap_b)] {
                    if v != view {
                        continue;
                    }
                    if map.width != k.width as usize || map.height != k.height as usize {
                        return Err(Error::ShapeError(format!(
                            "pointmap of {v} is {}x{}, camera is {}x{}",
                            map.width, map.height, k.width, k.height
                        )));
                    }
                    for i in map.valid_indices() {
                        cells.entry(i).or_insert(map.pixels[i]);
                    }
                }
            }
            let n = cells.len();
            views.push(ViewState {
                view,
                pose,
                cells: cells.keys().copied().collect(),
                pixels: cells.values().copied().collect(),
                depths: vec![1.0; n],
            });
        }

        let edges = preds
            .iter()
            .map(|p| {
                let a = poses[&p.edge.a];
                (
                    p.edge,
                    EdgeParams {
                        pose: a.inverse(),
                        log_scale: 0.0,
                    },
                )
            })
            .collect();

        let mut mirror_slots = BTreeMap::new();
        if let Some(mask) = mask {
            if mask.width != k.width as usize || mask.height != k.height as usize {
                return Err(Error::ShapeError("mask does not match the camera".into()));
            }
            for v in views.iter().filter(|v| v.view.is_real()) {
                let slots: Vec<usize> = v
                    .cells
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| mask.data[**c * mask.channels] != 0)
                    .map(|(i, _)| i)
                    .collect();
                mirror_slots.insert(v.view, slots);
            }
        }

        let mut state = GlobalState {
            intrinsics: *k,
            views,
            edges,
            planes: BTreeMap::new(),
            mirror_slots,
        };
        let problem = loss::Problem::new(&state, preds)?;
        let mut x = state.params();
        problem.refit_depths(&mut x);
        state.set_params(&x);
        state.planes = state.estimate_planes();
        Ok(state)
    }

    pub fn view_index(&self, view: ViewId) -> Option<usize> {
        self.views.iter().position(|v| v.view == view)
    }

    pub fn view(&self, view: ViewId) -> Option<&ViewState> {
        self.views.iter().find(|v| v.view == view)
    }

    pub fn pose(&self, view: ViewId) -> Option<CameraPose> {
        self.view(view).map(|v| v.pose)
    }

    /// Real/virtual pairs constrained by the symmetry terms.
    pub fn symmetric_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (j, v) in self.views.iter().enumerate() {
            if v.view.is_real() {
                continue;
            }
            if let Some(r) = self.view_index(ViewId::real(v.view.frame_time)) {
                out.push((r, j));
            }
        }
        out
    }

    /// Fits a plane per virtual view to its real view's mirror points.
    /// Views whose mirror points are missing or degenerate get no plane.
    pub fn estimate_planes(&self) -> BTreeMap<ViewId, MirrorPlane> {
        let k = &self.intrinsics;
        let mut planes = BTreeMap::new();
        for (r, j) in self.symmetric_pairs() {
            let real = &self.views[r];
            let Some(slots) = self.mirror_slots.get(&real.view) else {
                continue;
            };
            let pts: Vec<Vector3<f64>> = slots.iter().map(|&i| real.point(k, i)).collect();
            let cloud = MaskedCloud::all(pts, FrameTag::World);
            if let Ok(fit) = estimate_plane_facing(&cloud, &real.pose.center()) {
                planes.insert(self.views[j].view, fit.plane);
            }
        }
        planes
    }

    /// Flat parameter vector: per view `[q, t]`, per edge `[q, t, log σ]`,
    /// then all depths view by view.
    pub fn params(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.param_len());
        for v in &self.views {
            push_pose(&mut x, &v.pose);
        }
        for e in self.edges.values() {
            push_pose(&mut x, &e.pose);
            x.push(e.log_scale);
        }
        for v in &self.views {
            x.extend_from_slice(&v.depths);
        }
        x
    }

    pub fn param_len(&self) -> usize {
        7 * self.views.len() + 8 * self.edges.len() + self.views.iter().map(|v| v.depths.len()).sum::<usize>()
    }

    /// Inverse of [`params`](Self::params); quaternions are normalized.
    pub fn set_params(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.param_len(), "parameter vector length");
        let mut o = 0;
        for v in &mut self.views {
            v.pose = read_pose(&x[o..o + 7]);
            o += 7;
        }
        for e in self.edges.values_mut() {
            e.pose = read_pose(&x[o..o + 7]);
            e.log_scale = x[o + 7];
            o += 8;
        }
        for v in &mut self.views {
            let n = v.depths.len();
            v.depths.copy_from_slice(&x[o..o + n]);
            o += n;
        }
    }
}

fn push_pose(x: &mut Vec<f64>, p: &CameraPose) {
    let q = p.rotation.quaternion();
    x.extend_from_slice(&[q.w, q.i, q.j, q.k]);
    x.extend_from_slice(p.translation.as_slice());
}

fn read_pose(x: &[f64]) -> CameraPose {
    CameraPose::new(
        nalgebra::Quaternion::new(x[0], x[1], x[2], x[3]),
        Vector3::new(x[4], x[5], x[6]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub pair: f64,
    pub rot: f64,
    pub trans: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pair: 1.0,
            rot: 1.0,
            trans: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("pair", self.pair), ("rot", self.rot), ("trans", self.trans)] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::ConfigError(format!("weight {name} must be >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Unweighted loss terms and the weighted total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pairwise: f64,
    pub rot: f64,
    pub trans: f64,
    pub total: f64,
    /// Pairwise term of each edge, in edge order.
    pub per_edge: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    pub max_iters: usize,
    pub lr: f64,
    pub tol: f64,
    pub lambda_pair: f64,
    pub lambda_rot: f64,
    pub lambda_trans: f64,
    pub use_sym: bool,
    /// Iterations between plane re-fits; 0 keeps the initial planes.
    pub plane_refresh_every: usize,
    /// Hold the real cameras fixed, which pins the world frame.
    pub fix_real: bool,
    /// Smoothing length of the pairwise norm during optimization (units).
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            max_iters: 300,
            lr: 1.0,
            tol: 1e-8,
            lambda_pair: 1.0,
            lambda_rot: 1e6,
            lambda_trans: 1e4,
            use_sym: true,
            plane_refresh_every: 10,
            fix_real: true,
            smoothing: 1e-4,
            seed: 0,
        }
    }
}

impl AlignConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            pair: self.lambda_pair,
            rot: if self.use_sym { self.lambda_rot } else { 0.0 },
            trans: if self.use_sym { self.lambda_trans } else { 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::ConfigError("max_iters must be >= 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::ConfigError(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return Err(Error::ConfigError(format!("smoothing must be >= 0, got {}", self.smoothing)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::ConfigError(format!("tol must be >= 0, got {}", self.tol)));
        }
        LossWeights {
            pair: self.lambda_pair,
            rot: self.lambda_rot,
            trans: self.lambda_trans,
        }
        .validate()
    }
}

/// Rotation angle (degrees) and translation distance between the real pose
/// reflected across `plane` and the virtual pose.
pub fn symmetry_residual(real: &CameraPose, vir: &CameraPose, plane: &MirrorPlane) -> Result<(f64, f64)> {
    let expected = reflected_pose(real, plane)?;
    Ok((
        rotation_angle(&expected.rotation, &vir.rotation).to_degrees(),
        (expected.translation - vir.translation).norm(),
    ))
}

#[cfg(test)]
mod tests;
