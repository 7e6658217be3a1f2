//! Pairwise pointmap producers standing in for a learned two-view network.
//!
//! Two sources are provided: midpoint triangulation of pixel correspondences
//! between the real view and the flipped virtual view, and a simulator that
//! perturbs ground-truth pointmaps with point, pose and scale noise. Both
//! return a [`PairPrediction`] whose pointmaps live in the first view's
//! camera frame.

mod export;
mod simulate;
mod triangulate;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{CameraPose, FrameTag, Intrinsics};
use crate::graph::Edge;

pub use export::{read_prediction, write_prediction};
pub use simulate::{simulate_backbone, BackboneNoise};
pub use triangulate::{add_mirror_surface, triangulate, triangulate_pair, Triangulation};

/// Scale of residuals mapped to confidence.
pub const CONFIDENCE_RHO: f64 = 0.01;

/// A pixel match between view A and view B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "CorrRow", into = "CorrRow")]
pub struct Correspondence {
    pub pixel_a: [f64; 2],
    pub pixel_b: [f64; 2],
    pub weight: f64,
}

#[derive(Serialize, Deserialize)]
struct CorrRow {
    ua: f64,
    va: f64,
    ub: f64,
    vb: f64,
    weight: f64,
}

impl From<CorrRow> for Correspondence {
    fn from(r: CorrRow) -> Self {
        Correspondence {
            pixel_a: [r.ua, r.va],
            pixel_b: [r.ub, r.vb],
            weight: r.weight,
        }
    }
}

impl From<Correspondence> for CorrRow {
    fn from(c: Correspondence) -> Self {
        CorrRow {
            ua: c.pixel_a[0],
            va: c.pixel_a[1],
            ub: c.pixel_b[0],
            vb: c.pixel_b[1],
            weight: c.weight,
        }
    }
}

/// Per-pixel 3D points with confidence. Each valid cell also records the
/// continuous pixel coordinate its point was observed at, which may differ
/// from the cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub width: usize,
    pub height: usize,
    pub frame: FrameTag,
    pub points: Vec<Vector3<f64>>,
    pub pixels: Vec<[f64; 2]>,
    pub confidence: Vec<f64>,
    pub valid: Vec<bool>,
}

impl PointMap {
    pub fn new(width: usize, height: usize, frame: FrameTag) -> Self {
        let n = width * height;
        PointMap {
            width,
            height,
            frame,
            points: vec![Vector3::zeros(); n],
            pixels: vec![[0.0; 2]; n],
            confidence: vec![0.0; n],
            valid: vec![false; n],
        }
    }

    pub fn for_intrinsics(k: &Intrinsics, frame: FrameTag) -> Self {
        Self::new(k.width as usize, k.height as usize, frame)
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn set(&mut self, cell: (usize, usize), pixel: [f64; 2], point: Vector3<f64>, confidence: f64) {
        let i = self.index(cell.0, cell.1);
        self.points[i] = point;
        self.pixels[i] = pixel;
        self.confidence[i] = confidence;
        self.valid[i] = true;
    }

    pub fn clear(&mut self, i: usize) {
        self.points[i] = Vector3::zeros();
        self.pixels[i] = [0.0; 2];
        self.confidence[i] = 0.0;
        self.valid[i] = false;
    }

    /// Indices of valid cells in row-major order.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn valid_points(&self) -> Vec<Vector3<f64>> {
        self.valid_indices().map(|i| self.points[i]).collect()
    }

    pub fn same_shape(&self, other: &PointMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Two pointmaps for an edge, both in view A's camera frame, plus the
/// predicted pose of camera B relative to camera A (`x_B = pose_b · x_A`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairPrediction {
    pub edge: Edge,
    pub pointmap_a: PointMap,
    pub pointmap_b: PointMap,
    pub pose_b: CameraPose,
}

fn view_frame(view: crate::graph::ViewId) -> FrameTag {
    match view.kind {
        crate::graph::ViewKind::Real => FrameTag::Camera(0),
        crate::graph::ViewKind::Virtual(i) => FrameTag::Camera(i),
    }
}
