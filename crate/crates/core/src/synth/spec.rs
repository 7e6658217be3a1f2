use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CameraPose, Intrinsics};

/// Scene surfaces. Boxes are axis-aligned; walls are rectangles spanned by
/// two orthonormal in-plane axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Box {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
    },
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Wall(Rect),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Vector3<f64>,
    pub u_axis: Vector3<f64>,
    pub v_axis: Vector3<f64>,
    pub half_extents: [f64; 2],
}

impl Rect {
    pub fn normal(&self) -> Vector3<f64> {
        self.u_axis.cross(&self.v_axis)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extents[0] * self.half_extents[1]
    }

    pub fn corners(&self) -> [Vector3<f64>; 4] {
        let [a, b] = self.half_extents;
        let (u, v) = (self.u_axis * a, self.v_axis * b);
        [
            self.center - u - v,
            self.center + u - v,
            self.center + u + v,
            self.center - u + v,
        ]
    }

    /// Whether a point on the rectangle's plane lies inside its extents.
    pub fn contains_in_plane(&self, x: &Vector3<f64>) -> bool {
        let d = x - self.center;
        d.dot(&self.u_axis).abs() <= self.half_extents[0] && d.dot(&self.v_axis).abs() <= self.half_extents[1]
    }

    fn validate(&self, what: &str) -> Result<()> {
        let unit = |v: &Vector3<f64>| (v.norm() - 1.0).abs() < 1e-9;
        if !unit(&self.u_axis) || !unit(&self.v_axis) || self.u_axis.dot(&self.v_axis).abs() > 1e-9 {
            return Err(Error::ConfigError(format!("{what}: axes must be orthonormal")));
        }
        if !(self.half_extents[0] > 0.0 && self.half_extents[1] > 0.0) {
            return Err(Error::ConfigError(format!("{what}: extents must be positive")));
        }
        Ok(())
    }
}

/// Random camera placement: center uniform in a box, looking at the mirror
/// center jittered by up to `target_jitter` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub center_min: Vector3<f64>,
    pub center_max: Vector3<f64>,
    pub target_jitter: f64,
    pub up: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub intrinsics: Intrinsics,
    /// Fixed world-to-camera pose; when absent the camera is auto-placed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<CameraPose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    /// Surface samples per unit area.
    pub density: f64,
    pub primitives: Vec<Primitive>,
    pub mirror: Rect,
    pub camera: CameraSpec,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(Error::ConfigError(format!("density must be positive, got {}", self.density)));
        }
        self.mirror.validate("mirror")?;
        for (i, p) in self.primitives.iter().enumerate() {
            match p {
                Primitive::Box { half_extents, .. } if half_extents.iter().any(|h| !(*h > 0.0)) => {
                    return Err(Error::ConfigError(format!("primitive {i}: box extents must be positive")));
                }
                Primitive::Sphere { radius, .. } if !(*radius > 0.0) => {
                    return Err(Error::ConfigError(format!("primitive {i}: sphere radius must be positive")));
                }
                Primitive::Wall(r) => r.validate(&format!("primitive {i}"))?,
                _ => {}
            }
        }
        let k = &self.camera.intrinsics;
        k.validate()?;
        if !k.is_centered() {
            return Err(Error::ConfigError(format!(
                "scene cameras need a centered principal point (cx = {}, W/2 = {})",
                k.cx,
                k.width as f64 / 2.0
            )));
        }
        if self.camera.pose.is_none() && self.camera.placement.is_none() {
            return Err(Error::ConfigError("camera needs a pose or a placement".into()));
        }
        Ok(())
    }
}
