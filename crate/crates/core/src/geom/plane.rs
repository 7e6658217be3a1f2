use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::CameraPose;

/// Coordinate frame that a plane, transform or point set is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameTag {
    World,
    /// Camera frame of a view; id 0 is the real view, `j >= 1` the j-th
    /// virtual view.
    Camera(u32),
}

impl fmt::Display for FrameTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameTag::World => write!(f, "world"),
            FrameTag::Camera(id) => write!(f, "camera:{id}"),
        }
    }
}

impl FromStr for FrameTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "world" {
            return Ok(FrameTag::World);
        }
        s.strip_prefix("camera:")
            .and_then(|id| id.parse().ok())
            .map(FrameTag::Camera)
            .ok_or_else(|| Error::ConfigError(format!("unknown frame tag {s:?}")))
    }
}

impl Serialize for FrameTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FrameTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A planar mirror `{x : n·(x − p) = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorPlane {
    pub normal: Vector3<f64>,
    pub point: Vector3<f64>,
    pub frame: FrameTag,
}

impl MirrorPlane {
    /// Rejects normals that are not unit length within 1e-12.
    pub fn new(normal: Vector3<f64>, point: Vector3<f64>, frame: FrameTag) -> Result<Self> {
        let plane = MirrorPlane { normal, point, frame };
        plane.validate()?;
        Ok(plane)
    }

    /// Normalizes `normal` first.
    pub fn from_unnormalized(normal: Vector3<f64>, point: Vector3<f64>, frame: FrameTag) -> Result<Self> {
        let n = normal.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::InvalidPlane(format!("normal {normal:?} has no direction")));
        }
        Self::new(normal / n, point, frame)
    }

    pub fn validate(&self) -> Result<()> {
        if self.normal.iter().chain(self.point.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlane("non-finite entries".into()));
        }
        let n = self.normal.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPlane(format!("normal has norm {n}, expected 1")));
        }
        Ok(())
    }

    pub fn signed_distance(&self, x: &Vector3<f64>) -> f64 {
        self.normal.dot(&(x - self.point))
    }

    /// Mirror image of `x` across the plane.
    pub fn reflect_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        x - 2.0 * self.signed_distance(x) * self.normal
    }

    /// Flips the normal if needed so that it points towards `viewpoint`.
    pub fn facing(mut self, viewpoint: &Vector3<f64>) -> Self {
        if self.signed_distance(viewpoint) < 0.0 {
            self.normal = -self.normal;
        }
        self
    }

    /// Expresses the plane in another frame, given the rigid map `t` from the
    /// current frame to the new one.
    pub fn transformed(&self, t: &CameraPose, frame: FrameTag) -> Self {
        MirrorPlane {
            normal: t.rotation * self.normal,
            point: t.transform(&self.point),
            frame,
        }
    }

    /// Intersection of the ray `origin + s·dir` with the plane, if `s > 0`.
    pub fn intersect_ray(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-15 {
            return None;
        }
        let s = self.normal.dot(&(self.point - origin)) / denom;
        (s > 0.0).then(|| (s, origin + s * dir))
    }
}
