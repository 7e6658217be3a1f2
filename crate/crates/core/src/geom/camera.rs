use nalgebra::{Matrix3, Matrix4, Point3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera-frame depths at or below this are treated as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

/// Pinhole intrinsics shared by the real camera and every virtual camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Intrinsics with the principal point at the image center.
    pub fn centered(fx: f64, fy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(fx, fy, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::ConfigError(format!("invalid focal lengths in {self:?}")));
        }
        let (w, h) = (self.width as f64, self.height as f64);
        if !(self.cx > 0.0 && self.cx < w && self.cy > 0.0 && self.cy < h) {
            return Err(Error::ConfigError(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Whether the horizontal flip maps this camera's image onto the
    /// virtual camera's image exactly (cx = W/2).
    pub fn is_centered(&self) -> bool {
        (self.cx - self.width as f64 / 2.0).abs() < 1e-9
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Ray direction with unit z through continuous pixel coordinate (u, v).
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    /// Grid cell holding a continuous pixel coordinate, if inside the image.
    pub fn cell(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if self.contains(u, v) {
            Some((u.floor() as usize, v.floor() as usize))
        } else {
            None
        }
    }
}

/// Rigid world-to-camera transform `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl CameraPose {
    pub fn identity() -> Self {
        CameraPose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from a possibly unnormalized quaternion.
    pub fn new(rotation: Quaternion<f64>, translation: Vector3<f64>) -> Self {
        CameraPose {
            rotation: UnitQuaternion::from_quaternion(rotation),
            translation,
        }
    }

    pub fn from_rotation(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_matrix_unchecked(*rotation);
        CameraPose {
            rotation: UnitQuaternion::from_rotation_matrix(&rot),
            translation,
        }
    }

    /// Pose of a camera at `center` looking at `target`, with image y pointing
    /// away from `up`.
    pub fn look_at(center: &Vector3<f64>, target: &Vector3<f64>, up: &Vector3<f64>) -> Result<Self> {
        let z = target - center;
        if z.norm() < 1e-12 {
            return Err(Error::ConfigError("look_at target equals center".into()));
        }
        let z = z.normalize();
        let x = z.cross(up);
        if x.norm() < 1e-9 {
            return Err(Error::ConfigError("look_at direction parallel to up".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Ok(Self::from_rotation(&r, -(r * center)))
    }

    /// Checks that the linear part of `m` is a proper rotation and the last
    /// row is (0, 0, 0, 1).
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        check_rigid(m)?;
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into_owned();
        Ok(Self::from_rotation(&r, t))
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation.to_rotation_matrix().into_inner());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Maps a world point into this camera's frame.
    pub fn transform(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    /// Maps a camera-frame point back to the world frame.
    pub fn inverse_transform(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (x - self.translation)
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        CameraPose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    /// `self · other`: applies `other` first.
    pub fn compose(&self, other: &CameraPose) -> Self {
        let q = self.rotation.into_inner() * other.rotation.into_inner();
        CameraPose::new(q, self.rotation * other.translation + self.translation)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.inverse() * self.translation)
    }

    pub fn point(&self, x: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.transform(&x.coords))
    }
}

pub(crate) fn check_rigid(m: &Matrix4<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTransform("non-finite entries".into()));
    }
    let last = m.row(3);
    if (last[0].abs() + last[1].abs() + last[2].abs() + (last[3] - 1.0).abs()) > 1e-12 {
        return Err(Error::InvalidTransform("last row is not (0, 0, 0, 1)".into()));
    }
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    if ortho > 1e-9 {
        return Err(Error::InvalidTransform(format!("linear part not orthogonal (dev {ortho:e})")));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidTransform(format!("determinant {det} != +1")));
    }
    Ok(())
}

/// Pixel coordinates and camera-frame depth of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Pinhole projection of a world point.
pub fn project(k: &Intrinsics, pose: &CameraPose, x: &Vector3<f64>) -> Result<Projection> {
    project_camera(k, &pose.transform(x))
}

/// Pinhole projection of a point already in the camera frame.
pub fn project_camera(k: &Intrinsics, xc: &Vector3<f64>) -> Result<Projection> {
    if !(xc.z > MIN_DEPTH) {
        return Err(Error::BehindCamera { depth: xc.z });
    }
    Ok(Projection {
        u: k.fx * xc.x / xc.z + k.cx,
        v: k.fy * xc.y / xc.z + k.cy,
        depth: xc.z,
    })
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    quaternion: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for CameraPose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let q = self.rotation.quaternion();
        PoseRepr {
            quaternion: [q.w, q.i, q.j, q.k],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CameraPose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PoseRepr::deserialize(d)?;
        let [w, x, y, z] = r.quaternion;
        let q = Quaternion::new(w, x, y, z);
        if !(q.norm() > 0.0) || !q.norm().is_finite() {
            return Err(serde::de::Error::custom("quaternion must be non-zero and finite"));
        }
        // Stored quaternions are unit already; keep them bit-exact.
        let unit = if (q.norm() - 1.0).abs() < 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::from_quaternion(q)
        };
        Ok(CameraPose {
            rotation: unit,
            translation: Vector3::from(r.translation),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k100() -> Intrinsics {
        Intrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap()
    }

    #[test]
    fn principal_ray_hits_principal_point() {
        let p = project(&k100(), &CameraPose::identity(), &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((p.u, p.v, p.depth), (50.0, 50.0, 1.0));
    }

    #[test]
    fn off_axis_projection() {
        let p = project(&k100(), &CameraPose::identity(), &Vector3::new(0.5, 0.0, 1.0)).unwrap();
        assert_eq!((p.u, p.v, p.depth), (100.0, 50.0, 1.0));
    }

    #[test]
    fn behind_camera_is_rejected() {
        let err = project(&k100(), &CameraPose::identity(), &Vector3::new(0.0, 0.0, -1.0));
        assert!(matches!(err, Err(Error::BehindCamera { .. })));
    }

    #[test]
    fn intrinsics_validation() {
        assert!(Intrinsics::new(0.0, 1.0, 5.0, 5.0, 10, 10).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 10.0, 5.0, 10, 10).is_err());
        assert!(Intrinsics::centered(1.0, 1.0, 10, 10).unwrap().is_centered());
        assert!(!Intrinsics::new(1.0, 1.0, 8.0, 5.0, 10, 10).unwrap().is_centered());
    }

    #[test]
    fn look_at_points_the_optical_axis() {
        let c = Vector3::new(1.0, -2.0, 0.5);
        let target = Vector3::new(0.0, 3.0, 1.0);
        let pose = CameraPose::look_at(&c, &target, &Vector3::z()).unwrap();
        assert_relative_eq!(pose.center(), c, epsilon = 1e-12);
        let t = pose.transform(&target);
        assert_relative_eq!(t.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t.y, 0.0, epsilon = 1e-12);
        assert!(t.z > 0.0);
    }

    #[test]
    fn compose_and_inverse() {
        let a = CameraPose::new(Quaternion::new(0.9, 0.1, -0.3, 0.2), Vector3::new(1.0, 2.0, 3.0));
        let b = CameraPose::new(Quaternion::new(0.2, 0.7, 0.1, -0.4), Vector3::new(-1.0, 0.5, 0.0));
        let x = Vector3::new(0.3, -0.7, 2.0);
        assert_relative_eq!(a.compose(&b).transform(&x), a.transform(&b.transform(&x)), epsilon = 1e-12);
        assert_relative_eq!(a.compose(&a.inverse()).translation, Vector3::zeros(), epsilon = 1e-12);
        assert_relative_eq!(a.to_matrix() * b.to_matrix(), a.compose(&b).to_matrix(), epsilon = 1e-12);
    }

    #[test]
    fn pose_json_shape() {
        let pose = CameraPose::identity();
        let s = serde_json::to_string(&pose).unwrap();
        assert_eq!(s, r#"{"quaternion":[1.0,0.0,0.0,0.0],"translation":[0.0,0.0,0.0]}"#);
        let back: CameraPose = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pose);
    }

    #[test]
    fn non_rigid_matrix_rejected() {
        let mut m = Matrix4::identity();
        m[(0, 0)] = 2.0;
        assert!(matches!(CameraPose::from_matrix(&m), Err(Error::InvalidTransform(_))));
        let mut m = Matrix4::identity();
        m[(0, 0)] = -1.0;
        assert!(CameraPose::from_matrix(&m).is_err());
    }
}
