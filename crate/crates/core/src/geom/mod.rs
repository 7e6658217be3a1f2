//! Camera, plane and reflection geometry.
//!
//! Poses are world-to-camera (`x_cam = R x + t`). Camera axes: x right,
//! y down, z forward. A mirror plane used to build a virtual camera must be
//! expressed in the real camera's frame; [`change_frame`] converts
//! world-frame reflections.

mod camera;
mod image;
mod plane;
mod reflection;

pub use camera::{project, project_camera, CameraPose, Intrinsics, Projection, MIN_DEPTH};
pub use image::{flip_view, flip_view_checked, ImageGrid};
pub use plane::{FrameTag, MirrorPlane};
pub use reflection::{
    change_frame, flip_equivalence_residual, make_reflection, reflected_pose, virtual_camera, x_flip,
    ReflectionTransform,
};

/// Geodesic angle between two rotations, in radians.
pub fn rotation_angle(a: &nalgebra::UnitQuaternion<f64>, b: &nalgebra::UnitQuaternion<f64>) -> f64 {
    let rel = a.inverse() * b;
    let q = rel.quaternion();
    2.0 * q.imag().norm().atan2(q.w.abs())
}
