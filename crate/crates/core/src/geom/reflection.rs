use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geom::camera::{check_rigid, project_camera, CameraPose, Intrinsics};
use crate::geom::plane::{FrameTag, MirrorPlane};

/// Planar reflection in homogeneous form.
///
/// `householder` is `[[I − 2nnᵀ, 2(nᵀp)n], [0ᵀ, 1]]`, an involution whose
/// linear part has determinant −1. `full` prepends the x-axis flip
/// `diag(−1, 1, 1, 1)`, which turns the mirrored camera back into a proper
/// rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionTransform {
    pub householder: Matrix4<f64>,
    pub full: Matrix4<f64>,
    pub frame: FrameTag,
    pub plane: MirrorPlane,
}

pub fn x_flip() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

fn householder_matrix(plane: &MirrorPlane) -> Matrix4<f64> {
    let n = plane.normal;
    let lin = Matrix3::identity() - 2.0 * n * n.transpose();
    let t = 2.0 * n.dot(&plane.point) * n;
    let mut h = Matrix4::identity();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&lin);
    h.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    h
}

pub fn make_reflection(plane: &MirrorPlane) -> Result<ReflectionTransform> {
    plane.validate()?;
    let householder = householder_matrix(plane);
    Ok(ReflectionTransform {
        householder,
        full: x_flip() * householder,
        frame: plane.frame,
        plane: *plane,
    })
}

impl ReflectionTransform {
    pub fn linear(&self) -> Matrix3<f64> {
        self.householder.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.householder.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn full_linear(&self) -> Matrix3<f64> {
        self.full.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn full_translation(&self) -> Vector3<f64> {
        self.full.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Householder image of a point expressed in this transform's frame.
    pub fn reflect_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.linear() * x + self.translation()
    }
}

/// Quaternion of the 180° rotation about the x axis; `diag(−1,1,1) = −R_x(π)`.
fn flip_quaternion() -> Quaternion<f64> {
    Quaternion::new(0.0, 1.0, 0.0, 0.0)
}

/// Quaternion of the 180° rotation about `n`; `I − 2nnᵀ = −R_n(π)`.
fn half_turn(n: &Vector3<f64>) -> Quaternion<f64> {
    Quaternion::new(0.0, n.x, n.y, n.z)
}

fn flip_x(v: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.x, v.y, v.z)
}

/// Virtual camera `C_vir = T_reflect · C_real` for a reflection expressed in
/// the real camera frame.
pub fn virtual_camera(real: &CameraPose, reflect: &ReflectionTransform) -> Result<CameraPose> {
    if reflect.frame == FrameTag::World {
        return Err(Error::FrameError {
            expected: "camera frame of the real view".into(),
            got: reflect.frame.to_string(),
        });
    }
    let n = reflect.plane.normal;
    // The two determinant −1 factors cancel: F·H = R_x(π)·R_n(π).
    let q = flip_quaternion() * half_turn(&n) * real.rotation.into_inner();
    let t = flip_x(reflect.linear() * real.translation + reflect.translation());
    Ok(CameraPose {
        rotation: UnitQuaternion::from_quaternion(q),
        translation: t,
    })
}

/// Reflected pose `C' = T_reflect · C_real` for a plane in either the world
/// frame or the real camera frame.
pub fn reflected_pose(real: &CameraPose, plane: &MirrorPlane) -> Result<CameraPose> {
    plane.validate()?;
    match plane.frame {
        FrameTag::Camera(_) => virtual_camera(real, &make_reflection(plane)?),
        FrameTag::World => {
            // F · C_real · H_world
            let n = plane.normal;
            let h = 2.0 * n.dot(&plane.point) * n;
            let q = flip_quaternion() * real.rotation.into_inner() * half_turn(&n);
            Ok(CameraPose {
                rotation: UnitQuaternion::from_quaternion(q),
                translation: flip_x(real.rotation * h + real.translation),
            })
        }
    }
}

/// Conjugates the reflection by a rigid map `t` (old frame → new frame):
/// `H' = T·H·T⁻¹`.
pub fn change_frame(reflect: &ReflectionTransform, t: &Matrix4<f64>, frame: FrameTag) -> Result<ReflectionTransform> {
    check_rigid(t)?;
    let pose = CameraPose::from_matrix(t)?;
    let mut t_inv = Matrix4::identity();
    let r = t.fixed_view::<3, 3>(0, 0).transpose();
    let tr: Vector3<f64> = t.fixed_view::<3, 1>(0, 3).into_owned();
    t_inv.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    t_inv.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-(r * tr)));
    let householder = t * reflect.householder * t_inv;
    Ok(ReflectionTransform {
        householder,
        full: x_flip() * householder,
        frame,
        plane: reflect.plane.transformed(&pose, frame),
    })
}

/// `(u_real(X') + u_vir(X) − W, v_real(X') − v_vir(X))` for a world point `X`
/// and its mirror image `X'`. Vanishes when the principal point is centered.
pub fn flip_equivalence_residual(
    k: &Intrinsics,
    real: &CameraPose,
    reflect: &ReflectionTransform,
    x: &Vector3<f64>,
) -> Result<(f64, f64)> {
    let in_real = real.transform(x);
    let mirrored = reflect.reflect_point(&in_real);
    let pr = project_camera(k, &mirrored)?;
    let vir = virtual_camera(real, reflect)?;
    let pv = project_camera(k, &vir.transform(x))?;
    Ok((pr.u + pv.u - k.width as f64, pr.v - pv.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plane(n: [f64; 3], p: [f64; 3], frame: FrameTag) -> MirrorPlane {
        MirrorPlane::new(Vector3::from(n), Vector3::from(p), frame).unwrap()
    }

    #[test]
    fn axis_plane_through_origin() {
        let r = make_reflection(&plane([0.0, 0.0, 1.0], [0.0; 3], FrameTag::World)).unwrap();
        assert_eq!(r.linear(), Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)));
        assert_eq!(r.translation(), Vector3::zeros());
        assert_eq!(r.full_linear(), Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0)));
    }

    #[test]
    fn offset_plane_by_hand() {
        let r = make_reflection(&plane([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], FrameTag::World)).unwrap();
        assert_eq!(r.linear(), Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0)));
        assert_eq!(r.translation(), Vector3::new(2.0, 0.0, 0.0));
        assert_eq!(r.full_linear(), Matrix3::identity());
        assert_eq!(r.full_translation(), Vector3::new(-2.0, 0.0, 0.0));
    }

    #[test]
    fn non_unit_normal_is_invalid() {
        let p = MirrorPlane {
            normal: Vector3::new(0.0, 0.0, 1.1),
            point: Vector3::zeros(),
            frame: FrameTag::World,
        };
        assert!(matches!(make_reflection(&p), Err(Error::InvalidPlane(_))));
    }

    #[test]
    fn virtual_camera_of_identity_across_z5() {
        let r = make_reflection(&plane([0.0, 0.0, 1.0], [0.0, 0.0, 5.0], FrameTag::Camera(0))).unwrap();
        let v = virtual_camera(&CameraPose::identity(), &r).unwrap();
        assert_relative_eq!(v.center(), Vector3::new(0.0, 0.0, 10.0), epsilon = 1e-12);
        // optical axis (camera z) points back along world −z, camera x along world −x
        let rt = v.rotation_matrix().transpose();
        assert_relative_eq!(rt.column(2).into_owned(), -Vector3::z(), epsilon = 1e-12);
        assert_relative_eq!(rt.column(0).into_owned(), -Vector3::x(), epsilon = 1e-12);
        assert_relative_eq!(v.to_matrix(), r.full, epsilon = 1e-12);
    }

    #[test]
    fn world_frame_reflection_needs_conversion() {
        let r = make_reflection(&plane([0.0, 0.0, 1.0], [0.0; 3], FrameTag::World)).unwrap();
        assert!(matches!(virtual_camera(&CameraPose::identity(), &r), Err(Error::FrameError { .. })));
    }

    #[test]
    fn world_plane_to_camera_frame() {
        // camera centered at (0, 0, −5): world→camera translation is +5 z
        let world = make_reflection(&plane([0.0, 0.0, 1.0], [0.0; 3], FrameTag::World)).unwrap();
        let cam = CameraPose::new(Quaternion::identity(), Vector3::new(0.0, 0.0, 5.0));
        let moved = change_frame(&world, &cam.to_matrix(), FrameTag::Camera(0)).unwrap();
        let expected = make_reflection(&plane([0.0, 0.0, 1.0], [0.0, 0.0, 5.0], FrameTag::Camera(0))).unwrap();
        assert_relative_eq!(moved.householder, expected.householder, epsilon = 1e-12);
        assert_relative_eq!(moved.plane.signed_distance(&Vector3::new(0.0, 0.0, 5.0)), 0.0);
        let unchanged = change_frame(&world, &Matrix4::identity(), FrameTag::World).unwrap();
        assert_eq!(unchanged.householder, world.householder);
    }

    #[test]
    fn change_frame_rejects_scaling() {
        let world = make_reflection(&plane([0.0, 0.0, 1.0], [0.0; 3], FrameTag::World)).unwrap();
        let s = Matrix4::identity() * 2.0;
        assert!(matches!(change_frame(&world, &s, FrameTag::World), Err(Error::InvalidTransform(_))));
    }

    #[test]
    fn world_and_camera_routes_agree() {
        let real = CameraPose::new(Quaternion::new(0.8, 0.2, -0.3, 0.1), Vector3::new(0.4, -0.2, 3.0));
        let world = plane([0.3, 0.4, (1.0f64 - 0.25).sqrt()], [0.5, 1.0, -2.0], FrameTag::World);
        let a = reflected_pose(&real, &world).unwrap();
        let cam = world.transformed(&real, FrameTag::Camera(0));
        let b = reflected_pose(&real, &cam).unwrap();
        assert_relative_eq!(a.to_matrix(), b.to_matrix(), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_configuration_has_zero_flip_residual() {
        let k = Intrinsics::centered(200.0, 200.0, 400, 300).unwrap();
        let r = make_reflection(&plane([0.0, 0.0, -1.0], [0.0, 0.0, 4.0], FrameTag::Camera(0))).unwrap();
        let (du, dv) = flip_equivalence_residual(&k, &CameraPose::identity(), &r, &Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((du, dv), (0.0, 0.0));
    }

    #[test]
    fn off_center_principal_point_offsets_by_twice_the_shift() {
        let k = Intrinsics::new(200.0, 200.0, 203.0, 150.0, 400, 300).unwrap();
        let r = make_reflection(&plane([0.0, 0.0, -1.0], [0.0, 0.0, 4.0], FrameTag::Camera(0))).unwrap();
        let (du, _) = flip_equivalence_residual(&k, &CameraPose::identity(), &r, &Vector3::new(0.3, 0.1, 2.0)).unwrap();
        assert_relative_eq!(du, 6.0, epsilon = 1e-9);
    }
}
