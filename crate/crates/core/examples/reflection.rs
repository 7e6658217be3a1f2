//! Reflection across a mirror plane and the resulting virtual camera.

use mirror_stereo::geom::{make_reflection, reflected_pose, CameraPose, FrameTag, MirrorPlane};
use nalgebra::Vector3;

fn main() -> mirror_stereo::Result<()> {
    // mirror 3 units in front of a camera at the world origin, tilted a little
    let plane = MirrorPlane::from_unnormalized(
        Vector3::new(0.2, 0.0, -1.0),
        Vector3::new(0.0, 0.0, 3.0),
        FrameTag::World,
    )?;
    let r = make_reflection(&plane)?;
    println!("householder:{}", r.householder);
    println!("det of the linear part: {:.3}", r.linear().determinant());
    println!("det after the x flip:   {:.3}", r.full_linear().determinant());

    let x = Vector3::new(0.5, -0.2, 1.0);
    println!("point {:?} reflects to {:?}", x.as_slice(), r.reflect_point(&x).as_slice());

    let real = CameraPose::identity();
    let vir = reflected_pose(&real, &plane)?;
    println!("virtual camera center: {:?}", vir.center().as_slice());
    println!("virtual camera rotation: {}", vir.rotation_matrix());
    Ok(())
}
