//! The flipped mirror region as the virtual camera's image: projecting a
//! point with the virtual camera equals projecting its mirror image with the
//! real camera and flipping `u`.

use mirror_stereo::geom::{flip_equivalence_residual, flip_view, make_reflection, CameraPose, FrameTag, ImageGrid, Intrinsics, MirrorPlane};
use nalgebra::Vector3;

fn main() -> mirror_stereo::Result<()> {
    let plane = MirrorPlane::new(Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.0, 0.0, 4.0), FrameTag::Camera(0))?;
    let reflect = make_reflection(&plane)?;
    let real = CameraPose::identity();
    let x = Vector3::new(0.3, 0.1, 1.5);
    for (name, k) in [
        ("centered", Intrinsics::centered(400.0, 400.0, 640, 480)?),
        ("cx + 3 px", Intrinsics::new(400.0, 400.0, 323.0, 240.0, 640, 480)?),
    ] {
        let (du, dv) = flip_equivalence_residual(&k, &real, &reflect, &x)?;
        println!("{name:>10}: u_real + u_vir - W = {du:+.3e}, v_real - v_vir = {dv:+.3e}");
    }

    let mut img = ImageGrid::new(4, 2, 1);
    let mut mask = ImageGrid::new(4, 2, 1);
    img.set(0, 0, 0, 200);
    mask.set(0, 0, 0, 255);
    let (vimg, vmask) = flip_view(&img, &mask)?;
    println!("pixel (0, 0) lands at (3, 0): {} / mask {}", vimg.get(3, 0, 0), vmask.get(3, 0, 0));
    Ok(())
}
