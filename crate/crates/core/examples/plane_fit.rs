//! Fitting the mirror plane to the masked points of a noisy cloud.

use mirror_stereo::geom::FrameTag;
use mirror_stereo::plane::{estimate_plane, MaskedCloud};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> mirror_stereo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let normal = Vector3::new(0.1, -0.3, -1.0).normalize();
    let center = Vector3::new(0.0, 0.2, 2.5);
    let u = normal.cross(&Vector3::x()).normalize();
    let v = normal.cross(&u);
    let mut points = Vec::new();
    let mut mask = Vec::new();
    for _ in 0..400 {
        let p = center + u * rng.random_range(-0.5..0.5) + v * rng.random_range(-0.5..0.5);
        points.push(p + Vector3::from_fn(|_, _| noise.sample(&mut rng)));
        mask.push(true);
    }
    // unmasked clutter is ignored
    for _ in 0..100 {
        points.push(Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0)));
        mask.push(false);
    }
    let fit = estimate_plane(&MaskedCloud::new(points, mask, FrameTag::Camera(0))?)?;
    let err = fit.plane.normal.cross(&normal).norm().atan2(fit.plane.normal.dot(&normal).abs());
    println!("normal {:?}", fit.plane.normal.as_slice());
    println!("point  {:?}", fit.plane.point.as_slice());
    println!("rms {:.4}, normal error {:.3} deg", fit.rms, err.to_degrees());
    Ok(())
}
