use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CameraSpec, Placement, Primitive, Rect, SceneSpec};
use crate::geom::Intrinsics;

pub const BENCH_SCENES: u64 = 16;

/// A room-corner tabletop: floor at z = 0, a 1.2 × 1.0 mirror standing on
/// the plane y = 0, two to four boxes or spheres on the floor in front of
/// it, and an auto-placed camera looking at the mirror.
pub fn bench_scene(seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let floor = Rect {
        center: Vector3::new(0.0, 1.5, 0.0),
        u_axis: Vector3::x(),
        v_axis: Vector3::y(),
        half_extents: [2.0, 1.5],
    };
    let mut primitives = vec![Primitive::Wall(floor)];
    let count = rng.random_range(2..=4);
    for _ in 0..count {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(0.5..2.0);
        if rng.random_bool(0.5) {
            let h = Vector3::new(
                rng.random_range(0.1..0.25),
                rng.random_range(0.1..0.25),
                rng.random_range(0.1..0.25),
            );
            primitives.push(Primitive::Box {
                center: Vector3::new(x, y, h.z),
                half_extents: h,
            });
        } else {
            let r = rng.random_range(0.15..0.3);
            primitives.push(Primitive::Sphere {
                center: Vector3::new(x, y, r),
                radius: r,
            });
        }
    }
    SceneSpec {
        seed,
        density: 300.0,
        primitives,
        mirror: Rect {
            center: Vector3::new(0.0, 0.0, 1.0),
            u_axis: Vector3::x(),
            v_axis: -Vector3::z(),
            half_extents: [0.6, 0.5],
        },
        camera: CameraSpec {
            intrinsics: Intrinsics::centered(260.0, 260.0, 320, 240).expect("valid preset intrinsics"),
            pose: None,
            placement: Some(Placement {
                center_min: Vector3::new(-1.2, 2.4, 1.0),
                center_max: Vector3::new(1.2, 3.6, 1.6),
                target_jitter: 0.1,
                up: Vector3::z(),
            }),
        },
    }
}

/// The 16-scene benchmark, seeds 0–15.
pub fn bench_specs() -> Vec<SceneSpec> {
    (0..BENCH_SCENES).map(bench_scene).collect()
}
