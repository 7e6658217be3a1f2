//! Procedural mirror scenes with exact ground truth.
//!
//! A scene is a sampled point cloud (boxes, spheres, walls and the mirror
//! rectangle itself), a real camera and the virtual camera obtained by
//! reflecting it across the mirror. Each sample is labeled with how the real
//! camera sees it: directly, through the mirror, both or not at all. Each
//! image cell of either view holds at most one sample (the nearest), so the
//! labels double as exact per-view pointmaps.
//!
//! There is no occlusion reasoning beyond that pixel ownership, and samples
//! behind the mirror plane are never visible.

mod export;
mod observe;
mod preset;
mod spec;

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{
    make_reflection, project, virtual_camera, CameraPose, FrameTag, ImageGrid, Intrinsics, MirrorPlane, Projection,
    ReflectionTransform,
};

pub use export::{export, export_observations, import, import_correspondences, CORRS_FILE, SCENE_FILES};
pub use observe::{render_observations, Observations};
pub use preset::{bench_scene, bench_specs, BENCH_SCENES};
pub use spec::{CameraSpec, Placement, Primitive, Rect, SceneSpec};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Visibility bits of a sample, plus a flag for mirror-surface samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PointLabel(pub u8);

impl PointLabel {
    pub const DIRECT: u8 = 1;
    pub const VIA_MIRROR: u8 = 2;
    pub const MIRROR_SURFACE: u8 = 4;

    pub fn direct(self) -> bool {
        self.0 & Self::DIRECT != 0
    }

    pub fn via_mirror(self) -> bool {
        self.0 & Self::VIA_MIRROR != 0
    }

    pub fn both(self) -> bool {
        self.direct() && self.via_mirror()
    }

    pub fn is_mirror_surface(self) -> bool {
        self.0 & Self::MIRROR_SURFACE != 0
    }

    pub fn is_visible(self) -> bool {
        self.direct() || self.via_mirror()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGroundTruth {
    pub spec: SceneSpec,
    pub intrinsics: Intrinsics,
    /// Mirror plane in the world frame, normal facing the real camera.
    pub plane: MirrorPlane,
    pub real: CameraPose,
    pub virtual_pose: CameraPose,
    pub points: Vec<Vector3<f64>>,
    pub labels: Vec<PointLabel>,
    /// Real-view cells owned by mirror-surface samples (0 / 255).
    pub mask: ImageGrid,
}

/// One sample as seen in one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSample {
    pub index: usize,
    pub projection: Projection,
    pub cell: (usize, usize),
}

impl SceneGroundTruth {
    pub fn camera_plane(&self) -> MirrorPlane {
        self.plane.transformed(&self.real, FrameTag::Camera(0))
    }

    pub fn reflection(&self) -> ReflectionTransform {
        make_reflection(&self.camera_plane()).expect("ground-truth plane is valid")
    }

    /// Samples owning a cell of the real view, in index order.
    pub fn real_view(&self) -> Vec<ViewSample> {
        self.view_samples(&self.real, PointLabel::direct)
    }

    /// Samples owning a cell of the virtual (flipped) view, in index order.
    pub fn virtual_view(&self) -> Vec<ViewSample> {
        self.view_samples(&self.virtual_pose, PointLabel::via_mirror)
    }

    fn view_samples(&self, pose: &CameraPose, pick: fn(PointLabel) -> bool) -> Vec<ViewSample> {
        let k = &self.intrinsics;
        self.points
            .iter()
            .zip(&self.labels)
            .enumerate()
            .filter(|(_, (_, l))| pick(**l))
            .filter_map(|(index, (p, _))| {
                let projection = project(k, pose, p).ok()?;
                let cell = k.cell(projection.u, projection.v)?;
                Some(ViewSample { index, projection, cell })
            })
            .collect()
    }

    /// Every sample seen directly or through the mirror.
    pub fn visible_cloud(&self) -> Vec<Vector3<f64>> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.is_visible())
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn mirror_rect(&self) -> &Rect {
        &self.spec.mirror
    }
}

/// Builds the scene described by `spec`, deterministically per seed.
pub fn generate(spec: &SceneSpec) -> Result<SceneGroundTruth> {
    spec.validate()?;
    let k = spec.camera.intrinsics;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut points = Vec::new();
    let mut surface = Vec::new();
    for prim in &spec.primitives {
        sample_primitive(prim, spec.density, &mut rng, &mut points);
    }
    surface.resize(points.len(), false);
    sample_rect(&spec.mirror, spec.density, &mut rng, &mut points);
    surface.resize(points.len(), true);

    let real = match spec.camera.pose {
        Some(pose) => pose,
        None => place_camera(spec, &mut rng)?,
    };
    let center = real.center();
    let plane = MirrorPlane::from_unnormalized(spec.mirror.normal(), spec.mirror.center, FrameTag::World)?.facing(&center);
    let reflect = make_reflection(&plane.transformed(&real, FrameTag::Camera(0)))?;
    let virtual_pose = virtual_camera(&real, &reflect)?;

    let n = points.len();
    let mut direct_depth: Vec<Option<(f64, (usize, usize))>> = vec![None; n];
    let mut mirror_depth: Vec<Option<(f64, (usize, usize))>> = vec![None; n];
    for (i, p) in points.iter().enumerate() {
        let sd = plane.signed_distance(p);
        if !surface[i] && sd <= 0.0 {
            continue;
        }
        if let Ok(pr) = project(&k, &real, p) {
            if let Some(cell) = k.cell(pr.u, pr.v) {
                direct_depth[i] = Some((pr.depth, cell));
            }
        }
        if surface[i] {
            continue;
        }
        // seen through the mirror: the sight line to the reflected point
        // must cross the plane inside the mirror rectangle
        let reflected = plane.reflect_point(p);
        let Some((_, hit)) = plane.intersect_ray(&center, &(reflected - center)) else {
            continue;
        };
        if !spec.mirror.contains_in_plane(&hit) {
            continue;
        }
        if let Ok(pr) = project(&k, &virtual_pose, p) {
            if let Some(cell) = k.cell(pr.u, pr.v) {
                mirror_depth[i] = Some((pr.depth, cell));
            }
        }
    }

    let real_owner = owners(&direct_depth, &k);
    let virtual_owner = owners(&mirror_depth, &k);
    let mut labels = vec![PointLabel::default(); n];
    for (i, label) in labels.iter_mut().enumerate() {
        if surface[i] {
            label.0 |= PointLabel::MIRROR_SURFACE;
        }
        if let Some((_, (c, r))) = direct_depth[i] {
            if real_owner[r * k.width as usize + c] == Some(i) {
                label.0 |= PointLabel::DIRECT;
            }
        }
        if let Some((_, (c, r))) = mirror_depth[i] {
            if virtual_owner[r * k.width as usize + c] == Some(i) {
                label.0 |= PointLabel::VIA_MIRROR;
            }
        }
    }

    let mut mask = ImageGrid::new(k.width as usize, k.height as usize, 1);
    for (i, l) in labels.iter().enumerate() {
        if l.is_mirror_surface() && l.direct() {
            let (_, (c, r)) = direct_depth[i].expect("direct samples have a cell");
            mask.set(c, r, 0, 255);
        }
    }

    Ok(SceneGroundTruth {
        spec: spec.clone(),
        intrinsics: k,
        plane,
        real,
        virtual_pose,
        points,
        labels,
        mask,
    })
}

/// Per-cell owner: nearest depth, ties to the lowest index.
fn owners(depths: &[Option<(f64, (usize, usize))>], k: &Intrinsics) -> Vec<Option<usize>> {
    let w = k.width as usize;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; w * k.height as usize];
    for (i, d) in depths.iter().enumerate() {
        if let Some((depth, (c, r))) = *d {
            let slot = &mut best[r * w + c];
            if slot.is_none_or(|(bd, _)| depth < bd) {
                *slot = Some((depth, i));
            }
        }
    }
    best.into_iter().map(|b| b.map(|(_, i)| i)).collect()
}

fn place_camera(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<CameraPose> {
    let placement = spec.camera.placement.expect("validated: pose or placement");
    let k = &spec.camera.intrinsics;
    let corners = spec.mirror.corners();
    let normal = spec.mirror.normal().normalize();
    let margin = 0.02 * k.width.min(k.height) as f64;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let c = Vector3::from_fn(|i, _| {
            let (lo, hi) = (placement.center_min[i], placement.center_max[i]);
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        });
        let jitter = placement.target_jitter;
        let target = spec.mirror.center
            + Vector3::from_fn(|_, _| if jitter > 0.0 { rng.random_range(-jitter..jitter) } else { 0.0 });
        if normal.dot(&(c - spec.mirror.center)).abs() < 0.1 {
            continue;
        }
        let Ok(pose) = CameraPose::look_at(&c, &target, &placement.up) else {
            continue;
        };
        let visible = corners.iter().all(|x| {
            project(k, &pose, x).is_ok_and(|p| {
                p.u > margin && p.v > margin && p.u < k.width as f64 - margin && p.v < k.height as f64 - margin
            })
        });
        if visible {
            return Ok(pose);
        }
    }
    Err(Error::PlacementFailure {
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

fn sample_primitive(prim: &Primitive, density: f64, rng: &mut ChaCha8Rng, out: &mut Vec<Vector3<f64>>) {
    match prim {
        Primitive::Wall(r) => sample_rect(r, density, rng, out),
        Primitive::Box { center, half_extents } => {
            let h = half_extents;
            let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
            for axis in 0..3 {
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                for sign in [-1.0, 1.0] {
                    let face = Rect {
                        center: center + axes[axis] * (sign * h[axis]),
                        u_axis: axes[a],
                        v_axis: axes[b],
                        half_extents: [h[a], h[b]],
                    };
                    sample_rect(&face, density, rng, out);
                }
            }
        }
        Primitive::Sphere { center, radius } => {
            // stratified in (z, azimuth), which is area-uniform on the sphere
            let n = (density * 4.0 * PI * radius * radius).ceil().max(1.0);
            let nz = (n / 2.0).sqrt().round().max(1.0) as usize;
            let nphi = (n / nz as f64).round().max(1.0) as usize;
            for i in 0..nz {
                for j in 0..nphi {
                    let z = -1.0 + (i as f64 + rng.random::<f64>()) * 2.0 / nz as f64;
                    let phi = (j as f64 + rng.random::<f64>()) * 2.0 * PI / nphi as f64;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    out.push(center + Vector3::new(s * phi.cos(), s * phi.sin(), z) * *radius);
                }
            }
        }
    }
}

/// Stratified jittered samples: one per grid cell, cell count ≈ density·area.
fn sample_rect(r: &Rect, density: f64, rng: &mut ChaCha8Rng, out: &mut Vec<Vector3<f64>>) {
    let [a, b] = r.half_extents;
    let n = (density * r.area()).ceil().max(1.0);
    let nu = (n * a / b).sqrt().round().max(1.0) as usize;
    let nv = (n / nu as f64).round().max(1.0) as usize;
    for i in 0..nu {
        for j in 0..nv {
            let su = -a + (i as f64 + rng.random::<f64>()) * 2.0 * a / nu as f64;
            let sv = -b + (j as f64 + rng.random::<f64>()) * 2.0 * b / nv as f64;
            out.push(r.center + r.u_axis * su + r.v_axis * sv);
        }
    }
}
