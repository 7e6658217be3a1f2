use nalgebra::Vector3;

use super::{view_frame, Correspondence, PairPrediction, PointMap, CONFIDENCE_RHO};
use crate::error::{Error, Result};
use crate::geom::{virtual_camera, CameraPose, ImageGrid, Intrinsics, MirrorPlane, ReflectionTransform};
use crate::graph::{Edge, ViewId};

const MIN_RAY_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    pub point: Vector3<f64>,
    /// Length of the shortest segment between the two rays.
    pub residual: f64,
}

/// Midpoint triangulation of one correspondence; the point is in world
/// coordinates of the two poses.
pub fn triangulate(k: &Intrinsics, pose_a: &CameraPose, pose_b: &CameraPose, c: &Correspondence) -> Result<Triangulation> {
    let (oa, ob) = (pose_a.center(), pose_b.center());
    let da = pose_a.rotation.inverse() * k.ray(c.pixel_a[0], c.pixel_a[1]);
    let db = pose_b.rotation.inverse() * k.ray(c.pixel_b[0], c.pixel_b[1]);
    let baseline = ob - oa;
    if baseline.norm() <= 1e-12 * (1.0 + oa.norm()) {
        return Err(Error::IllConditioned("camera centers coincide".into()));
    }
    let sin = da.cross(&db).norm() / (da.norm() * db.norm());
    if sin < MIN_RAY_ANGLE.sin() {
        return Err(Error::IllConditioned(format!("rays are parallel (sin = {sin:e})")));
    }
    // minimize |oa + s da - ob - t db|
    let (a, b, cc) = (da.dot(&da), da.dot(&db), db.dot(&db));
    let (d, e) = (da.dot(&baseline), db.dot(&baseline));
    let den = a * cc - b * b;
    let s = (d * cc - b * e) / den;
    let t = (b * d - a * e) / den;
    let pa = oa + da * s;
    let pb = ob + db * t;
    Ok(Triangulation {
        point: (pa + pb) * 0.5,
        residual: (pa - pb).norm(),
    })
}

/// Triangulates real/virtual correspondences into a pair prediction in the
/// real camera frame. Points that land behind the mirror or behind either
/// camera are dropped; when two matches share a cell the smaller residual
/// wins.
pub fn triangulate_pair(
    k: &Intrinsics,
    real: &CameraPose,
    reflect: &ReflectionTransform,
    corrs: &[Correspondence],
) -> Result<PairPrediction> {
    if corrs.is_empty() {
        return Err(Error::EmptyInput("no correspondences".into()));
    }
    let vir = virtual_camera(real, reflect)?;
    // work in the real camera frame
    let pose_a = CameraPose::identity();
    let pose_b = vir.compose(&real.inverse());
    let plane = &reflect.plane;
    let edge = Edge {
        a: ViewId::REAL,
        b: ViewId::virtual_view(1, 0)?,
    };
    let mut map_a = PointMap::for_intrinsics(k, view_frame(edge.a));
    let mut map_b = PointMap::for_intrinsics(k, view_frame(edge.a));
    let mut best_a = vec![f64::INFINITY; map_a.points.len()];
    let mut best_b = vec![f64::INFINITY; map_b.points.len()];
    for c in corrs {
        let (Some(cell_a), Some(cell_b)) = (k.cell(c.pixel_a[0], c.pixel_a[1]), k.cell(c.pixel_b[0], c.pixel_b[1]))
        else {
            continue;
        };
        let Ok(tri) = triangulate(k, &pose_a, &pose_b, c) else {
            continue;
        };
        let x = tri.point;
        if x.z <= 0.0 || pose_b.transform(&x).z <= 0.0 || plane.signed_distance(&x) <= 0.0 {
            continue;
        }
        let conf = (-tri.residual / CONFIDENCE_RHO).exp();
        let ia = map_a.index(cell_a.0, cell_a.1);
        if tri.residual < best_a[ia] {
            best_a[ia] = tri.residual;
            map_a.set(cell_a, c.pixel_a, x, conf);
        }
        let ib = map_b.index(cell_b.0, cell_b.1);
        if tri.residual < best_b[ib] {
            best_b[ib] = tri.residual;
            map_b.set(cell_b, c.pixel_b, x, conf);
        }
    }
    Ok(PairPrediction {
        edge,
        pointmap_a: map_a,
        pointmap_b: map_b,
        pose_b,
    })
}

/// Fills masked cells of a real-view pointmap with the intersection of the
/// cell-center ray and the mirror plane (camera frame). Returns the number of
/// cells written.
pub fn add_mirror_surface(map: &mut PointMap, k: &Intrinsics, plane: &MirrorPlane, mask: &ImageGrid) -> Result<usize> {
    if mask.width != map.width || mask.height != map.height {
        return Err(Error::ShapeError(format!(
            "mask is {}x{}, pointmap is {}x{}",
            mask.width, mask.height, map.width, map.height
        )));
    }
    let mut added = 0;
    for row in 0..map.height {
        for col in 0..map.width {
            if mask.get(col, row, 0) == 0 {
                continue;
            }
            let (u, v) = (col as f64 + 0.5, row as f64 + 0.5);
            if let Some((s, x)) = plane.intersect_ray(&Vector3::zeros(), &k.ray(u, v)) {
                if s > 0.0 {
                    map.set((col, row), [u, v], x, 1.0);
                    added += 1;
                }
            }
        }
    }
    Ok(added)
}
