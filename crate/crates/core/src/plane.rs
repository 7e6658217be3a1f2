//! Mirror plane recovery from a masked point cloud: the normal is the
//! smallest-variance principal axis of the masked points and the anchor
//! point is their centroid.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geom::{FrameTag, MirrorPlane};

/// Relative eigenvalue floor below which a principal spread counts as absent.
const SPREAD_FLOOR: f64 = 1e-12;
/// Relative gap between the two smallest eigenvalues below which the normal
/// direction is ambiguous.
const TIE_GAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCloud {
    pub points: Vec<Vector3<f64>>,
    pub mask: Vec<bool>,
    pub frame: FrameTag,
}

impl MaskedCloud {
    pub fn new(points: Vec<Vector3<f64>>, mask: Vec<bool>, frame: FrameTag) -> Result<Self> {
        if points.len() != mask.len() {
            return Err(Error::ShapeError(format!(
                "{} points but {} mask entries",
                points.len(),
                mask.len()
            )));
        }
        Ok(MaskedCloud { points, mask, frame })
    }

    /// Every point is selected.
    pub fn all(points: Vec<Vector3<f64>>, frame: FrameTag) -> Self {
        let mask = vec![true; points.len()];
        MaskedCloud { points, mask, frame }
    }

    /// Selects points by index, as in a JSON index list for unstructured clouds.
    pub fn from_indices(points: Vec<Vector3<f64>>, indices: &[usize], frame: FrameTag) -> Result<Self> {
        let mut mask = vec![false; points.len()];
        for &i in indices {
            *mask.get_mut(i).ok_or_else(|| {
                Error::ShapeError(format!("index {i} out of range for {} points", points.len()))
            })? = true;
        }
        Ok(MaskedCloud { points, mask, frame })
    }

    pub fn masked(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(p, _)| p)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: MirrorPlane,
    /// Point-to-plane RMS over the masked points.
    pub rms: f64,
    /// Covariance eigenvalues, ascending.
    pub eigenvalues: [f64; 3],
}

/// Fits the plane and orients its normal towards the origin of a camera
/// frame, or towards +z in the world frame.
pub fn estimate_plane(cloud: &MaskedCloud) -> Result<PlaneFit> {
    let fit = fit_unoriented(cloud)?;
    let plane = match cloud.frame {
        FrameTag::Camera(_) => fit.plane.facing(&Vector3::zeros()),
        FrameTag::World => {
            let mut p = fit.plane;
            if p.normal.z < 0.0 || (p.normal.z == 0.0 && first_nonzero(&p.normal) < 0.0) {
                p.normal = -p.normal;
            }
            p
        }
    };
    Ok(PlaneFit { plane, ..fit })
}

/// Same fit with the normal oriented towards an explicit viewpoint, e.g. the
/// current camera center when the cloud is in the world frame.
pub fn estimate_plane_facing(cloud: &MaskedCloud, viewpoint: &Vector3<f64>) -> Result<PlaneFit> {
    let fit = fit_unoriented(cloud)?;
    Ok(PlaneFit {
        plane: fit.plane.facing(viewpoint),
        ..fit
    })
}

fn first_nonzero(v: &Vector3<f64>) -> f64 {
    v.iter().copied().find(|c| *c != 0.0).unwrap_or(0.0)
}

fn fit_unoriented(cloud: &MaskedCloud) -> Result<PlaneFit> {
    let n = cloud.masked_count();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let mut sum = Vector3::zeros();
    for p in cloud.masked() {
        sum += p;
    }
    let centroid = sum / n as f64;
    let mut cov = Matrix3::zeros();
    for p in cloud.masked() {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.map(|i| eig.eigenvalues[i]);
    let [l0, l1, l2] = vals;
    if !(l2 > 0.0) || l1 <= SPREAD_FLOOR * l2 {
        return Err(Error::DegenerateCloud(format!(
            "points are collinear or coincident (eigenvalues {vals:?})"
        )));
    }
    if l1 - l0 <= TIE_GAP * l2 {
        return Err(Error::DegenerateCloud(format!(
            "no dominant plane, smallest eigenvalues tie (eigenvalues {vals:?})"
        )));
    }
    let normal = eig.eigenvectors.column(order[0]).normalize();
    let plane = MirrorPlane::new(normal, centroid, cloud.frame)?;
    let rms = plane_residual(&plane, cloud)?;
    Ok(PlaneFit {
        plane,
        rms,
        eigenvalues: vals,
    })
}

/// RMS point-to-plane distance over the masked points.
pub fn plane_residual(plane: &MirrorPlane, cloud: &MaskedCloud) -> Result<f64> {
    plane.validate()?;
    let mut n = 0usize;
    let mut acc = 0.0;
    for p in cloud.masked() {
        let d = plane.signed_distance(p);
        acc += d * d;
        n += 1;
    }
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    Ok((acc / n as f64).sqrt())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn recovers_sampled_plane(
            n in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_filter("non-zero", |v| Vector3::new(v.0, v.1, v.2).norm() > 0.1),
            d in 1.0..10.0f64,
            jitter in 0.0..1e-4f64,
        ) {
            let n = Vector3::new(n.0, n.1, n.2).normalize();
            let center = -n * d;
            let u = n.cross(&if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() }).normalize();
            let v = n.cross(&u);
            let pts: Vec<_> = (0..64)
                .map(|i| {
                    let (a, b) = ((i % 8) as f64 * 0.1, (i / 8) as f64 * 0.1);
                    center + u * a + v * b + n * (jitter * if i % 2 == 0 { 1.0 } else { -1.0 })
                })
                .collect();
            let fit = estimate_plane(&MaskedCloud::all(pts, FrameTag::Camera(0))).unwrap();
            prop_assert!((fit.plane.normal.norm() - 1.0).abs() < 1e-12);
            // faces the camera at the origin
            prop_assert!(fit.plane.normal.dot(&-fit.plane.point) > 0.0);
            prop_assert!(fit.plane.normal.dot(&n) > 1.0 - 1e-6);
            prop_assert!(fit.rms <= jitter + 1e-12);
        }
    }
}
