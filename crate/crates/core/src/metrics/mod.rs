//! Point-cloud reconstruction metrics and camera pose errors.
//!
//! Accuracy is measured from the reconstruction to ground truth and
//! completeness the other way; both count nearest-neighbour distances
//! strictly below τ. Chamfer averages the two mean (unsquared) distances.

mod kdtree;

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rotation_angle, CameraPose};

pub use kdtree::KdTree;

/// Default threshold: 1 cm with 1 unit = 1 m.
pub const DEFAULT_TAU: f64 = 0.01;

/// Distance from each query point to its nearest neighbour in `target`.
pub fn nearest_distances(query: &[Vector3<f64>], target: &[Vector3<f64>]) -> Result<Vec<f64>> {
    if query.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tree = KdTree::new(target);
    Ok(query
        .par_iter()
        .map(|q| tree.nearest(q).expect("non-empty tree").1)
        .collect())
}

fn percent_below(d: &[f64], tau: f64) -> f64 {
    100.0 * d.iter().filter(|x| **x < tau).count() as f64 / d.len() as f64
}

fn mean(d: &[f64]) -> f64 {
    d.iter().sum::<f64>() / d.len() as f64
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::ConfigError(format!("threshold must be positive, got {tau}")))
    }
}

pub fn accuracy(pred: &[Vector3<f64>], gt: &[Vector3<f64>], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(percent_below(&nearest_distances(pred, gt)?, tau))
}

pub fn completeness(pred: &[Vector3<f64>], gt: &[Vector3<f64>], tau: f64) -> Result<f64> {
    accuracy(gt, pred, tau)
}

/// Harmonic mean of two percentages, 0 when both are 0.
pub fn f1(acc: f64, comp: f64) -> f64 {
    if acc + comp > 0.0 {
        2.0 * acc * comp / (acc + comp)
    } else {
        0.0
    }
}

pub fn chamfer(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<f64> {
    let a = nearest_distances(pred, gt)?;
    let b = nearest_distances(gt, pred)?;
    Ok(0.5 * (mean(&a) + mean(&b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub completeness: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub chamfer: f64,
    pub tau: f64,
    pub pred_points: usize,
    pub gt_points: usize,
}

/// All four cloud metrics with one nearest-neighbour pass per direction.
pub fn evaluate(pred: &[Vector3<f64>], gt: &[Vector3<f64>], tau: f64) -> Result<MetricsReport> {
    check_tau(tau)?;
    let to_gt = nearest_distances(pred, gt)?;
    let to_pred = nearest_distances(gt, pred)?;
    let accuracy = percent_below(&to_gt, tau);
    let completeness = percent_below(&to_pred, tau);
    Ok(MetricsReport {
        completeness,
        accuracy,
        f1: f1(accuracy, completeness),
        chamfer: 0.5 * (mean(&to_gt) + mean(&to_pred)),
        tau,
        pred_points: pred.len(),
        gt_points: gt.len(),
    })
}

/// Averages over scenes. F1 is reported both ways: the mean of per-scene
/// F1 and the F1 of the mean accuracy and completeness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenes: usize,
    pub completeness: f64,
    pub accuracy: f64,
    pub f1_per_scene: f64,
    pub f1_of_means: f64,
    pub chamfer: f64,
    pub tau: f64,
}

impl MetricsSummary {
    pub fn from_reports(reports: &[MetricsReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::EmptyInput("no metric reports".into()));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let completeness = avg(|r| r.completeness);
        let accuracy = avg(|r| r.accuracy);
        Ok(MetricsSummary {
            scenes: reports.len(),
            completeness,
            accuracy,
            f1_per_scene: avg(|r| r.f1),
            f1_of_means: f1(accuracy, completeness),
            chamfer: avg(|r| r.chamfer),
            tau: reports[0].tau,
        })
    }
}

/// Markdown table with columns Comp., Accuracy, F1, Chamfer.
pub fn markdown_table(rows: &[(String, MetricsReport)]) -> String {
    let mut s = String::from("| Method | Comp. % | Accuracy % | F1 % | Chamfer |\n|---|---|---|---|---|\n");
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "| {name} | {:.2} | {:.2} | {:.2} | {:.4} |",
            r.completeness, r.accuracy, r.f1, r.chamfer
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrors {
    /// Translation error in percent of the ground-truth translation norm,
    /// or in units when `absolute` is set.
    pub t_err: f64,
    /// Translation error in units.
    pub t_abs: f64,
    /// Rotation error in degrees.
    pub r_err: f64,
    /// Set when the ground-truth translation is too small to normalize by.
    pub absolute: bool,
}

pub fn pose_errors(est: &CameraPose, gt: &CameraPose) -> PoseErrors {
    let t_abs = (est.translation - gt.translation).norm();
    let norm = gt.translation.norm();
    let absolute = norm < 1e-12;
    PoseErrors {
        t_err: if absolute { t_abs } else { 100.0 * t_abs / norm },
        t_abs,
        r_err: rotation_angle(&gt.rotation, &est.rotation).to_degrees(),
        absolute,
    }
}

/// Pose errors of a virtual camera after registering both real cameras to a
/// common reference: compares `vir · real⁻¹` for estimate and ground truth.
pub fn registered_pose_errors(
    est_real: &CameraPose,
    est_vir: &CameraPose,
    gt_real: &CameraPose,
    gt_vir: &CameraPose,
) -> PoseErrors {
    pose_errors(&est_vir.compose(&est_real.inverse()), &gt_vir.compose(&gt_real.inverse()))
}
