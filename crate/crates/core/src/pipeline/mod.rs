//! End-to-end driver behind the command-line tool: scene generation,
//! reconstruction, evaluation against ground truth and the symmetry-loss
//! ablation. Every step is a function of its inputs and the configured
//! seed, so repeated runs write identical bytes.

mod ablate;
mod evaluate;
mod reconstruct;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::AlignConfig;
use crate::backbone::BackboneNoise;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_TAU;
use crate::synth::{self, bench_specs, generate, render_observations, SceneGroundTruth, SceneSpec};

pub use ablate::{ablate, ablate_dir, load_bench, AblationReport, AblationRow, SettingMean};
pub use evaluate::{evaluate_dirs, read_labeled_cloud, scoring_cloud, Evaluation};
pub use reconstruct::{fused_cloud, predict, reconstruct, reconstruct_dir, write_reconstruction, Reconstruction, ReconPoses};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackboneMode {
    /// Midpoint triangulation of the scene's real/virtual correspondences.
    Triangulate,
    /// Ground-truth pointmaps with injected noise.
    Simulate,
}

impl std::str::FromStr for BackboneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangulate" => Ok(BackboneMode::Triangulate),
            "simulate" => Ok(BackboneMode::Simulate),
            _ => Err(Error::ConfigError(format!("unknown backbone {s:?}"))),
        }
    }
}

/// Noise injected by the simulated backbone (`point`, `pose_*`, `scale`)
/// and on rendered correspondences (`px`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub point: f64,
    pub pose_deg: f64,
    pub pose_trans: f64,
    pub scale: f64,
    pub px: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            point: 0.01,
            pose_deg: 5.0,
            pose_trans: 0.05,
            scale: 0.0,
            px: 0.5,
        }
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        NoiseConfig {
            point: 0.0,
            pose_deg: 0.0,
            pose_trans: 0.0,
            scale: 0.0,
            px: 0.0,
        }
    }

    pub fn backbone(&self) -> BackboneNoise {
        BackboneNoise {
            point: self.point,
            pose_deg: self.pose_deg,
            pose_trans: self.pose_trans,
            scale: self.scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.backbone().validate()?;
        if !(self.px >= 0.0 && self.px.is_finite()) {
            return Err(Error::ConfigError(format!("noise.px must be >= 0, got {}", self.px)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub backbone: BackboneMode,
    pub noise: NoiseConfig,
    pub optimizer: AlignConfig,
    pub tau: f64,
    pub seed: u64,
    /// Noise seeds per scene in the ablation, starting at `seed`.
    pub ablate_seeds: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scene_dir: None,
            out_dir: None,
            backbone: BackboneMode::Simulate,
            noise: NoiseConfig::default(),
            optimizer: AlignConfig::default(),
            tau: DEFAULT_TAU,
            seed: 0,
            ablate_seeds: 1,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = crate::io::read_json(path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.optimizer.validate()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::ConfigError(format!("tau must be positive, got {}", self.tau)));
        }
        if self.ablate_seeds == 0 {
            return Err(Error::ConfigError("ablate_seeds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-scene seed for noise draws, decorrelated across scenes.
pub fn mix_seed(scene: u64, seed: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = scene.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub seed: u64,
    pub points: usize,
    pub direct: usize,
    pub via_mirror: usize,
    pub both: usize,
    pub mirror_pixels: usize,
    pub correspondences: usize,
}

impl fmt::Display for SceneSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {}: {} points ({} direct, {} via mirror, {} both), {} mirror pixels, {} correspondences",
            self.seed, self.points, self.direct, self.via_mirror, self.both, self.mirror_pixels, self.correspondences
        )
    }
}

/// Generates one scene and writes it with its correspondences (pixel noise
/// `noise_px`, drawn from `seed`) to `dir`.
pub fn generate_scene(spec: &SceneSpec, dir: &Path, noise_px: f64, seed: u64) -> Result<SceneSummary> {
    if !(noise_px >= 0.0 && noise_px.is_finite()) {
        return Err(Error::ConfigError(format!("noise.px must be >= 0, got {noise_px}")));
    }
    let gt = generate(spec)?;
    let obs = render_observations(&gt, noise_px, mix_seed(spec.seed, seed));
    synth::export(&gt, dir)?;
    synth::export_observations(&obs, dir)?;
    Ok(summarize(&gt, obs.correspondences.len()))
}

pub fn summarize(gt: &SceneGroundTruth, correspondences: usize) -> SceneSummary {
    let count = |f: fn(synth::PointLabel) -> bool| gt.labels.iter().filter(|l| f(**l)).count();
    SceneSummary {
        seed: gt.spec.seed,
        points: gt.points.len(),
        direct: count(synth::PointLabel::direct),
        via_mirror: count(synth::PointLabel::via_mirror),
        both: count(synth::PointLabel::both),
        mirror_pixels: gt.mask.data.iter().filter(|v| **v != 0).count(),
        correspondences,
    }
}

/// Named scene presets. `bench16` is the 16-scene benchmark with seeds 0–15,
/// written to `scene_00` … `scene_15`.
pub fn preset(name: &str) -> Result<Vec<(String, SceneSpec)>> {
    match name {
        "bench16" => Ok(bench_specs()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("scene_{i:02}"), s))
            .collect()),
        _ => Err(Error::ConfigError(format!("unknown preset {name:?}"))),
    }
}

pub fn generate_preset(name: &str, out: &Path, noise_px: f64, seed: u64) -> Result<Vec<(PathBuf, SceneSummary)>> {
    preset(name)?
        .into_iter()
        .map(|(dir, spec)| {
            let path = out.join(dir);
            generate_scene(&spec, &path, noise_px, seed).map(|s| (path, s))
        })
        .collect()
}

pub(crate) fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(path.to_path_buf()))
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests;
