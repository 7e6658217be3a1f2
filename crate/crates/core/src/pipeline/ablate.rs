use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reconstruct::reconstruct;
use super::{create_dir, mix_seed, require, BackboneMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{registered_pose_errors, PoseErrors};
use crate::synth::{self, render_observations, SceneGroundTruth};

pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_MD: &str = "ablation.md";
pub const ABLATION_CSV: &str = "ablation.csv";

/// Errors below this (percent or units, and degrees) count as exact.
const DEGENERATE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub scene: usize,
    pub seed: u64,
    pub t_err_sym: f64,
    pub r_err_sym: f64,
    pub t_err_no_sym: f64,
    pub r_err_no_sym: f64,
}

impl AblationRow {
    /// The symmetric run beats the plain one on both errors.
    pub fn sym_wins(&self) -> bool {
        self.t_err_sym < self.t_err_no_sym && self.r_err_sym < self.r_err_no_sym
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingMean {
    pub t_err: f64,
    pub r_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub scenes: Vec<String>,
    pub seeds_per_scene: u64,
    pub with_sym: SettingMean,
    pub without_sym: SettingMean,
    /// Fraction of (scene, seed) pairs where the symmetric run wins.
    pub win_rate: f64,
    /// Both settings are exact on every pair, so the comparison says
    /// nothing (noiseless input).
    pub degenerate_fixture: bool,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn markdown(&self) -> String {
        let mut s = String::from("| Setting | T_err % | R_err deg |\n|---|---|---|\n");
        for (name, m) in [("w/o sym-loss", self.without_sym), ("w/ sym-loss", self.with_sym)] {
            let _ = writeln!(s, "| {name} | {:.4} | {:.4} |", m.t_err, m.r_err);
        }
        let _ = writeln!(
            s,
            "\n{} scenes x {} seeds, win rate {:.1}%",
            self.scenes.len(),
            self.seeds_per_scene,
            100.0 * self.win_rate
        );
        if self.degenerate_fixture {
            s.push_str("degenerate fixture: both settings are exact\n");
        }
        s
    }
}

fn mean(rows: &[AblationRow], f: fn(&AblationRow) -> f64) -> f64 {
    if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(f).sum::<f64>() / rows.len() as f64
    }
}

fn errors(gt: &SceneGroundTruth, cfg: &PipelineConfig, seed: u64, use_sym: bool) -> Result<PoseErrors> {
    let mut cfg = cfg.clone();
    cfg.optimizer.use_sym = use_sym;
    let corrs = match cfg.backbone {
        BackboneMode::Triangulate => Some(render_observations(gt, cfg.noise.px, seed).correspondences),
        BackboneMode::Simulate => None,
    };
    let mut trace = Vec::new();
    let state = reconstruct(gt, corrs.as_deref(), &cfg, seed, &mut trace)?;
    let real = state.views.iter().find(|v| v.view.is_real()).expect("real view").pose;
    let vir = state.views.iter().find(|v| !v.view.is_real()).expect("virtual view").pose;
    Ok(registered_pose_errors(&real, &vir, &gt.real, &gt.virtual_pose))
}

/// Reconstructs every scene with and without the symmetry terms over
/// `cfg.ablate_seeds` shared noise seeds and compares virtual-camera errors.
pub fn ablate(scenes: &[(String, SceneGroundTruth)], cfg: &PipelineConfig) -> Result<AblationReport> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(Error::EmptyInput("no scenes to ablate".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..scenes.len())
        .flat_map(|i| (0..cfg.ablate_seeds).map(move |s| (i, cfg.seed + s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, s)| {
            let gt = &scenes[i].1;
            let seed = mix_seed(gt.spec.seed, s);
            let with = errors(gt, cfg, seed, true)?;
            let without = errors(gt, cfg, seed, false)?;
            Ok(AblationRow {
                scene: i,
                seed: s,
                t_err_sym: with.t_err,
                r_err_sym: with.r_err,
                t_err_no_sym: without.t_err,
                r_err_no_sym: without.r_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let wins = rows.iter().filter(|r| r.sym_wins()).count();
    let degenerate_fixture = rows.iter().all(|r| {
        [r.t_err_sym, r.r_err_sym, r.t_err_no_sym, r.r_err_no_sym]
            .iter()
            .all(|e| *e < DEGENERATE_EPS)
    });
    Ok(AblationReport {
        scenes: scenes.iter().map(|(n, _)| n.clone()).collect(),
        seeds_per_scene: cfg.ablate_seeds,
        with_sym: SettingMean {
            t_err: mean(&rows, |r| r.t_err_sym),
            r_err: mean(&rows, |r| r.r_err_sym),
        },
        without_sym: SettingMean {
            t_err: mean(&rows, |r| r.t_err_no_sym),
            r_err: mean(&rows, |r| r.r_err_no_sym),
        },
        win_rate: wins as f64 / rows.len() as f64,
        degenerate_fixture,
        rows,
    })
}

/// Scene directories under `bench`, sorted by name; `bench` itself when it
/// is a scene directory.
pub fn load_bench(bench: &Path) -> Result<Vec<(String, SceneGroundTruth)>> {
    let mut dirs: Vec<PathBuf> = Vec::new();
    if bench.join("scene.json").exists() {
        dirs.push(bench.to_path_buf());
    } else {
        require(bench)?;
        let entries = std::fs::read_dir(bench).map_err(|e| Error::io(bench, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(bench, e))?.path();
            if path.join("scene.json").exists() {
                dirs.push(path);
            }
        }
        dirs.sort();
    }
    if dirs.is_empty() {
        return Err(Error::MissingInput(bench.join("scene.json")));
    }
    dirs.iter()
        .map(|d| {
            for f in synth::SCENE_FILES {
                require(&d.join(f))?;
            }
            let name = d.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
            Ok((name, synth::import(d)?))
        })
        .collect()
}

/// [`ablate`] over a bench directory; writes `ablation.json`, `ablation.md`
/// and per-pair `ablation.csv` to `out`.
pub fn ablate_dir(bench: &Path, out: &Path, cfg: &PipelineConfig) -> Result<AblationReport> {
    let scenes = load_bench(bench)?;
    let report = ablate(&scenes, cfg)?;
    create_dir(out)?;
    io::write_json(&report, &out.join(ABLATION_JSON))?;
    io::write_csv(&report.rows, &out.join(ABLATION_CSV))?;
    let md = out.join(ABLATION_MD);
    std::fs::write(&md, report.markdown()).map_err(|e| Error::io(&md, e))?;
    Ok(report)
}
