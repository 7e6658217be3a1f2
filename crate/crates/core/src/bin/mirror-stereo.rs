use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mirror_stereo::pipeline::{self, BackboneMode, PipelineConfig};
use mirror_stereo::synth::SceneSpec;
use mirror_stereo::{Error, Result};

/// Mirror-view stereo: synthetic scenes, reconstruction, evaluation and the
/// symmetry-loss ablation.
#[derive(Parser)]
#[command(name = "mirror-stereo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write scene directories from a preset or a scene spec file.
    Generate {
        /// Preset name (`bench16`).
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// Scene spec JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Reconstruct a scene directory.
    Reconstruct { scene: Option<PathBuf> },
    /// Score a reconstruction against its scene.
    Evaluate { recon: PathBuf, scene: Option<PathBuf> },
    /// Run with and without the symmetry terms over a bench directory.
    Ablate {
        bench: Option<PathBuf>,
        /// Noise seeds per scene.
        #[arg(long)]
        seeds: Option<u64>,
    },
}

/// Settings shared by all subcommands; each one overrides the config file.
#[derive(Args)]
struct Overrides {
    /// Pipeline config JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    no_sym: bool,
    #[arg(long, global = true, value_parser = parse_backbone)]
    backbone: Option<BackboneMode>,
    #[arg(long, global = true)]
    noise_point: Option<f64>,
    /// Rotation in degrees and translation in units, e.g. `5,0.05`.
    #[arg(long, global = true, value_name = "DEG,TRANS", value_parser = parse_pair)]
    noise_pose: Option<(f64, f64)>,
    #[arg(long, global = true)]
    noise_scale: Option<f64>,
    #[arg(long, global = true)]
    noise_px: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
}

fn parse_backbone(s: &str) -> std::result::Result<BackboneMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected DEG,TRANS")?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

impl Overrides {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                if !path.exists() {
                    return Err(Error::MissingInput(path.clone()));
                }
                PipelineConfig::from_file(path)?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.out_dir = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if self.no_sym {
            cfg.optimizer.use_sym = false;
        }
        if let Some(v) = self.backbone {
            cfg.backbone = v;
        }
        if let Some(v) = self.noise_point {
            cfg.noise.point = v;
        }
        if let Some((deg, trans)) = self.noise_pose {
            cfg.noise.pose_deg = deg;
            cfg.noise.pose_trans = trans;
        }
        if let Some(v) = self.noise_scale {
            cfg.noise.scale = v;
        }
        if let Some(v) = self.noise_px {
            cfg.noise.px = v;
        }
        if let Some(v) = self.max_iters {
            cfg.optimizer.max_iters = v;
        }
        if let Some(v) = self.lr {
            cfg.optimizer.lr = v;
        }
        if let Some(v) = self.tol {
            cfg.optimizer.tol = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn need<'a>(path: Option<&'a PathBuf>, what: &str) -> Result<&'a Path> {
    path.map(PathBuf::as_path)
        .ok_or_else(|| Error::ConfigError(format!("{what} not given")))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = cli.opts.config()?;
    match cli.command {
        Command::Generate { preset, spec } => {
            let out = need(cfg.out_dir.as_ref(), "--out")?;
            match (preset, spec) {
                (_, Some(spec)) => {
                    if !spec.exists() {
                        return Err(Error::MissingInput(spec));
                    }
                    let spec: SceneSpec = mirror_stereo::io::read_json(&spec)?;
                    let s = pipeline::generate_scene(&spec, out, cfg.noise.px, cfg.seed)?;
                    println!("{}: {s}", out.display());
                }
                (preset, None) => {
                    let name = preset.unwrap_or_else(|| "bench16".into());
                    for (dir, s) in pipeline::generate_preset(&name, out, cfg.noise.px, cfg.seed)? {
                        println!("{}: {s}", dir.display());
                    }
                }
            }
        }
        Command::Reconstruct { scene } => {
            if scene.is_some() {
                cfg.scene_dir = scene;
            }
            let scene = need(cfg.scene_dir.as_ref(), "scene directory")?;
            let out = need(cfg.out_dir.as_ref(), "--out")?;
            let rec = pipeline::reconstruct_dir(scene, out, &cfg)?;
            let last = rec.trace.last().expect("trace has the initial row");
            println!(
                "{}: {} iterations, loss {:.6e} -> {:.6e}",
                out.display(),
                rec.trace.len() - 1,
                rec.trace[0].total,
                last.total
            );
        }
        Command::Evaluate { recon, scene } => {
            if scene.is_some() {
                cfg.scene_dir = scene;
            }
            let scene = need(cfg.scene_dir.as_ref(), "scene directory")?;
            let eval = pipeline::evaluate_dirs(&recon, scene, cfg.tau)?;
            let m = eval.metrics;
            print!(
                "comp {:.2}% acc {:.2}% f1 {:.2}% chamfer {:.6}",
                m.completeness, m.accuracy, m.f1, m.chamfer
            );
            match eval.pose {
                Some(p) => println!(" T_err {:.4} R_err {:.4}", p.t_err, p.r_err),
                None => println!(),
            }
        }
        Command::Ablate { bench, seeds } => {
            if bench.is_some() {
                cfg.scene_dir = bench;
            }
            if let Some(n) = seeds {
                cfg.ablate_seeds = n;
            }
            cfg.validate()?;
            let bench = need(cfg.scene_dir.as_ref(), "bench directory")?;
            let out = need(cfg.out_dir.as_ref(), "--out")?;
            let report = pipeline::ablate_dir(bench, out, &cfg)?;
            print!("{}", report.markdown());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
