//! Generate, reconstruct, evaluate and ablate on a few bench scenes, the
//! same steps the command-line tool runs.
//!
//! `cargo run --release --example end_to_end -- [out-dir]`

use std::path::PathBuf;

use mirror_stereo::pipeline::{self, PipelineConfig};

fn main() -> mirror_stereo::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("mirror-stereo-e2e"), PathBuf::from);
    let cfg = PipelineConfig::default();
    let bench = root.join("bench");
    for (name, spec) in pipeline::preset("bench16")?.into_iter().take(3) {
        let dir = bench.join(&name);
        println!("{name}: {}", pipeline::generate_scene(&spec, &dir, cfg.noise.px, cfg.seed)?);
        let rec = root.join("rec").join(&name);
        pipeline::reconstruct_dir(&dir, &rec, &cfg)?;
        let eval = pipeline::evaluate_dirs(&rec, &dir, cfg.tau)?;
        let m = eval.metrics;
        println!("  comp {:.2}% acc {:.2}% f1 {:.2}% chamfer {:.4}", m.completeness, m.accuracy, m.f1, m.chamfer);
    }
    let report = pipeline::ablate_dir(&bench, &root.join("ablation"), &cfg)?;
    print!("{}", report.markdown());
    println!("outputs in {}", root.display());
    Ok(())
}
