//! Generating a benchmark scene and writing it to disk.
//!
//! `cargo run --example synth_scene -- [seed] [out-dir]`

use std::path::PathBuf;

use mirror_stereo::pipeline::{generate_scene, summarize};
use mirror_stereo::synth::{bench_scene, generate};

fn main() -> mirror_stereo::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join(format!("mirror-stereo-scene-{seed}")), PathBuf::from);

    let gt = generate(&bench_scene(seed))?;
    println!("{}", summarize(&gt, 0));
    println!("camera center {:?}", gt.real.center().as_slice());
    println!("mirror normal {:?}", gt.plane.normal.as_slice());
    let s = generate_scene(&bench_scene(seed), &out, 0.5, 0)?;
    println!("wrote {} ({} correspondences)", out.display(), s.correspondences);
    Ok(())
}
