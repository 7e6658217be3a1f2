//! Pair graphs: one real/virtual pair per mirror for a single image, and the
//! sliding-window union for video.

use mirror_stereo::graph::{build_static, build_video};

fn main() -> mirror_stereo::Result<()> {
    println!("{}", build_static(2)?.to_json());
    let g = build_video(4, 2)?;
    for e in &g.edges {
        let kind = if e.is_spatial() { "spatial" } else { "temporal" };
        println!("{:<8} {} - {}", kind, e.a, e.b);
    }
    Ok(())
}
