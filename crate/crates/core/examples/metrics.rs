//! Accuracy, completeness, F1 and chamfer distance between two clouds.

use mirror_stereo::metrics::{evaluate, markdown_table};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mirror_stereo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gt: Vec<Vector3<f64>> = (0..5000).map(|_| Vector3::from_fn(|_, _| rng.random_range(0.0..1.0))).collect();
    let mut rows = Vec::new();
    for (name, jitter, keep) in [("exact", 0.0, 1.0), ("jittered", 0.004, 1.0), ("half", 0.004, 0.5)] {
        let mut pred = Vec::new();
        for p in &gt {
            if rng.random_bool(keep) {
                pred.push(p + Vector3::from_fn(|_, _| rng.random_range(-jitter..=jitter)));
            }
        }
        rows.push((name.to_string(), evaluate(&pred, &gt, 0.01)?));
    }
    print!("{}", markdown_table(&rows));
    Ok(())
}
