use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::SceneGroundTruth;
use crate::backbone::Correspondence;
use crate::geom::ImageGrid;

/// Inputs a reconstruction sees: real/virtual pixel matches and the mirror
/// mask of the real view.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub correspondences: Vec<Correspondence>,
    pub mask: ImageGrid,
}

/// One correspondence per sample seen both directly and through the mirror,
/// linking its real-view pixel to its pixel in the flipped virtual view.
/// Pixels get iid N(0, σ²) noise per coordinate; matches pushed outside the
/// image are dropped.
///
/// Panics if `sigma_px` is negative or not finite.
pub fn render_observations(gt: &SceneGroundTruth, sigma_px: f64, seed: u64) -> Observations {
    assert!(sigma_px >= 0.0 && sigma_px.is_finite(), "sigma_px must be >= 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = (sigma_px > 0.0).then(|| Normal::new(0.0, sigma_px).expect("finite sigma"));
    let k = &gt.intrinsics;
    let virt: std::collections::HashMap<usize, [f64; 2]> = gt
        .virtual_view()
        .into_iter()
        .map(|s| (s.index, [s.projection.u, s.projection.v]))
        .collect();
    let mut correspondences = Vec::new();
    for s in gt.real_view() {
        let Some(&pixel_b) = virt.get(&s.index) else {
            continue;
        };
        let mut c = Correspondence {
            pixel_a: [s.projection.u, s.projection.v],
            pixel_b,
            weight: 1.0,
        };
        if let Some(n) = &normal {
            for p in [&mut c.pixel_a, &mut c.pixel_b] {
                p[0] += rng.sample(n);
                p[1] += rng.sample(n);
            }
        }
        if k.contains(c.pixel_a[0], c.pixel_a[1]) && k.contains(c.pixel_b[0], c.pixel_b[1]) {
            correspondences.push(c);
        }
    }
    Observations {
        correspondences,
        mask: gt.mask.clone(),
    }
}
