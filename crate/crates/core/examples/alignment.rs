//! Global alignment of a noisy pair prediction, with and without the
//! mirror-symmetry terms.

use mirror_stereo::align::{optimize, AlignConfig, GlobalState};
use mirror_stereo::backbone::{simulate_backbone, BackboneNoise};
use mirror_stereo::graph::build_static;
use mirror_stereo::metrics::registered_pose_errors;
use mirror_stereo::synth::{bench_scene, generate};
use mirror_stereo::graph::ViewId;

fn main() -> mirror_stereo::Result<()> {
    let gt = generate(&bench_scene(5))?;
    let edge = build_static(1)?.edges[0];
    let noise = BackboneNoise {
        point: 0.01,
        pose_deg: 5.0,
        pose_trans: 0.05,
        scale: 0.0,
    };
    let preds = [simulate_backbone(&gt, &edge, &noise, 3)?];
    let init = GlobalState::from_predictions(&gt.intrinsics, &preds, &gt.real, Some(&gt.mask))?;
    for use_sym in [false, true] {
        let cfg = AlignConfig {
            use_sym,
            ..Default::default()
        };
        let (state, trace) = optimize(&init, &preds, &cfg)?;
        let e = registered_pose_errors(
            &state.pose(ViewId::REAL).unwrap(),
            &state.pose(edge.b).unwrap(),
            &gt.real,
            &gt.virtual_pose,
        );
        let last = trace.last().unwrap();
        println!(
            "sym {use_sym:5}: {:3} iterations, loss {:.3e} -> {:.3e}, T_err {:.3}%, R_err {:.3} deg",
            trace.len() - 1,
            trace[0].total,
            last.total,
            e.t_err,
            e.r_err
        );
    }
    Ok(())
}
