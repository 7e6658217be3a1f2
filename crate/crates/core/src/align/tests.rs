use super::*;
use crate::backbone::{simulate_backbone, BackboneNoise, PointMap};
use crate::synth::{bench_scene, generate, SceneGroundTruth};
use nalgebra::{Quaternion, Unit, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v1() -> ViewId {
    ViewId::virtual_view(1, 0).unwrap()
}

fn v2() -> ViewId {
    ViewId::virtual_view(2, 0).unwrap()
}

fn view(id: ViewId, pose: CameraPose, cells: &[usize], k: &Intrinsics, depths: Vec<f64>) -> ViewState {
    let w = k.width as usize;
    ViewState {
        view: id,
        pose,
        cells: cells.to_vec(),
        pixels: cells.iter().map(|c| [(c % w) as f64 + 0.5, (c / w) as f64 + 0.5]).collect(),
        depths,
    }
}

/// Camera at the origin, one pixel on the principal ray at depth 1 and a
/// prediction offset by (3, 4, 0); mirror z = 5 facing the camera.
fn hand_fixture() -> (GlobalState, Vec<PairPrediction>) {
    let k = Intrinsics::centered(100.0, 100.0, 5, 5).unwrap();
    let plane = MirrorPlane::new(Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.0, 0.0, 5.0), FrameTag::World).unwrap();
    let real = CameraPose::identity();
    let vir = reflected_pose(&real, &plane).unwrap();
    let edge = Edge { a: ViewId::REAL, b: v1() };
    let mut state = GlobalState {
        intrinsics: k,
        views: vec![view(ViewId::REAL, real, &[12], &k, vec![1.0]), view(v1(), vir, &[], &k, vec![])],
        edges: [(
            edge,
            EdgeParams {
                pose: CameraPose::identity(),
                log_scale: 0.0,
            },
        )]
        .into_iter()
        .collect(),
        planes: BTreeMap::new(),
        mirror_slots: BTreeMap::new(),
    };
    state.planes.insert(v1(), plane);
    let mut a = PointMap::for_intrinsics(&k, FrameTag::Camera(0));
    a.set((2, 2), [2.5, 2.5], Vector3::new(-3.0, -4.0, 1.0), 1.0);
    let pred = PairPrediction {
        edge,
        pointmap_a: a,
        pointmap_b: PointMap::for_intrinsics(&k, FrameTag::Camera(0)),
        pose_b: vir,
    };
    (state, vec![pred])
}

#[test]
fn pairwise_hand_values() {
    let (state, mut preds) = hand_fixture();
    assert_eq!(pairwise_loss(&state, &preds).unwrap(), 5.0);
    preds[0].pointmap_a.confidence[12] = 2.0;
    assert_eq!(pairwise_loss(&state, &preds).unwrap(), 10.0);
    preds[0].pointmap_a.points[12] = Vector3::new(0.0, 0.0, 1.0);
    assert_eq!(pairwise_loss(&state, &preds).unwrap(), 0.0);
}

#[test]
fn missing_edge_params() {
    let (mut state, preds) = hand_fixture();
    state.edges.clear();
    assert!(matches!(pairwise_loss(&state, &preds), Err(Error::ConfigError(_))));
}

#[test]
fn rot_loss_hand_values() {
    let (mut state, _) = hand_fixture();
    assert!(rot_loss(&state).unwrap() < 1e-15);
    let sym = state.views[1].pose;
    // antipodal quaternion, same rotation
    let mut x = state.params();
    for i in 7..11 {
        x[i] = -x[i];
    }
    state.set_params(&x);
    assert!(rot_loss(&state).unwrap() < 1e-15);
    state.views[1].pose = CameraPose {
        rotation: sym.rotation * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
        translation: sym.translation,
    };
    assert!((rot_loss(&state).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn trans_loss_hand_values() {
    let (mut state, _) = hand_fixture();
    assert!(trans_loss(&state).unwrap() < 1e-24);
    let t = state.views[1].pose.translation;
    state.views[1].pose.translation = t - Vector3::new(1.0, 0.0, 0.0);
    assert!((trans_loss(&state).unwrap() - 1.0).abs() < 1e-12);
    state.views[1].pose.translation = t - Vector3::new(1.0, 2.0, 2.0);
    assert!((trans_loss(&state).unwrap() - 9.0).abs() < 1e-12);
}

#[test]
fn total_loss_hand_values() {
    let (mut state, preds) = hand_fixture();
    let sym = state.views[1].pose;
    state.views[1].pose = CameraPose {
        rotation: sym.rotation * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI),
        translation: sym.translation - Vector3::new(1.0, 2.0, 2.0),
    };
    let b = total_loss(&state, &preds, &LossWeights::default()).unwrap();
    assert!((b.total - 15.0).abs() < 1e-12);
    assert_eq!(b.per_edge, vec![5.0]);
    let no_rot = LossWeights {
        rot: 0.0,
        ..Default::default()
    };
    let b = total_loss(&state, &preds, &no_rot).unwrap();
    assert!((b.total - 14.0).abs() < 1e-12);
    let bad = LossWeights {
        trans: -1.0,
        ..Default::default()
    };
    assert!(matches!(total_loss(&state, &preds, &bad), Err(Error::ConfigError(_))));
}

#[test]
fn zero_state_has_zero_loss() {
    let (mut state, mut preds) = hand_fixture();
    preds[0].pointmap_a.points[12] = Vector3::new(0.0, 0.0, 1.0);
    let b = total_loss(&state, &preds, &LossWeights::default()).unwrap();
    assert!(b.total < 1e-15);
    state.planes.clear();
    assert!(matches!(rot_loss(&state), Err(Error::PlaneUnavailable(1))));
    assert!(matches!(trans_loss(&state), Err(Error::PlaneUnavailable(1))));
}

#[test]
fn symmetry_residual_fixtures() {
    let plane = MirrorPlane::new(Vector3::new(0.0, 0.6, 0.8), Vector3::new(0.3, -1.0, 2.0), FrameTag::World).unwrap();
    let real = CameraPose {
        rotation: UnitQuaternion::from_euler_angles(0.2, -0.4, 0.9),
        translation: Vector3::new(0.5, 1.0, -2.0),
    };
    let vir = reflected_pose(&real, &plane).unwrap();
    let (a, d) = symmetry_residual(&real, &vir, &plane).unwrap();
    assert!(a < 1e-9 && d < 1e-12);

    let turn = CameraPose::from_rotation(
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, -2.0, 0.5)), 5f64.to_radians())
            .to_rotation_matrix()
            .matrix(),
        Vector3::zeros(),
    );
    let (a, _) = symmetry_residual(&real, &turn.compose(&vir), &plane).unwrap();
    assert!((a - 5.0).abs() < 1e-9);

    let delta = 0.05;
    let moved = MirrorPlane {
        point: plane.point + plane.normal * delta,
        ..plane
    };
    let (a, d) = symmetry_residual(&real, &vir, &moved).unwrap();
    assert!(a < 1e-9);
    assert!((d - 2.0 * delta).abs() < 1e-12);
}

fn random_pose(rng: &mut ChaCha8Rng) -> CameraPose {
    let q = Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    CameraPose::new(q, Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
}

/// Three views, two edges, 4×4 pointmaps with random contents.
fn random_fixture(seed: u64) -> (GlobalState, Vec<PairPrediction>, LossWeights) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::centered(50.0, 50.0, 4, 4).unwrap();
    let ids = [ViewId::REAL, v1(), v2()];
    let mut views = Vec::new();
    for id in ids {
        let cells: Vec<usize> = (0..16).filter(|_| rng.random_bool(0.6)).collect();
        let depths = cells.iter().map(|_| rng.random_range(1.0..3.0)).collect();
        let mut v = view(id, random_pose(&mut rng), &cells, &k, depths);
        for p in &mut v.pixels {
            p[0] += rng.random_range(-0.4..0.4);
            p[1] += rng.random_range(-0.4..0.4);
        }
        views.push(v);
    }
    let mut edges = BTreeMap::new();
    let mut preds = Vec::new();
    for (j, b) in [(1usize, v1()), (2, v2())] {
        let edge = Edge { a: ViewId::REAL, b };
        edges.insert(
            edge,
            EdgeParams {
                pose: random_pose(&mut rng),
                log_scale: rng.random_range(-0.3..0.3),
            },
        );
        let mut maps = Vec::new();
        for v in [&views[0], &views[j]] {
            let mut m = PointMap::for_intrinsics(&k, FrameTag::Camera(0));
            for (i, &c) in v.cells.iter().enumerate() {
                let s = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
                m.set((c % 4, c / 4), v.pixels[i], s, rng.random_range(0.2..1.0));
            }
            maps.push(m);
        }
        let pointmap_b = maps.pop().unwrap();
        let pointmap_a = maps.pop().unwrap();
        preds.push(PairPrediction {
            edge,
            pointmap_a,
            pointmap_b,
            pose_b: CameraPose::identity(),
        });
    }
    let mut planes = BTreeMap::new();
    for id in [v1(), v2()] {
        let n = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let p = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        planes.insert(id, MirrorPlane::from_unnormalized(n, p, FrameTag::World).unwrap());
    }
    let state = GlobalState {
        intrinsics: k,
        views,
        edges,
        planes,
        mirror_slots: BTreeMap::new(),
    };
    let weights = LossWeights {
        pair: rng.random_range(0.5..2.0),
        rot: rng.random_range(0.5..2.0),
        trans: rng.random_range(0.5..2.0),
    };
    (state, preds, weights)
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..5 {
        let (state, preds, w) = random_fixture(seed);
        let (_, g) = total_loss_with_gradient(&state, &preds, &w).unwrap();
        let x = state.params();
        let h = 1e-6;
        let mut probe = state.clone();
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            probe.set_params(&xp);
            let fp = total_loss(&probe, &preds, &w).unwrap().total;
            xp[i] -= 2.0 * h;
            probe.set_params(&xp);
            let fm = total_loss(&probe, &preds, &w).unwrap().total;
            let fd = (fp - fm) / (2.0 * h);
            let err = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-2);
            assert!(err < 1e-4, "seed {seed} param {i}: analytic {} fd {fd}", g[i]);
        }
    }
}

fn edge() -> Edge {
    Edge { a: ViewId::REAL, b: v1() }
}

fn noiseless(scene: u64) -> (SceneGroundTruth, Vec<PairPrediction>, GlobalState) {
    let gt = generate(&bench_scene(scene)).unwrap();
    let pred = simulate_backbone(&gt, &edge(), &BackboneNoise::default(), 0).unwrap();
    let state = GlobalState::from_predictions(&gt.intrinsics, &[pred.clone()], &gt.real, Some(&gt.mask)).unwrap();
    (gt, vec![pred], state)
}

#[test]
fn ground_truth_is_a_fixed_point() {
    let (gt, preds, state) = noiseless(0);
    assert!((state.pose(v1()).unwrap().translation - gt.virtual_pose.translation).norm() < 1e-12);
    let (out, trace) = optimize(&state, &preds, &AlignConfig::default()).unwrap();
    assert!(trace.len() <= 2);
    assert!(trace.last().unwrap().total < 1e-12);
    for row in &trace {
        assert!(row.rot < 1e-12 && row.trans < 1e-12);
    }
    assert!(rotation_angle(&out.pose(v1()).unwrap().rotation, &gt.virtual_pose.rotation) < 1e-9);
}

#[test]
fn perturbed_virtual_pose_converges() {
    let (gt, preds, mut state) = noiseless(1);
    let j = state.view_index(v1()).unwrap();
    let kick = CameraPose {
        rotation: UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::new(0.3, 1.0, -0.2)), 10f64.to_radians()),
        translation: Vector3::new(0.06, -0.08, 0.0),
    };
    state.views[j].pose = kick.compose(&state.views[j].pose);
    let (out, trace) = optimize(&state, &preds, &AlignConfig::default()).unwrap();
    for w in trace.windows(2) {
        assert!(w[1].total <= w[0].total);
    }
    let (a, d) = symmetry_residual(&out.pose(ViewId::REAL).unwrap(), &out.pose(v1()).unwrap(), &gt.plane).unwrap();
    assert!(a < 0.5 && d < 0.005, "residual {a} deg, {d}");
}

#[test]
fn two_edge_scales_and_gauge() {
    let gt = generate(&bench_scene(2)).unwrap();
    let noise = BackboneNoise {
        scale: 0.2,
        ..Default::default()
    };
    let back = Edge { a: v1(), b: ViewId::REAL };
    let edges = [edge(), back];
    let clean: Vec<_> = edges.iter().map(|e| simulate_backbone(&gt, e, &BackboneNoise::default(), 5).unwrap()).collect();
    let preds: Vec<_> = edges.iter().map(|e| simulate_backbone(&gt, e, &noise, 5).unwrap()).collect();
    let s: Vec<f64> = (0..2)
        .map(|i| preds[i].pose_b.translation.norm() / clean[i].pose_b.translation.norm())
        .collect();
    assert!((s[0] - s[1]).abs() > 0.01);

    // ground-truth geometry with σ_e = 1/s_e (and t_e rescaled to match) explains both pairs exactly
    let mut exact = GlobalState::from_predictions(&gt.intrinsics, &clean, &gt.real, Some(&gt.mask)).unwrap();
    for (e, si) in edges.iter().zip(&s) {
        let p = exact.edges.get_mut(e).unwrap();
        p.log_scale = -si.ln();
        p.pose.translation *= *si;
    }
    assert!(pairwise_loss(&exact, &preds).unwrap() < 1e-9);
    exact.edges.get_mut(&back).unwrap().log_scale += 0.05;
    assert!(pairwise_loss(&exact, &preds).unwrap() > 1e-3);

    let state = GlobalState::from_predictions(&gt.intrinsics, &preds, &gt.real, Some(&gt.mask)).unwrap();
    let cfg = AlignConfig {
        use_sym: false,
        max_iters: 100,
        ..Default::default()
    };
    let (out, trace) = optimize(&state, &preds, &cfg).unwrap();
    for w in trace.windows(2) {
        assert!(w[1].total <= w[0].total);
    }
    assert!(trace.last().unwrap().total < trace[0].total);
    let sum: f64 = out.edges.values().map(|e| e.log_scale).sum();
    assert!(sum.abs() < 1e-12);
    for v in &out.views {
        assert!((v.pose.rotation.norm() - 1.0).abs() < 1e-12);
    }
    for e in out.edges.values() {
        assert!((e.pose.rotation.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn config_json_round_trip() {
    let cfg = AlignConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    for key in ["max_iters", "lr", "tol", "lambda_pair", "lambda_rot", "lambda_trans", "use_sym", "plane_refresh_every", "seed"] {
        assert!(text.contains(key), "{key}");
    }
    assert_eq!(serde_json::from_str::<AlignConfig>(&text).unwrap(), cfg);
    let partial: AlignConfig = serde_json::from_str(r#"{"max_iters": 5, "use_sym": false}"#).unwrap();
    assert_eq!(partial.max_iters, 5);
    assert!(!partial.use_sym);
    assert!(AlignConfig { max_iters: 0, ..cfg }.validate().is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn breakdown_adds_up(seed in any::<u64>()) {
            let (state, preds, w) = random_fixture(seed);
            let b = total_loss(&state, &preds, &w).unwrap();
            prop_assert!(b.pairwise >= 0.0 && b.rot >= 0.0 && b.trans >= 0.0);
            let sum = w.pair * b.pairwise + w.rot * b.rot + w.trans * b.trans;
            prop_assert!((b.total - sum).abs() <= 1e-12 * b.total.max(1.0));
            prop_assert!((b.per_edge.iter().sum::<f64>() - b.pairwise).abs() <= 1e-12 * b.pairwise.max(1.0));
        }

        #[test]
        fn pairwise_is_linear_in_confidence(seed in any::<u64>(), c in 0.1..10.0f64) {
            let (state, mut preds, _) = random_fixture(seed);
            let base = pairwise_loss(&state, &preds).unwrap();
            for p in &mut preds {
                for m in [&mut p.pointmap_a, &mut p.pointmap_b] {
                    m.confidence.iter_mut().for_each(|o| *o *= c);
                }
            }
            let scaled = pairwise_loss(&state, &preds).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-10 * scaled.max(1.0));
        }

        #[test]
        fn optimizer_keeps_gauge_and_monotone_trace(seed in any::<u64>()) {
            let (state, preds, _) = random_fixture(seed);
            let cfg = AlignConfig { max_iters: 20, ..Default::default() };
            let (out, trace) = optimize(&state, &preds, &cfg).unwrap();
            for w in trace.windows(2) {
                prop_assert!(w[1].total <= w[0].total);
            }
            let sum: f64 = out.edges.values().map(|e| e.log_scale).sum();
            prop_assert!(sum.abs() < 1e-12);
            for q in out.views.iter().map(|v| v.pose.rotation).chain(out.edges.values().map(|e| e.pose.rotation)) {
                prop_assert!((q.norm() - 1.0).abs() < 1e-12);
            }
            let (a, b) = (out.view(ViewId::REAL).unwrap().pose, state.view(ViewId::REAL).unwrap().pose);
            prop_assert!((a.rotation.coords - b.rotation.coords).norm() < 1e-15);
            prop_assert_eq!(a.translation, b.translation);
        }
    }
}
