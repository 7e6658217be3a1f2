use super::*;
use crate::metrics::chamfer;
use crate::synth::bench_scene;

fn noiseless() -> PipelineConfig {
    PipelineConfig {
        noise: NoiseConfig::none(),
        ..Default::default()
    }
}

#[test]
fn config_json() {
    let cfg = PipelineConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<PipelineConfig>(&text).unwrap(), cfg);
    let partial: PipelineConfig =
        serde_json::from_str(r#"{"backbone": "triangulate", "noise": {"px": 0.25}, "optimizer": {"use_sym": false}}"#).unwrap();
    assert_eq!(partial.backbone, BackboneMode::Triangulate);
    assert_eq!(partial.noise.px, 0.25);
    assert_eq!(partial.noise.point, 0.01);
    assert!(!partial.optimizer.use_sym);
    assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    assert!(PipelineConfig { tau: 0.0, ..cfg.clone() }.validate().is_err());
    assert!(PipelineConfig { ablate_seeds: 0, ..cfg }.validate().is_err());
}

#[test]
fn seeds_are_mixed_per_scene() {
    let seeds: std::collections::BTreeSet<u64> = (0..16).flat_map(|s| (0..50).map(move |k| mix_seed(s, k))).collect();
    assert_eq!(seeds.len(), 800);
    assert_eq!(mix_seed(3, 7), mix_seed(3, 7));
}

#[test]
fn presets() {
    let p = preset("bench16").unwrap();
    assert_eq!(p.len(), 16);
    assert_eq!(p[15].0, "scene_15");
    assert_eq!(p[15].1.seed, 15);
    assert!(matches!(preset("bench17"), Err(Error::ConfigError(_))));
}

#[test]
fn noiseless_reconstruction_matches_ground_truth() {
    let gt = generate(&bench_scene(4)).unwrap();
    let mut trace = Vec::new();
    let state = reconstruct(&gt, None, &noiseless(), 0, &mut trace).unwrap();
    let fused = fused_cloud(&state);
    let truth: Vec<_> = gt
        .points
        .iter()
        .zip(&gt.labels)
        .map(|(p, l)| (*p, *l))
        .collect();
    let c = chamfer(&scoring_cloud(&fused), &scoring_cloud(&truth)).unwrap();
    assert!(c < 1e-6, "chamfer {c}");
    // mirror points sit on the estimated plane
    let plane = state.planes.values().next().unwrap();
    let on_mirror: Vec<_> = fused.iter().filter(|(_, l)| l.is_mirror_surface()).collect();
    assert!(on_mirror.len() > 100);
    for (p, _) in on_mirror {
        assert!(plane.signed_distance(p).abs() < 1e-9);
    }
}

#[test]
fn sym_flag_zeroes_symmetry_weights() {
    let gt = generate(&bench_scene(0)).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.optimizer.use_sym = false;
    cfg.optimizer.max_iters = 5;
    let mut trace = Vec::new();
    reconstruct(&gt, None, &cfg, 1, &mut trace).unwrap();
    for row in &trace {
        assert_eq!(row.total, row.pairwise);
    }
}

#[test]
fn scene_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let summary = generate_scene(&bench_scene(1), &dir, 0.5, 0).unwrap();
    assert_eq!(summary.seed, 1);
    assert!(summary.correspondences > 0 && summary.correspondences <= summary.both);
    let out = tmp.path().join("r");
    let cfg = PipelineConfig {
        backbone: BackboneMode::Triangulate,
        ..Default::default()
    };
    let rec = reconstruct_dir(&dir, &out, &cfg).unwrap();
    assert!(rec.trace.len() >= 2);
    for f in ["cloud.ply", "poses.json", "trace.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let eval = evaluate_dirs(&out, &dir, 0.01).unwrap();
    let pose = eval.pose.unwrap();
    assert!(pose.r_err < 1.0 && !pose.absolute);
    assert!(out.join("metrics.md").exists());
}

#[test]
fn missing_inputs_are_prerequisites() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    generate_scene(&bench_scene(2), &dir, 0.0, 0).unwrap();
    std::fs::remove_file(dir.join("corrs.csv")).unwrap();
    let tri = PipelineConfig {
        backbone: BackboneMode::Triangulate,
        ..Default::default()
    };
    let e = reconstruct_dir(&dir, &tmp.path().join("r"), &tri).unwrap_err();
    assert!(matches!(e, Error::MissingInput(_)) && e.exit_code() == 3);
    std::fs::remove_file(dir.join("mask.pgm")).unwrap();
    let e = reconstruct_dir(&dir, &tmp.path().join("r"), &PipelineConfig::default()).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("mask.pgm"));
}

#[test]
fn single_scene_ablation_is_well_formed() {
    let scenes = vec![("one".to_string(), generate(&bench_scene(3)).unwrap())];
    let report = ablate(&scenes, &PipelineConfig::default()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(!report.degenerate_fixture);
    let md = report.markdown();
    assert!(md.contains("| w/o sym-loss |") && md.contains("| w/ sym-loss |"));
    assert!((0.0..=1.0).contains(&report.win_rate));

    let flat = ablate(&scenes, &noiseless()).unwrap();
    assert!(flat.degenerate_fixture);
    assert!(flat.markdown().contains("degenerate fixture"));
}
