use std::path::Path;
use std::process::{Command, Output};

use mirror_stereo::synth;

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirror-stereo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen_one(dir: &Path) {
    std::fs::write(
        dir.join("spec.json"),
        serde_json::to_string(&synth::bench_scene(6)).unwrap(),
    )
    .unwrap();
    let o = cli(&["generate", "--spec", "spec.json", "--out", "scene"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn preset_writes_sixteen_scenes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli(&["generate", "--preset", "bench16", "--out", "bench"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(tmp.path().join("bench"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 16);
    assert_eq!(names[0], "scene_00");
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 16);
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), "{ not json").unwrap();
    let o = cli(&["generate", "--spec", "bad.json", "--out", "x"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json"));
    let o = cli(&["reconstruct", "x", "--out", "y", "--config", "bad.json"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = cli(&["reconstruct", "x", "--out", "y", "--noise-pose", "5"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = cli(&["generate", "--preset", "nope", "--out", "x"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn corrupted_ply_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    let ply = tmp.path().join("scene/cloud.ply");
    let text = std::fs::read_to_string(&ply).unwrap();
    let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect::<String>() + "1.0 oops\n";
    std::fs::write(&ply, cut).unwrap();
    let o = cli(&["reconstruct", "scene", "--out", "rec"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cloud.ply"), "{}", stderr(&o));
}

#[test]
fn missing_mask_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    std::fs::remove_file(tmp.path().join("scene/mask.pgm")).unwrap();
    let o = cli(&["reconstruct", "scene", "--out", "rec"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("mask.pgm"));
}

#[test]
fn numerical_failure_exits_4_with_trace() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    let dir = tmp.path().join("scene");
    let mut gt = synth::import(&dir).unwrap();
    // push one directly seen point out along its pixel ray until the
    // squared residuals overflow
    let c = gt.real.center();
    let i = gt.real_view()[0].index;
    gt.points[i] = c + (gt.points[i] - c) * 1e200;
    synth::export(&gt, &dir).unwrap();
    let o = cli(&["reconstruct", "scene", "--out", "rec", "--noise-point", "0"], tmp.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let trace = std::fs::read_to_string(tmp.path().join("rec/trace.csv")).unwrap();
    assert!(trace.starts_with("iter,pairwise,rot,trans,total,step\n"));
    assert!(trace.lines().count() >= 2);
}

#[test]
fn evaluate_ground_truth_copy() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    let copy = tmp.path().join("copy");
    std::fs::create_dir(&copy).unwrap();
    std::fs::copy(tmp.path().join("scene/cloud.ply"), copy.join("cloud.ply")).unwrap();
    let o = cli(&["evaluate", "copy", "scene"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(copy.join("metrics.json")).unwrap()).unwrap();
    for key in ["completeness", "accuracy", "f1"] {
        assert_eq!(m["metrics"][key], 100.0);
    }
    assert_eq!(m["metrics"]["chamfer"], 0.0);
    assert!(m["pose"].is_null());
    let md = std::fs::read_to_string(copy.join("metrics.md")).unwrap();
    assert!(md.starts_with("| Method | Comp. % | Accuracy % | F1 % | Chamfer |"));
}

#[test]
fn accuracy_grows_with_tau() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    let o = cli(&["reconstruct", "scene", "--out", "rec", "--max-iters", "50"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut last = -1.0;
    for tau in ["0.002", "0.01", "0.05", "0.2"] {
        let o = cli(&["evaluate", "rec", "scene", "--tau", tau], tmp.path());
        assert_eq!(code(&o), 0);
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join("rec/metrics.json")).unwrap()).unwrap();
        let acc = m["metrics"]["accuracy"].as_f64().unwrap();
        assert!(acc >= last);
        last = acc;
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    gen_one(tmp.path());
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"optimizer": {"max_iters": 3, "use_sym": true}, "noise": {"point": 0.0}}"#,
    )
    .unwrap();
    let o = cli(&["reconstruct", "scene", "--out", "a", "--config", "cfg.json"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = std::fs::read_to_string(tmp.path().join("a/trace.csv")).unwrap().lines().count();
    assert!(rows <= 5);
    let o = cli(
        &["reconstruct", "scene", "--out", "b", "--config", "cfg.json", "--max-iters", "1", "--no-sym"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let trace = std::fs::read_to_string(tmp.path().join("b/trace.csv")).unwrap();
    assert!(trace.lines().count() <= 3);
    for line in trace.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[1], v[4]);
    }
}
