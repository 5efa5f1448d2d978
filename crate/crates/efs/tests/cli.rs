use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn efs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run efs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = efs(dir, args);
    assert!(
        out.status.success(),
        "efs {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    efs(dir, args).status.code().unwrap()
}

#[test]
fn stage_by_stage_pipeline() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--seed", "3", "--out", "scene"]);
    for f in ["scene/scene.hdr", "scene/scene.bin", "scene/truth.map.bin", "scene/truth.legend.csv", "scene/samples.csv", "scene/scene.spec"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let stats = ok(d, &["stats", "--samples", "scene/samples.csv"]);
    assert_eq!(stats.matches("mean").count(), 5);

    let ranking = ok(d, &["rank", "--samples", "scene/samples.csv", "--index", "transformed_divergence", "--k", "2"]);
    assert_eq!(ranking.lines().count(), 16);
    let top: Vec<String> = ranking
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();

    for (i, bands) in top.iter().enumerate() {
        let model = format!("m{i}.txt");
        ok(d, &["train", "--samples", "scene/samples.csv", "--bands", bands, "--out", &model]);
        ok(d, &["classify", "--model", &model, "--image", "scene/scene.hdr", "--out", &format!("map{i}")]);
    }
    ok(d, &["fuse", "--width", "40", "--height", "40", "--map", "map0", "map1", "map2", "--out", "fused"]);
    let eval = ok(d, &["evaluate", "--width", "40", "--height", "40", "--reference", "scene/truth", "--map", "map0", "map1", "map2", "fused"]);
    assert!(eval.starts_with("map,accuracy,kappa\n"));
    assert!(eval.contains("diversity mean"));

    let pred = ok(d, &["classify", "--model", "m0.txt", "--samples", "scene/samples.csv", "--out", "pred.csv"]);
    assert!(pred.starts_with("accuracy "));
    assert_eq!(fs::read_to_string(d.join("pred.csv")).unwrap().lines().count(), 1601);
}

#[test]
fn experiment_and_report_commands() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("exp.conf"), "scene = builtin\nseed = 2\nplan = b:2, d:3, none:5\noutput = first\n").unwrap();
    let summary = ok(d, &["experiment", "--config", "exp.conf", "-m", "3"]);
    assert!(summary.contains("correlation accuracy vs diversity mean"));
    assert!(summary.contains("ensembles: 3"));

    ok(d, &["experiment", "--config", "exp.conf", "-m", "3", "--output", "second"]);
    for f in ["report_ensembles.csv", "report_ztests.csv", "plot_diversity_accuracy.csv", "summary.txt", "test_predictions.csv"] {
        assert_eq!(fs::read(d.join("first").join(f)).unwrap(), fs::read(d.join("second").join(f)).unwrap(), "{f}");
    }

    ok(d, &["report", "--dir", "first", "--out", "rebuilt"]);
    for f in ["report_ensembles.csv", "report_kappas.csv", "report_ztests.csv", "plot_diversity_accuracy.csv", "summary.txt"] {
        assert_eq!(fs::read(d.join("first").join(f)).unwrap(), fs::read(d.join("rebuilt").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, &["experiment", "--plan", "nonsense:2", "--output", "x"]), 2);
    assert_eq!(code(d, &["experiment", "--plan", "divergence:9", "--output", "x"]), 2);
    assert_eq!(code(d, &["experiment", "--config", "missing.conf"]), 2);
    assert_eq!(code(d, &["train", "--samples", "nope.csv", "--out", "m.txt", "--c", "-1"]), 2);
    assert_eq!(code(d, &["stats", "--samples", "nope.csv"]), 3);
    fs::write(d.join("bad.csv"), "band_1,band_2,label\n1,a\n").unwrap();
    assert_eq!(code(d, &["stats", "--samples", "bad.csv"]), 3);
    assert_eq!(code(d, &["no-such-command"]), 2);
}
