use std::path::Path;
use std::process::{Command, Output};

use cadpu_core::metrics::chamfer_hausdorff;
use cadpu_data::fixtures::fixture;
use cadpu_data::io::{read_xyz, write_xyz};
use cadpu_data::sample_mesh_uniform;
use cadpu_model::{TrainConfig, TrainState};
use serde_json::Value;
use sha2::{Digest, Sha256};

const TOY: &str = "n_in=32\nepochs=2\nbatch=4\nlift=6\nwidths=4,6,6\nfusion=8\nblocks=2\nexpand=16\nregress=12,8\nd_widths=8,12\nd_head=6\n";

fn cadpu(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cadpu"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cadpu(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.cfg"), TOY).unwrap();
    dir
}

fn full_size_checkpoint(dir: &Path) {
    TrainState::new(TrainConfig::default()).save(&dir.join("full.ckpt")).unwrap();
}

#[test]
fn make_dataset_manifest_is_reproducible() {
    let dir = toy_dir();
    let d = dir.path();
    let hash = |out: &str| {
        ok(d, &["make-dataset", "sphere,cube,saddle", "--config", "toy.cfg", "--seed", "3", "--out", out]);
        Sha256::digest(std::fs::read(d.join(out).join("manifest.json")).unwrap())
    };
    assert_eq!(hash("a"), hash("b"));
    let manifest = json(&d.join("a/manifest.json"));
    for source in ["sphere", "cube", "saddle"] {
        let n = manifest["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|p| p["id"].as_str().unwrap().starts_with(source))
            .count();
        assert!(n >= 3, "{source}: {n}");
    }
}

#[test]
fn make_dataset_usage_and_per_file_errors() {
    let dir = toy_dir();
    let d = dir.path();
    assert_eq!(code(&cadpu(d, &["make-dataset"])), 1);
    assert_eq!(code(&cadpu(d, &["make-dataset", ","])), 1);
    std::fs::write(d.join("broken.ply"), "not a ply\n").unwrap();
    let out = cadpu(d, &["make-dataset", "broken.ply,plane", "--patches", "2", "--config", "toy.cfg", "--out", "ds"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.ply"));
    let manifest = json(&d.join("ds/manifest.json"));
    assert_eq!(manifest["pairs"].as_array().unwrap().len(), 2);
}

#[test]
fn train_resume_and_config_errors() {
    let dir = toy_dir();
    let d = dir.path();
    ok(d, &["make-dataset", "sphere", "--patches", "4", "--config", "toy.cfg", "--out", "ds"]);
    ok(d, &["train", "ds", "--config", "toy.cfg", "--out", "m.ckpt"]);
    let first = json(&d.join("m.log.json"));
    assert_eq!(first["epochs"][1]["step"], 2);
    ok(d, &["train", "ds", "--config", "toy.cfg", "--resume", "m.ckpt", "--out", "m2.ckpt"]);
    let resumed = json(&d.join("m2.log.json"));
    assert_eq!(resumed["epochs"][0]["epoch"], 3);
    assert_eq!(resumed["epochs"][1]["step"], 4);

    std::fs::write(d.join("bad.cfg"), format!("{TOY}learning_rate=0.1\n")).unwrap();
    let out = cadpu(d, &["train", "ds", "--config", "bad.cfg"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    std::fs::write(d.join("wild.cfg"), format!("{TOY}lr_g=1e200\nlr_d=1e200\n")).unwrap();
    let out = cadpu(d, &["train", "ds", "--config", "wild.cfg", "--out", "w.ckpt"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch"));

    assert_eq!(code(&cadpu(d, &["train", "missing", "--config", "toy.cfg"])), 2);
}

#[test]
fn upsample_sizes_and_patch_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    full_size_checkpoint(d);
    let cloud = sample_mesh_uniform(&fixture("sphere").unwrap(), 2048, 1).unwrap().without_normals();
    write_xyz(&d.join("in.xyz"), &cloud).unwrap();
    ok(d, &["upsample", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "8", "--out", "up.xyz"]);
    assert_eq!(read_xyz(&d.join("up.xyz")).unwrap().len(), 8192);
    let first = std::fs::read(d.join("up.xyz")).unwrap();
    ok(d, &["upsample", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "8", "--out", "up.xyz"]);
    assert_eq!(std::fs::read(d.join("up.xyz")).unwrap(), first);
    ok(d, &["upsample", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "8", "--seed", "5", "--out", "up5.xyz"]);
    assert_ne!(std::fs::read(d.join("up5.xyz")).unwrap(), first);

    let small = cloud.select(&(0..300).collect::<Vec<_>>());
    write_xyz(&d.join("small.xyz"), &small).unwrap();
    ok(d, &["upsample", "small.xyz", "--checkpoint", "full.ckpt", "--out", "one.xyz"]);
    assert_eq!(read_xyz(&d.join("one.xyz")).unwrap().len(), 1200);

    let out = cadpu(d, &["upsample", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "3"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("valid --patches: 1, 2, 4, 8"));
    assert_eq!(code(&cadpu(d, &["upsample", "nope.xyz", "--checkpoint", "full.ckpt"])), 2);
    assert_eq!(code(&cadpu(d, &["upsample", "in.xyz", "--checkpoint", "nope.ckpt"])), 2);
}

#[test]
fn non_finite_weights_are_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut state = TrainState::new(TrainConfig::default());
    state.gen.params.get_mut("regress2.b").unwrap().data_mut()[0] = f64::NAN;
    state.save(&d.join("nan.ckpt")).unwrap();
    let cloud = sample_mesh_uniform(&fixture("sphere").unwrap(), 256, 1).unwrap().without_normals();
    write_xyz(&d.join("in.xyz"), &cloud).unwrap();
    let out = cadpu(d, &["upsample", "in.xyz", "--checkpoint", "nan.ckpt"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_reports_distances() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = sample_mesh_uniform(&fixture("saddle").unwrap(), 500, 1).unwrap().without_normals();
    let b = sample_mesh_uniform(&fixture("saddle").unwrap(), 400, 2).unwrap().without_normals();
    write_xyz(&d.join("a.xyz"), &a).unwrap();
    write_xyz(&d.join("b.xyz"), &b).unwrap();
    std::fs::write(d.join("p.xyz"), "0.1 0.2 0.3\n").unwrap();
    std::fs::write(d.join("q.xyz"), "0.1 0.2 0.55\n").unwrap();

    let table = ok(d, &["eval", "a.xyz", "a.xyz", "p.xyz", "q.xyz", "a.xyz", "b.xyz", "--out", "r.json"]);
    assert!(table.contains("x1e-3"));
    let r = json(&d.join("r.json"));
    assert_eq!(r["units"], "1e-3");
    assert_eq!(r["mode"], "direct point-set");
    assert!(r.get("wall_time_s").is_none());
    let rows = r["objects"].as_array().unwrap();
    assert_eq!(rows[0]["cd"], 0.0);
    assert_eq!(rows[0]["hd"], 0.0);
    let shift = 0.55f64 - 0.3;
    assert!((rows[1]["cd"].as_f64().unwrap() - shift * 1e3).abs() < 1e-9);
    assert!((rows[1]["hd"].as_f64().unwrap() - shift * 1e3).abs() < 1e-9);
    let (cd, hd) = chamfer_hausdorff(&a, &b).unwrap();
    assert!((rows[2]["cd"].as_f64().unwrap() - cd * 1e3).abs() < 1e-9);
    assert!((rows[2]["hd"].as_f64().unwrap() - hd * 1e3).abs() < 1e-9);
    let mean_cd = rows.iter().map(|o| o["cd"].as_f64().unwrap()).sum::<f64>() / 3.0;
    assert!((r["mean_cd"].as_f64().unwrap() - mean_cd).abs() < 1e-12);

    ok(d, &["eval", "a.xyz", "b.xyz", "--timing", "--out", "t.json"]);
    assert!(json(&d.join("t.json"))["wall_time_s"].as_f64().is_some());
    assert_eq!(code(&cadpu(d, &["eval", "a.xyz", "b.xyz", "a.xyz"])), 1);
    assert_eq!(code(&cadpu(d, &["eval", "a.xyz", "missing.xyz"])), 2);
}

#[test]
fn sweeps_cover_default_grids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    full_size_checkpoint(d);
    let cloud = sample_mesh_uniform(&fixture("cube").unwrap(), 512, 1).unwrap().without_normals();
    write_xyz(&d.join("in.xyz"), &cloud).unwrap();

    ok(d, &["noise-sweep", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "2", "--out", "noise.json"]);
    let noise = json(&d.join("noise.json"));
    let rows = noise["rows"].as_array().unwrap();
    let stds: Vec<f64> = rows.iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert_eq!(stds, [0.0, 0.001, 0.005, 0.01, 0.02]);
    ok(d, &["upsample", "in.xyz", "--checkpoint", "full.ckpt", "--patches", "2", "--out", "clean.xyz"]);
    ok(d, &["eval", "clean.xyz", "in.xyz", "--out", "clean.json"]);
    assert_eq!(json(&d.join("clean.json"))["objects"][0]["cd"], rows[0]["cd"]);

    ok(d, &["scale-sweep", "cube", "--checkpoint", "full.ckpt", "--out", "scale.json"]);
    let scale = json(&d.join("scale.json"));
    let rows = scale["rows"].as_array().unwrap();
    let patches: Vec<u64> = rows.iter().map(|r| r["patches"].as_u64().unwrap()).collect();
    assert_eq!(patches, [1, 2, 4, 8, 16]);
    assert_eq!(code(&cadpu(d, &["scale-sweep", "cube", "--checkpoint", "full.ckpt", "--sizes", "300"])), 1);
}

#[test]
fn environment_and_help() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cadpu"))
        .args(["eval", "a", "b"])
        .env("CADPU_THREADS", "many")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert_eq!(code(&cadpu(dir.path(), &["--help"])), 0);
    assert_eq!(code(&cadpu(dir.path(), &[])), 1);
    assert_eq!(code(&cadpu(dir.path(), &["frobnicate"])), 1);
}
