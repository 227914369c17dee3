//! End-to-end checks of the `golden-sgd` command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_golden-sgd"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "optimizer": "sgd",
  "eta_list": [0.016, 0.1],
  "momentum_list": [0.874],
  "fractions": [1.0],
  "seeds": 1,
  "epochs": 1,
  "batch_size": 32,
  "dataset": { "source": "synthetic", "train": 120, "val": 60, "test": 60 }
}"#,
    )
    .unwrap();
    path
}

#[test]
fn constants_prints_table_and_json() {
    let out = bin().arg("constants").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("golden"));
    assert!(text.contains("alpha"));
    assert!(text.contains("eta"));
    let json_line = text.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(
        v["golden"].as_f64().unwrap(),
        golden_sgd::bayes::golden_ratio()
    );
    assert_eq!(
        v["alpha"].as_f64().unwrap(),
        golden_sgd::bayes::momentum_alpha()
    );
    assert_eq!(v["eta"].as_f64().unwrap(), golden_sgd::bayes::learning_eta());
    // keys appear in the documented order
    let gi = json_line.find("\"golden\"").unwrap();
    let ai = json_line.find("\"alpha\"").unwrap();
    let ei = json_line.find("\"eta\"").unwrap();
    assert!(gi < ai && ai < ei);
}

#[test]
fn grid_report_plot_noise_pipeline() {
    let dir = tmp("cli-pipeline");
    let config = tiny_config(&dir);
    let runs = dir.join("runs");

    let out = bin()
        .args(["grid", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&runs)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let jsonl = std::fs::read_to_string(runs.join("runs.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2);
    let csv = std::fs::read_to_string(runs.join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("optimizer,eta,momentum,fraction,seed,"));
    assert!(runs.join("heatmap.svg").is_file());
    assert!(runs.join("config.json").is_file());
    // checkpoints: one per non-diverged run, referenced by the records
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if !v["diverged"].as_bool().unwrap() {
            let name = v["checkpoint"].as_str().unwrap();
            assert!(runs.join(name).is_file(), "missing checkpoint {name}");
        }
    }

    let out = bin().args(["report", "--runs"]).arg(&runs).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("best by validation loss"));
    assert!(text.contains("sample-mean over the full validation split"));
    assert!(text.contains("sampled independently per test image"));

    let svg_path = dir.join("replot.svg");
    let out = bin()
        .args(["plot", "--runs"])
        .arg(&runs)
        .arg("--out")
        .arg(&svg_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));

    let out = bin()
        .args(["noise-eval", "--runs"])
        .arg(&runs)
        .args(["--levels", "0,10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("noise robustness"));
    assert!(runs.join("noise_eval.json").is_file());

    // omitting --levels falls back to the config's noise_levels
    let out = bin().args(["noise-eval", "--runs"]).arg(&runs).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("5.0%"));
    // audit manifests alongside sample images per level
    for level in ["0", "10"] {
        let level_dir = runs.join("noise").join(format!("level-{level}"));
        assert!(level_dir.join("noise_manifest.json").is_file());
        assert!(level_dir.join("sample-images-idx3-ubyte").is_file());
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(level_dir.join("noise_manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["mode"], "pixel-flip");
    }
}

#[test]
fn train_emits_single_record() {
    let dir = tmp("cli-train");
    let config = tiny_config(&dir);
    let out = bin()
        .args(["train", "--config"])
        .arg(&config)
        .args(["--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["optimizer"], "sgd");
    assert_eq!(v["eta"].as_f64().unwrap(), 0.016);
    assert_eq!(v["seed_idx"].as_u64().unwrap(), 1);
    assert!(v["val_losses"].as_array().unwrap().len() == 1);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tmp("cli-badcfg");
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"epochs": 2, "warp_speed": 9}"#).unwrap();
    let out = bin().args(["train", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warp_speed"), "stderr: {err}");
}

#[test]
fn synthetic_fallback_is_announced() {
    let dir = tmp("cli-fallback");
    let config = tiny_config(&dir);
    let out = bin()
        .args(["train", "--config"])
        .arg(&config)
        .env_remove("GOLDEN_SGD_DATA")
        .output()
        .unwrap();
    assert!(out.status.success());
    // explicit synthetic source trains without a notice; auto mode logs one
    let auto_cfg = dir.join("auto.json");
    std::fs::write(
        &auto_cfg,
        r#"{"eta_list": [0.016], "momentum_list": [0.0], "fractions": [1.0],
            "seeds": 1, "epochs": 1, "batch_size": 32,
            "dataset": {"source": "auto", "train": 60, "val": 30, "test": 30}}"#,
    )
    .unwrap();
    let out = bin()
        .args(["train", "--config"])
        .arg(&auto_cfg)
        .env_remove("GOLDEN_SGD_DATA")
        .output()
        .unwrap();
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("synthetic"), "stderr: {err}");
}

#[test]
fn env_var_points_at_idx_data() {
    use golden_sgd::data::idx::{write_idx_images, write_idx_labels};
    use golden_sgd::data::GrayImage;
    let dir = tmp("cli-idx");
    // 400 train images so the 90/10 split leaves room for the request
    let imgs: Vec<GrayImage> = (0..400)
        .map(|i| GrayImage::new(28, 28, vec![(i % 256) as u8; 784]))
        .collect();
    let labels: Vec<u8> = (0..400).map(|i| (i % 10) as u8).collect();
    std::fs::write(dir.join("train-images-idx3-ubyte"), write_idx_images(&imgs)).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), write_idx_labels(&labels)).unwrap();
    std::fs::write(
        dir.join("t10k-images-idx3-ubyte"),
        write_idx_images(&imgs[..100]),
    )
    .unwrap();
    std::fs::write(
        dir.join("t10k-labels-idx1-ubyte"),
        write_idx_labels(&labels[..100]),
    )
    .unwrap();

    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{"eta_list": [0.016], "momentum_list": [0.0], "fractions": [1.0],
            "seeds": 1, "epochs": 1, "batch_size": 32,
            "dataset": {"source": "auto", "train": 100, "val": 40, "test": 50}}"#,
    )
    .unwrap();
    let out = bin()
        .args(["train", "--config"])
        .arg(&config)
        .env("GOLDEN_SGD_DATA", &dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("idx-file"), "stderr: {err}");
}
