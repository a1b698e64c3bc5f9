use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spikerx::receiver::ModelConfig;
use spikerx_cli::commands::PlotRow;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spikerx"));
    c.env_remove("SPIKERX_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn spikerx")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A run small enough for debug-speed CI.
fn tiny_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "seed": 3,
        "link": { "subcarriers": 8 },
        "model": { "channels": 8, "blocks": 1 },
        "train": { "steps": 4, "batch_size": 2, "log_every": 1, "checkpoint_every": 2 },
        "output_dir": dir.join("run").to_str().unwrap(),
    });
    let path = dir.join("tiny.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn train_tiny(tmp: &TempDir, out: &str) -> PathBuf {
    let cfg = tiny_config(tmp.path());
    let dir = tmp.path().join(out);
    let o = run(&["train", "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir
}

fn strip_wallclock(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn missing_config_file_exits_2() {
    let o = run(&["train", "--config", "/nonexistent/spikerx.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_steps_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["train", "--steps", "0", "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("steps"));
}

#[test]
fn bad_override_names_field_path() {
    let o = run(&["train", "--model.channels", "lots", "--steps", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("model.channels"), "{}", stderr(&o));
    let o = run(&["train", "--model.chanels", "8"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn smoke_train_writes_run_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = train_tiny(&tmp, "smoke");
    assert!(dir.join("config.json").is_file());
    assert!(dir.join("model.ckpt").is_file());
    assert!(dir.join("checkpoints/step_2.ckpt").is_file());
    assert!(dir.join("checkpoints/step_4.ckpt").is_file());
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next(), Some("step,loss,lr,wallclock"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn exploding_learning_rate_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("boom").to_str().unwrap(),
        "--train.lr",
        "1e300",
        "--steps",
        "6",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn eval_with_baselines_row_count_and_tamper() {
    let tmp = TempDir::new().unwrap();
    let dir = train_tiny(&tmp, "ev");
    let ckpt = dir.join("model.ckpt");
    let ber = tmp.path().join("ber.csv");
    let o = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--snr",
        "0:20:2",
        "--trials",
        "2",
        "--with-baselines",
        "--out",
        ber.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&ber).unwrap();
    assert_eq!(text.lines().count(), 1 + 11 * 4);

    let sidecar = PathBuf::from(format!("{}.json", ckpt.display()));
    let mut side: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sidecar).unwrap()).unwrap();
    side["model"]["channels"] = serde_json::json!(12);
    fs::write(&sidecar, side.to_string()).unwrap();
    let o = run(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--snr", "10", "--trials", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn baseline_rows_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("b{i}.csv"));
        let o = run(&[
            "baseline",
            "--config",
            cfg.to_str().unwrap(),
            "--snr",
            "0,10",
            "--trials",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 1 + 2 * 3);
}

#[test]
fn train_and_eval_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = train_tiny(&tmp, "a");
    let b = train_tiny(&tmp, "b");
    let read = |d: &Path, f: &str| fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(strip_wallclock(&read(&a, "metrics.csv")), strip_wallclock(&read(&b, "metrics.csv")));
    assert_eq!(fs::read(a.join("model.ckpt")).unwrap(), fs::read(b.join("model.ckpt")).unwrap());

    // config.json of a run reproduces it.
    let c = tmp.path().join("c");
    let o = run(&[
        "train",
        "--config",
        a.join("config.json").to_str().unwrap(),
        "--out-dir",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(strip_wallclock(&read(&a, "metrics.csv")), strip_wallclock(&read(&c, "metrics.csv")));

    for d in [&a, &b] {
        let o = run(&["eval", "--checkpoint", d.join("model.ckpt").to_str().unwrap(), "--snr", "5,15", "--trials", "2"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(read(&a, "ber.csv"), read(&b, "ber.csv"));
}

#[test]
fn seed_env_fallback() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let o = bin()
        .args(["train", "--steps", "1", "--model.channels", "8", "--model.blocks", "1", "--link.subcarriers", "4"])
        .args(["--train.batch_size", "1", "--out-dir", out.to_str().unwrap()])
        .env("SPIKERX_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 77);
}

#[test]
fn profile_reports_layers_and_params() {
    let tmp = TempDir::new().unwrap();
    let dir = train_tiny(&tmp, "p");
    let o = run(&["profile", "--checkpoint", dir.join("model.ckpt").to_str().unwrap(), "--batch", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let s = &summary["summary"];
    let cfg: ModelConfig = serde_json::from_value(
        serde_json::from_str::<serde_json::Value>(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap()
            ["model"]
            .clone(),
    )
    .unwrap();
    assert_eq!(s["params"], cfg.param_count());
    assert_eq!(summary["stored_params"], cfg.param_count());
    let layers: Vec<String> = s["activation_pct"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_str().unwrap().to_string())
        .collect();
    assert_eq!(layers, ["encoder.lif", "block0.lif1", "block0.lif2", "block0.out"]);
    let r_s = s["mean_r_s"].as_f64().unwrap();
    let ratio = s["ann_over_snn"].as_f64().unwrap();
    let threshold = spikerx::energy::E_MAC_32 / spikerx::energy::E_AC_32;
    if r_s < threshold {
        assert!(ratio > 1.0, "R_s {r_s} ratio {ratio}");
    }
    assert!(dir.join("profile.csv").is_file() && dir.join("profile_ann.csv").is_file());
}

#[test]
fn ablate_timesteps_shares_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("abl");
    let o = run(&[
        "ablate",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "timesteps",
        "--snr",
        "10",
        "--trials",
        "2",
        "--out-dir",
        out.to_str().unwrap(),
        "--train.steps",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("ablation.csv")).unwrap();
    let rows: Vec<spikerx_cli::commands::AblationRow> = r.deserialize().map(|x| x.unwrap()).collect();
    assert_eq!(rows.iter().map(|r| r.variant.as_str()).collect::<Vec<_>>(), ["1", "2", "4"]);
    assert!(rows.iter().all(|r| r.seed == 3));
    assert!(out.join("timesteps/4/model.ckpt").is_file());
    let o = run(&["ablate", "--axis", "width"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plotdata_merges_and_sorts() {
    let tmp = TempDir::new().unwrap();
    let a = train_tiny(&tmp, "pa");
    let b = train_tiny(&tmp, "pb");
    let o = run(&["eval", "--checkpoint", a.join("model.ckpt").to_str().unwrap(), "--snr", "20,0,10", "--trials", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let single = tmp.path().join("single.csv");
    let o = run(&["plotdata", b.to_str().unwrap(), "--out", single.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let metric_points = fs::read_to_string(b.join("metrics.csv")).unwrap().lines().count() - 1;
    assert_eq!(fs::read_to_string(&single).unwrap().lines().count() - 1, metric_points);

    let ab = tmp.path().join("ab.csv");
    let ba = tmp.path().join("ba.csv");
    run(&["plotdata", a.to_str().unwrap(), b.to_str().unwrap(), "--out", ab.to_str().unwrap()]);
    run(&["plotdata", b.to_str().unwrap(), a.to_str().unwrap(), "--out", ba.to_str().unwrap()]);
    assert_eq!(fs::read(&ab).unwrap(), fs::read(&ba).unwrap());

    let mut r = csv::Reader::from_path(&ab).unwrap();
    let rows: Vec<PlotRow> = r.deserialize().map(|x| x.unwrap()).collect();
    let ber: Vec<f64> = rows.iter().filter(|r| r.figure == "ber").map(|r| r.x).collect();
    assert_eq!(ber, [0.0, 10.0, 20.0]);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = run(&["plotdata", empty.to_str().unwrap(), "--out", tmp.path().join("e.csv").to_str().unwrap()]);
    assert_ne!(code(&o), 0);
}

#[test]
fn generated_dataset_trains() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let data = tmp.path().join("d.bin");
    let o = run(&["gen-dataset", "--config", cfg.to_str().unwrap(), "--count", "4", "--out", data.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = tmp.path().join("fromdata");
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--link.subcarriers",
        "16",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}
