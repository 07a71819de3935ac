use std::path::Path;
use std::process::{Command, Output};

use cae::idx;
use cae::weights;
use cae_core::dataset::ImageSet;
use cae_core::model::{build_table1_network, init_parameters, DEFAULT_PROFILE};

fn cae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cae"))
        .args(args)
        .env("CAE_NO_COLOR", "1")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_images(dir: &Path, count: usize) -> String {
    let pixels = (0..count * 784).map(|i| (i * 37 % 251) as u8).collect();
    let set = ImageSet::new(count, 28, 28, pixels).unwrap();
    let path = dir.join("images.idx");
    std::fs::write(&path, idx::save_idx_images(&set)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_input_fails_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = cae(&[
        "train",
        "--images",
        "/no/such/images.idx",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/no/such/images.idx"), "{}", stderr(&o));
}

#[test]
fn bad_config_fails_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"train": {"epochz": 2}}"#).unwrap();
    let o = cae(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("run.json") && e.contains("epochz"), "{e}");
}

#[test]
fn zero_learning_rate_writes_the_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(dir.path(), 20);
    let out = dir.path().join("o");
    let o = cae(&[
        "train",
        "--images",
        &images,
        "--epochs",
        "1",
        "--lr",
        "0",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let init = init_parameters(&build_table1_network(&DEFAULT_PROFILE).unwrap(), 4);
    assert_eq!(std::fs::read(out.join("weights.caew")).unwrap(), weights::encode(&init));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("train_report.json")).unwrap()).unwrap();
    assert_eq!(report["train_pairs"], 16);
    assert_eq!(report["config"]["seed"], 4);
}

#[test]
fn simulate_reports_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = cae(&["simulate", "--synthetic", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("21.12(GOP/s)") && stdout.contains("Simulated"),
        "{stdout}"
    );
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("sim_report.json")).unwrap()).unwrap();
    assert_eq!(r["elements_emitted"], 784);
    assert_eq!(r["output_done"], true);
    assert_eq!(
        r["mac_ops"].as_u64().unwrap() * 2 + r["aux_ops"].as_u64().unwrap(),
        r["network_ops"].as_u64().unwrap()
    );
    let trace = std::fs::read_to_string(out.join("trace.txt")).unwrap();
    assert!(trace
        .lines()
        .next()
        .unwrap()
        .starts_with("cycle=0 unit=distributor event=push"));
}

#[test]
fn out_of_range_index_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(dir.path(), 3);
    let o = cae(&[
        "simulate",
        "--images",
        &images,
        "--index",
        "3",
        "--out",
        dir.path().join("s").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("index 3"), "{}", stderr(&o));
}

#[test]
fn selftest_exit_codes() {
    let ok = cae(&["selftest"]);
    assert!(ok.status.success());
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6, "{text}");
    let forced = cae(&["selftest", "--force-fail"]);
    assert_eq!(forced.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&forced.stdout).contains("FAIL"));
}
