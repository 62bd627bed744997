use std::path::Path;
use std::process::Command;

use hetlink::io::{read_json, RunManifest, FAILED_MARKER};

fn hetlink(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hetlink"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHORT: &str = r#"{
  "models": ["sgd", "r-hge"],
  "layer_sizes": [16, 16],
  "train": { "epochs": 5, "learning_rate": 0.01 },
  "eval": { "n_folds": 2, "subsample_count": 2 }
}"#;

#[test]
fn evaluate_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, SHORT).unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = hetlink(&["evaluate", "--config", path(&cfg), "--seed", "4", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = |d: &Path| std::fs::read(d.join("metrics.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));

    let m: RunManifest = read_json(&a.join("manifest.json")).unwrap();
    assert_eq!((m.seed, m.status.as_str()), (4, "ok"));
    assert_eq!(m.config_hash.len(), 64);
    let replay = dir.path().join("replay.json");
    std::fs::write(&replay, serde_json::to_string(&m.config).unwrap()).unwrap();
    let o = hetlink(&["evaluate", "--config", path(&replay), "--out", path(&c)]);
    assert!(o.status.success());
    assert_eq!(csv(&a), csv(&c));

    for f in ["summary.md", "r-hge/loss_0.csv", "r-hge/loss_1.csv", "r-hge/checkpoint_1.json", "sgd/checkpoint_0.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
}

#[test]
fn generated_archive_feeds_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = hetlink(&["generate", "--preset", "old-like", "--seed", "2", "--out", path(&data)]);
    assert!(o.status.success());
    for f in ["schema.json", "nodes.jsonl", "edges.jsonl", "manifest.json"] {
        assert!(data.join(f).is_file(), "{f}");
    }
    let cfg = dir.path().join("cfg.json");
    let mut v: serde_json::Value = serde_json::from_str(SHORT).unwrap();
    v["dataset"] = serde_json::json!({ "kind": "archive", "path": data, "name": "old-archive" });
    std::fs::write(&cfg, v.to_string()).unwrap();
    let out = dir.path().join("eval");
    let o = hetlink(&["evaluate", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text.starts_with("model,dataset,fold,subsample,relation,ap,auc_roc\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",old-archive,")));
}

#[test]
fn split_and_gradcheck_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let o = hetlink(&["split", "--out", path(&dir.path().join("s"))]);
    assert!(o.status.success());
    let plan: serde_json::Value = read_json(&dir.path().join("s/split.json")).unwrap();
    assert!(plan.to_string().contains("cutoffs"));
    let o = hetlink(&["gradcheck", "--out", path(&dir.path().join("g"))]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(dir.path().join("g/gradcheck.txt")).unwrap();
    assert!(report.contains("PASS"));
}

#[test]
fn failures_exit_nonzero_and_leave_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "dataset": { "kind": "archive", "path": "/nonexistent/archive" } }"#).unwrap();
    let out = dir.path().join("out");
    let o = hetlink(&["train", "--config", path(&cfg), "--out", path(&out)]);
    assert!(!o.status.success());
    assert!(out.join(FAILED_MARKER).is_file());
    let m: RunManifest = read_json(&out.join("manifest.json")).unwrap();
    assert_eq!(m.status, "failed");
    assert!(m.error.is_some());

    let o = hetlink(&["evaluate", "--config", path(&dir.path().join("missing.json"))]);
    assert!(!o.status.success());
    let o = hetlink(&["evaluate", "--preset", "no-such-preset"]);
    assert!(!o.status.success());
}
