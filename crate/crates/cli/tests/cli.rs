use std::path::Path;
use std::process::{Command, Output};

use aigsage_core::oracle::AdderTree;

fn aigsage(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aigsage"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = aigsage(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    aigsage(dir, args).status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const SMALL_CONFIG: &str = r#"{"num_layers":2,"hidden_dim":8,"head_dim":8,"task_classes":[4,2,2],
"loss_weights":[0.8,1.0,1.0],"aggregation":"fanin_fanout","function_features":true,
"class_weighting":false,"seed":3,"learning_rate":0.01,"epochs":15}"#;

#[test]
fn generated_fixture_labels_three_full_and_three_half_adders() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "gen", "--family", "csa", "--bits", "3", "--out", "c3.aag", "--truth", "c3.json",
        ],
    );
    ok(
        d.path(),
        &[
            "label", "--aig", "c3.aag", "--out", "l.csv", "--adders", "a.json",
        ],
    );
    let tree = AdderTree::from_json_lines(&read(d.path(), "a.json")).unwrap();
    assert_eq!(
        tree.adders.iter().filter(|a| a.inputs.len() == 3).count(),
        3
    );
    assert_eq!(
        tree.adders.iter().filter(|a| a.inputs.len() == 2).count(),
        3
    );
    let xor_rows = read(d.path(), "l.csv")
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(2) == Some("1"))
        .count();
    assert!(xor_rows >= 6);
    let m: serde_json::Value =
        serde_json::from_str(&read(d.path(), "l.csv.manifest.json")).unwrap();
    assert_eq!(m["command"], "label");
    assert_eq!(m["input_hashes"]["c3.aag"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(
            d.path(),
            &["gen", "--family", "csa", "--bits", "0", "--out", "x.aag"]
        ),
        2
    );
    assert_eq!(
        code(
            d.path(),
            &["gen", "--family", "wallace", "--bits", "4", "--out", "x.aag"]
        ),
        2
    );
    assert_eq!(code(d.path(), &["train", "--out", "m.bin"]), 2);
    assert_eq!(
        code(
            d.path(),
            &["train", "--train-designs", "csa:x", "--out", "m.bin"]
        ),
        2
    );
    assert_eq!(
        code(
            d.path(),
            &["label", "--aig", "missing.aag", "--out", "l.csv"]
        ),
        3
    );
    std::fs::write(d.path().join("bad.aag"), "aag 1 2\n").unwrap();
    assert_eq!(
        code(d.path(), &["label", "--aig", "bad.aag", "--out", "l.csv"]),
        3
    );
    let diverging = SMALL_CONFIG.replace("0.01", "1e38");
    std::fs::write(d.path().join("cfg.json"), diverging).unwrap();
    assert_eq!(
        code(
            d.path(),
            &[
                "train",
                "--train-designs",
                "csa:2-3",
                "--config",
                "cfg.json",
                "--out",
                "m.bin"
            ]
        ),
        4
    );
}

#[test]
fn empty_graph_gives_header_only() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("e.aag"), "aag 0 0 0 0 0\n").unwrap();
    ok(
        d.path(),
        &[
            "label", "--aig", "e.aag", "--out", "e.csv", "--adders", "e.json",
        ],
    );
    assert_eq!(read(d.path(), "e.csv"), "node_id,task1,task2,task3\n");
}

#[test]
fn train_infer_eval_bench() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("cfg.json"), SMALL_CONFIG).unwrap();
    let train = |out: &str| {
        ok(
            d.path(),
            &[
                "train",
                "--train-designs",
                "csa:2-4",
                "--config",
                "cfg.json",
                "--out",
                out,
            ],
        );
    };
    train("a.bin");
    train("b.bin");
    assert_eq!(
        std::fs::read(d.path().join("a.bin")).unwrap(),
        std::fs::read(d.path().join("b.bin")).unwrap()
    );
    let manifest = |name: &str| {
        let mut m: serde_json::Value = serde_json::from_str(&read(d.path(), name)).unwrap();
        m.as_object_mut().unwrap().remove("timings");
        m["outputs"] = serde_json::Value::Null;
        m
    };
    assert_eq!(
        manifest("a.bin.manifest.json"),
        manifest("b.bin.manifest.json")
    );

    ok(
        d.path(),
        &["gen", "--family", "booth", "--bits", "6", "--out", "b6.aag"],
    );
    ok(
        d.path(),
        &[
            "infer",
            "--aig",
            "b6.aag",
            "--model",
            "a.bin",
            "--out",
            "p.csv",
            "--repair",
            "--extract",
            "x.json",
        ],
    );
    let rows = read(d.path(), "p.csv").lines().count();
    let ids = aigsage_core::aig::parse_aiger(&read(d.path(), "b6.aag"))
        .unwrap()
        .num_ids();
    assert_eq!(rows, ids);
    AdderTree::from_json_lines(&read(d.path(), "x.json")).unwrap();
    let m: serde_json::Value =
        serde_json::from_str(&read(d.path(), "p.csv.manifest.json")).unwrap();
    assert!(m["timings"]["total_s"].as_f64().unwrap() >= 0.0);

    let other = SMALL_CONFIG.replace("\"seed\":3", "\"seed\":4");
    std::fs::write(d.path().join("other.json"), other).unwrap();
    let infer_with = |cfg: &str| {
        code(
            d.path(),
            &[
                "infer", "--aig", "b6.aag", "--model", "a.bin", "--out", "q.csv", "--config", cfg,
            ],
        )
    };
    assert_eq!(infer_with("cfg.json"), 0);
    assert_eq!(infer_with("other.json"), 3);
    let mut bytes = std::fs::read(d.path().join("a.bin")).unwrap();
    let last = bytes.len() - 10;
    bytes[last] ^= 1;
    std::fs::write(d.path().join("bad.bin"), bytes).unwrap();
    assert_eq!(
        code(
            d.path(),
            &["infer", "--aig", "b6.aag", "--model", "bad.bin", "--out", "q.csv"]
        ),
        3
    );

    ok(
        d.path(),
        &[
            "eval",
            "--test-designs",
            "csa:5,booth:5",
            "--model",
            "a.bin",
            "--out",
            "r.json",
            "--csv",
            "r.csv",
        ],
    );
    let r: serde_json::Value = serde_json::from_str(&read(d.path(), "r.json")).unwrap();
    assert_eq!(r["designs"].as_array().unwrap().len(), 2);
    assert_eq!(read(d.path(), "r.csv").lines().count(), 7);

    ok(
        d.path(),
        &[
            "bench",
            "--family",
            "csa",
            "--bits-list",
            "4,6",
            "--model",
            "a.bin",
            "--out",
            "bench.csv",
        ],
    );
    let bench = read(d.path(), "bench.csv");
    let lines: Vec<&str> = bench.lines().collect();
    assert_eq!(lines[0], "family,bits,nodes,edges,oracle_s,learned_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("csa,4,"));
}
