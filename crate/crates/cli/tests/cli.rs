use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const WORKED_MATRIX: &str =
    "a,b,c,__label__\n0.2,0.2,0.9,0\n0.4,0.4,0.1,1\n0.6,0.6,0.3,0\n0.2,0.4,0.3,1\n";

const RAW_CONFIG: &str = r#"{
  "input": {"source": "matrix", "path": "m.csv"},
  "preprocess": {
    "correlation_threshold": null,
    "vif_threshold": null,
    "balance": false,
    "pca_components": "none",
    "scale_interval": null
  },
  "train_fraction": null,
  "embeddings": [{"kind": "angle", "granularity": "cell"}],
  "strategies": ["DE", "GDS"],
  "classifiers": [{"kind": "logreg"}, {"kind": "knn", "k": 1}],
  "encode": {"strategy": "GDS", "embedding": {"kind": "angle", "granularity": "cell"}}
}"#;

fn qenc(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qenc"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.csv"), WORKED_MATRIX).unwrap();
    fs::write(dir.path().join("cfg.json"), RAW_CONFIG).unwrap();
    dir
}

fn entries(dir: &Path) -> BTreeSet<PathBuf> {
    fn walk(dir: &Path, acc: &mut BTreeSet<PathBuf>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, acc);
            }
            acc.insert(p);
        }
    }
    let mut acc = BTreeSet::new();
    walk(dir, &mut acc);
    acc
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("QENC_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(
        actual, expected,
        "golden {name} differs; rerun with QENC_BLESS=1 to update"
    );
}

#[test]
fn help_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let top = qenc(dir.path(), &["--help"]);
    assert_eq!(code(&top), 0);
    let text = stdout(&top);
    for flag in [
        "--config",
        "--set",
        "--out",
        "--seed",
        "--format",
        "--quiet",
        "--help",
        "--version",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    for cmd in ["synth", "preprocess", "encode", "bench", "report"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
    golden("help.txt", &text);

    let synth = stdout(&qenc(dir.path(), &["synth", "--help"]));
    assert!(synth.contains("--rows") && synth.contains("--churn-rate"));
    golden("synth_help.txt", &synth);
}

#[test]
fn encode_gds_on_worked_matrix() {
    let dir = workspace();
    let o = qenc(dir.path(), &["encode", "-c", "cfg.json", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "embed_calls=6 cache_hits=6 cells=12\n");
    let features = fs::read_to_string(dir.path().join("out/encoded.features.csv")).unwrap();
    assert_eq!(features.lines().count(), 5);

    let o = qenc(
        dir.path(),
        &[
            "encode",
            "-c",
            "cfg.json",
            "-o",
            "out",
            "--set",
            "encode.strategy=DE",
        ],
    );
    assert_eq!(stdout(&o), "embed_calls=12 cache_hits=0 cells=12\n");
}

#[test]
fn bench_rejects_ils_at_cell_granularity() {
    let dir = workspace();
    let o = qenc(
        dir.path(),
        &[
            "bench",
            "-c",
            "cfg.json",
            "-o",
            "out",
            "--set",
            r#"strategies=["ILS"]"#,
        ],
    );
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(
        err.contains("ILS") && err.contains("incompatible") && err.contains("cell"),
        "{err}"
    );
    assert!(!dir.path().join("out").exists());
}

#[test]
fn report_on_missing_file_is_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = qenc(dir.path(), &["report", "missing.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).is_empty());
}

#[test]
fn exit_codes_on_induced_failures() {
    let dir = workspace();
    fs::write(dir.path().join("blocker"), "").unwrap();
    fs::write(dir.path().join("bad.csv"), "a,__label__\nx,0\ny,1\n").unwrap();
    fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let cases: &[(&[&str], i32)] = &[
        (&["bench", "-c", "cfg.json", "-o", "out", "-q"], 0),
        (&["encode", "-c", "cfg.json", "-o", "out", "-q"], 0),
        (&["frobnicate"], 1),
        (&["bench", "--format", "xml"], 1),
        (&["bench", "-c", "cfg.json", "--set", "no_such_key=1"], 1),
        (&["bench", "-c", "cfg.json", "--set", "seed"], 1),
        (&["bench", "-c", "cfg.json", "--set", "strategies=[]"], 1),
        (&["bench", "-c", "bad.json"], 1),
        (&["synth", "--rows", "0", "-o", "out"], 1),
        (&["synth", "--churn-rate", "1.5", "-o", "out"], 1),
        (
            &[
                "encode",
                "-c",
                "cfg.json",
                "--set",
                "input.path=bad.csv",
                "-o",
                "out",
            ],
            1,
        ),
        (&["bench", "-c", "missing.json"], 2),
        (
            &[
                "encode",
                "-c",
                "cfg.json",
                "--set",
                "input.path=nope.csv",
                "-o",
                "out",
            ],
            2,
        ),
        (&["synth", "--rows", "10", "-o", "blocker/sub"], 2),
        (&["bench", "-c", "cfg.json", "-o", "blocker"], 2),
        (&["report", "blocker"], 1),
        (&["report", "missing.jsonl"], 2),
    ];
    for (args, expected) in cases {
        let o = qenc(dir.path(), args);
        assert_eq!(code(&o), *expected, "{args:?}: {}", stderr(&o));
        if *expected != 0 {
            assert!(!stderr(&o).is_empty(), "{args:?} gave no diagnostic");
        }
    }
}

#[test]
fn synth_defaults_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = qenc(dir.path(), &["synth", "-o", "data", "-q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "rows=7043 positives=1869\n");
    let text = fs::read_to_string(dir.path().join("data/churn.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 21);
    assert_eq!(header[0], "customerID");
    assert_eq!(*header.last().unwrap(), "Churn");
    assert_eq!(lines.clone().count(), 7043);
    assert_eq!(lines.filter(|l| l.ends_with(",Yes")).count(), 1869);
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("data/churn.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["rows"], 7043);
    assert_eq!(manifest["one_hot_width"], 42);
}

#[test]
fn synth_rows_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = qenc(
            dir.path(),
            &["synth", "--rows", "100", "--seed", "5", "-o", out],
        );
        assert_eq!(code(&o), 0);
    }
    let o = qenc(
        dir.path(),
        &["synth", "--rows", "100", "--seed", "6", "-o", "c"],
    );
    assert_eq!(code(&o), 0);
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    assert_eq!(
        String::from_utf8(read("a", "churn.csv"))
            .unwrap()
            .lines()
            .count(),
        101
    );
    assert_eq!(read("a", "churn.csv"), read("b", "churn.csv"));
    assert_eq!(
        read("a", "churn.manifest.json"),
        read("b", "churn.manifest.json")
    );
    assert_ne!(read("a", "churn.csv"), read("c", "churn.csv"));
}

#[test]
fn bench_is_byte_deterministic_and_report_renders() {
    let dir = workspace();
    for out in ["r1", "r2"] {
        let o = qenc(dir.path(), &["bench", "-c", "cfg.json", "-o", out, "-q"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("accuracy deltas vs DE"));
    }
    let names: Vec<String> = fs::read_dir(dir.path().join("r1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 4);
    let hash = names
        .iter()
        .find(|n| n.ends_with(".csv"))
        .unwrap()
        .trim_end_matches(".csv")
        .to_string();
    assert_eq!(hash.len(), 16);
    for ext in ["txt", "csv", "jsonl"] {
        let f = format!("{hash}.{ext}");
        assert_eq!(
            fs::read(dir.path().join("r1").join(&f)).unwrap(),
            fs::read(dir.path().join("r2").join(&f)).unwrap(),
            "{f} differs"
        );
    }

    let csv_path = format!("r1/{hash}.csv");
    let o = qenc(dir.path(), &["report", &csv_path, "--format", "jsonl"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        o.stdout,
        fs::read(dir.path().join(format!("r1/{hash}.jsonl"))).unwrap()
    );
    let o = qenc(dir.path(), &["report", &csv_path]);
    assert_eq!(
        o.stdout,
        fs::read(dir.path().join(format!("r1/{hash}.txt"))).unwrap()
    );

    let o = qenc(
        dir.path(),
        &[
            "bench", "-c", "cfg.json", "-o", "r3", "--format", "csv", "-q",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_dir(dir.path().join("r3")).unwrap().count(), 2);
}

#[test]
fn subcommands_write_only_inside_out_dir() {
    let dir = workspace();
    let before = entries(dir.path());
    let runs: &[&[&str]] = &[
        &["synth", "--rows", "200", "-o", "out/synth"],
        &["encode", "-c", "cfg.json", "-o", "out/encode"],
        &["bench", "-c", "cfg.json", "-o", "out/bench"],
        &[
            "preprocess",
            "--set",
            r#"input={"source":"synthetic","rows":300}"#,
            "-o",
            "out/pre",
        ],
    ];
    for args in runs {
        let o = qenc(dir.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    let out = dir.path().join("out");
    let added: Vec<PathBuf> = entries(dir.path()).difference(&before).cloned().collect();
    assert!(!added.is_empty());
    for p in &added {
        assert!(
            p.starts_with(&out),
            "{} written outside out dir",
            p.display()
        );
    }
    for f in ["train.csv", "test.csv", "preprocess.summary.json"] {
        assert!(out.join("pre").join(f).exists(), "{f}");
    }
}

#[test]
fn preprocess_on_synthetic_clone() {
    let dir = tempfile::tempdir().unwrap();
    let o = qenc(
        dir.path(),
        &[
            "preprocess",
            "--set",
            "input.source=synthetic",
            "--set",
            "input.rows=1000",
            "-o",
            "p",
            "-q",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    assert!(
        line.starts_with("input_rows=1000 expanded_width=42 "),
        "{line}"
    );
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("p/preprocess.summary.json")).unwrap(),
    )
    .unwrap();
    let balanced = summary["rows_after_balance"].as_u64().unwrap();
    assert_eq!(balanced % 2, 0);
    assert_eq!(
        summary["train_rows"].as_u64().unwrap() + summary["test_rows"].as_u64().unwrap(),
        balanced
    );
}
