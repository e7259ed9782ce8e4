use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn wordcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordcluster"))
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    let out = wordcluster(&["--help"]);
    assert_eq!(code(&out), 0);
    for sub in ["tokenize", "grid-search", "run", "compare"] {
        assert!(stdout(&out).contains(sub), "help lacks {sub}");
    }
    assert_eq!(code(&wordcluster(&["run", "--no-such-flag"])), 1);
    assert_eq!(code(&wordcluster(&["frobnicate"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "dim = 8\nwindoww = 3\n").unwrap();
    let out = wordcluster(&["run", "--config", path(&conf)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("windoww"), "{}", stderr(&out));

    let out = wordcluster(&["run", "--config", "toy.conf", "--epochs", "many"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn malformed_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.tsv");
    std::fs::write(&data, "sports\tthe match\nno tab on this line\n").unwrap();
    let out = wordcluster(&[
        "run",
        "--config",
        "toy.conf",
        "--dataset",
        path(&data),
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn diverging_training_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = wordcluster(&[
        "run",
        "--config",
        "toy.conf",
        "--classifier",
        "cnn",
        "--max-len",
        "16",
        "--learning-rate",
        "1e150",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"), "{}", stderr(&out));
}

#[test]
fn stage_by_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path();
    let common = ["--config", "toy.conf", "--output-dir", path(out_dir)];
    let run = |args: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend_from_slice(&common);
        let out = wordcluster(&all);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        stdout(&out)
    };

    let tokens = out_dir.join("tokens.tsv");
    run(&[
        "tokenize",
        "--input",
        "toy_dataset.tsv",
        "--output",
        path(&tokens),
    ]);
    let text = std::fs::read_to_string(&tokens).unwrap();
    assert!(text.contains("heavy\u{2581}rain") || text.contains("heavy rain"));

    let augmented = out_dir.join("augmented.tsv");
    run(&["augment", "--output", path(&augmented)]);
    assert!(std::fs::read_to_string(&augmented).unwrap().lines().count() > 90);

    run(&["train-embeddings"]);
    let emb = out_dir.join("embeddings.txt");
    assert!(emb.is_file());

    run(&["cluster", "--embeddings", path(&emb)]);
    let (clusters, centroids) = (out_dir.join("clusters.tsv"), out_dir.join("centroids.txt"));
    assert!(clusters.is_file() && centroids.is_file());

    run(&[
        "expand",
        "--embeddings",
        path(&emb),
        "--clusters",
        path(&clusters),
        "--centroids",
        path(&centroids),
    ]);
    let wc = out_dir.join("word_cluster.txt");
    let header = std::fs::read_to_string(&wc).unwrap();
    assert!(header.lines().next().unwrap().ends_with(" 32"));

    run(&["train", "--vectors", path(&wc), "--epochs", "5"]);
    let model = out_dir.join("model.ckpt");
    let json = out_dir.join("eval.json");
    let text = run(&[
        "evaluate",
        "--vectors",
        path(&wc),
        "--model",
        path(&model),
        "--json",
        path(&json),
    ]);
    assert!(text.contains("accuracy"));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(eval["total"], 90);
}

#[test]
fn run_snapshot_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    let out = wordcluster(&["run", "--config", "toy.conf", "--output-dir", path(&a)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("accuracy"));
    let report = a.join("report.json");
    let out = wordcluster(&["run", "--snapshot", path(&report), "--output-dir", path(&b)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = wordcluster(&[
        "compare",
        path(&report),
        path(&b.join("report.json")),
        "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cmp: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(cmp["accuracy_delta"], 0.0);

    let out = wordcluster(&[
        "run",
        "--config",
        "toy.conf",
        "--seed",
        "4",
        "--epochs",
        "2",
        "--output-dir",
        path(&c),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = wordcluster(&["compare", path(&report), path(&c.join("report.json"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn grid_search_needs_a_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = wordcluster(&[
        "grid-search",
        "--config",
        "toy.conf",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let out = wordcluster(&[
        "grid-search",
        "--config",
        "toy.conf",
        "--k",
        "none",
        "--k-min",
        "4",
        "--k-max",
        "16",
        "--k-steps",
        "3",
        "--epochs",
        "5",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["grid"].as_array().unwrap().len(), 3);
}
