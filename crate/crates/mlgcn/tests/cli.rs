use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mlgcn::checkpoint;
use mlgcn::matrix::{read_csv, read_tensor};
use mlgcn_core::embeddings::{EmbeddingKind, EmbeddingMatrix};
use mlgcn_core::model::{init_model, ModelConfig};
use mlgcn_core::Tensor;

fn mlgcn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mlgcn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mlgcn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset: 6 labels, 12-dim features.
fn synth(root: &Path) -> PathBuf {
    let d = root.join("data");
    ok(&["synth", "--labels", "6", "--dim", "12", "--train", "120", "--test", "40", "--seed", "3", "--out", s(&d)]);
    d
}

fn train_args(d: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = vec![
        "train".into(),
        "--annotations".into(),
        s(&d.join("train.tsv")).into(),
        "--features".into(),
        s(&d.join("train.mlgf")).into(),
        "--vocab".into(),
        s(&d.join("vocab.txt")).into(),
        "--embeddings".into(),
        "one-hot".into(),
        "--layer-dims".into(),
        "16,12".into(),
        "--epochs".into(),
        "3".into(),
        "--out".into(),
        s(out).into(),
    ];
    v.extend(extra.iter().map(|x| x.to_string()));
    v
}

fn run_owned(args: &[String]) -> String {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs)
}

#[test]
fn build_graph_writes_four_matrices_and_manifest() {
    let root = tempfile::tempdir().unwrap();
    let vocab = root.path().join("labels.txt");
    let ann = root.path().join("train.tsv");
    fs::write(&vocab, "cat\ndog\nperson\n").unwrap();
    fs::write(&ann, "img1\tdog,cat\nimg2\tdog,dog\nimg3\tcat,person\nimg4\t\n").unwrap();
    let out = root.path().join("graph");
    ok(&["build-graph", "--annotations", s(&ann), "--vocab", s(&vocab), "--tau", "0.4", "--p", "0.2", "--out", s(&out)]);
    for name in ["conditional", "binary", "reweighted", "normalized"] {
        let t = read_tensor(&out.join(format!("{name}.mlgf"))).unwrap();
        assert_eq!(t.shape(), &[3, 3]);
    }
    let p = read_tensor(&out.join("conditional.mlgf")).unwrap();
    // P(dog | cat) = 1/2, P(cat | dog) = 1/2, P(person | cat) = 1/2
    assert_eq!((p.at(0, 1), p.at(1, 0), p.at(0, 2), p.at(2, 0)), (0.5, 0.5, 0.5, 1.0));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("command=build-graph\n"));
    assert!(manifest.contains("tau=0.4\n"));
    assert!(manifest.lines().any(|l| l.starts_with("sha256.annotations=") && l.len() == 19 + 64));
}

#[test]
fn zero_learning_rate_keeps_initial_weights() {
    let root = tempfile::tempdir().unwrap();
    let d = synth(root.path());
    let ck = root.path().join("ck");
    run_owned(&train_args(&d, &ck, &["--lr0", "0", "--seed", "5"]));
    let loaded = checkpoint::load(&ck).unwrap();
    let cfg = ModelConfig { layer_dims: vec![16, 12], seed: 5, ..ModelConfig::default() };
    let z = EmbeddingMatrix::from_tensor(Tensor::eye(6).unwrap(), EmbeddingKind::OneHot).unwrap();
    let initial = init_model(&cfg, z, loaded.model.adjacency().clone(), 12).unwrap();
    for (a, b) in loaded.model.layers().iter().zip(initial.layers()) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.weight), bits(&b.weight));
    }
}

#[test]
fn rerun_reproduces_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let d = synth(root.path());
    let a = root.path().join("a");
    let b = root.path().join("b");
    run_owned(&train_args(&d, &a, &[]));
    run_owned(&train_args(&d, &b, &[]));
    let names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 8);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn evaluate_export_and_retrieve() {
    let root = tempfile::tempdir().unwrap();
    let d = synth(root.path());
    let ck = root.path().join("ck");
    run_owned(&train_args(&d, &ck, &[]));
    let test = [s(&d.join("test.tsv")).to_owned(), s(&d.join("test.mlgf")).to_owned()];
    let report = ok(&["evaluate", "--checkpoint", s(&ck), "--annotations", &test[0], "--features", &test[1], "--rule", "topk:3"]);
    assert!(report.starts_with("rule=topk:3\nmAP="));
    for key in ["CP=", "CR=", "CF1=", "OP=", "OR=", "OF1=", "AP.label0="] {
        assert!(report.contains(key), "{key} missing from {report}");
    }

    let ex = root.path().join("export");
    ok(&["export-classifiers", "--checkpoint", s(&ck), "--out", s(&ex)]);
    let w = read_tensor(&ex.join("classifiers.mlgf")).unwrap();
    assert_eq!(w.shape(), &[6, 12]);
    assert_eq!(read_csv(&ex.join("classifiers.csv")).unwrap(), w);

    let hits = ok(&[
        "retrieve", "--annotations", &test[0], "--features", &test[1], "--vocab", s(&d.join("vocab.txt")),
        "--query", "s000125", "--k", "4",
    ]);
    let lines: Vec<&str> = hits.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("1\ts000125\t0"));
}

#[test]
fn p_sweep_flags_the_degenerate_row() {
    let root = tempfile::tempdir().unwrap();
    let d = synth(root.path());
    let out = root.path().join("sweep");
    let table = ok(&[
        "sweep",
        "--annotations", s(&d.join("train.tsv")),
        "--features", s(&d.join("train.mlgf")),
        "--test-annotations", s(&d.join("test.tsv")),
        "--test-features", s(&d.join("test.mlgf")),
        "--vocab", s(&d.join("vocab.txt")),
        "--embeddings", "one-hot",
        "--layer-dims", "16,12",
        "--epochs", "2",
        "--tau", "0.2",
        "--p-grid", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
        "--out", s(&out),
    ]);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        let flagged = row[5] == "true";
        assert_eq!(flagged, row[1] == "1", "{row:?}");
        assert_ne!(row[6], "rejected");
    }
    assert_eq!(fs::read_to_string(out.join("sweep.tsv")).unwrap(), table);
}

#[test]
fn failures_exit_nonzero_with_one_line_and_no_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let d = synth(root.path());
    let ck = root.path().join("ck");
    // last layer width must equal the 12-dim features
    let mut args = train_args(&d, &ck, &[]);
    let i = args.iter().position(|a| a == "16,12").unwrap();
    args[i] = "16,10".into();
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = mlgcn(&refs);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("feature dim 12"));
    assert!(!ck.exists());

    let bad = root.path().join("bad.tsv");
    fs::write(&bad, "x\tlabel0\ny\tunicorn\n").unwrap();
    let out = mlgcn(&["build-graph", "--annotations", s(&bad), "--vocab", s(&d.join("vocab.txt")), "--out", s(&root.path().join("g"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.tsv:2: unknown label \"unicorn\""), "{err}");
    assert!(!root.path().join("g").exists());

    let corrupt = root.path().join("corrupt.mlgf");
    let mut bytes = fs::read(d.join("test.mlgf")).unwrap();
    bytes.truncate(bytes.len() - 1);
    fs::write(&corrupt, bytes).unwrap();
    let out = mlgcn(&[
        "retrieve", "--annotations", s(&d.join("test.tsv")), "--features", s(&corrupt),
        "--vocab", s(&d.join("vocab.txt")), "--query", "s000125",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("corrupt.mlgf: byte"));
}
