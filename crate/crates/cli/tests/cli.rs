use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use ideation_core::train::synth::{NON_SUICIDE_LEXICON, SUICIDE_LEXICON};

const BIN: &str = env!("CARGO_BIN_EXE_ideation");

fn ideation(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("IDEATION_API_TOKEN")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("synth_{n}_{seed}.csv"));
    let o = ideation(&[
        "synth-data",
        "--out",
        s(&path),
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

#[test]
fn usage_errors_exit_2_with_help() {
    for args in [
        &["train"][..],
        &["frobnicate"],
        &["predict", "--text", "x"],
        &["synth-data", "--out", "x", "--n", "many"],
    ] {
        let o = ideation(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("Usage:"), "{args:?}");
        assert!(stdout(&o).is_empty());
    }
    let o = ideation(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = ideation(&[
        "predict",
        "--model",
        s(&dir.path().join("missing.bin")),
        "--text",
        "hi",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"CSUICIDE\x01\x00\x00\x00garbage").unwrap();
    let o = ideation(&["predict", "--model", s(&junk), "--text", "hi"]);
    assert_eq!(o.status.code(), Some(1));

    let bad_cfg = dir.path().join("cfg.json");
    std::fs::write(&bad_cfg, r#"{"train": {"epochs": 0}}"#).unwrap();
    let data = synth(dir.path(), 40, 1);
    let o = ideation(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&bad_cfg),
        "--out",
        s(&dir.path().join("m.bin")),
        "--history",
        s(&dir.path().join("h.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("m.bin").exists());

    let o = ideation(&["serve", "--model", s(&junk), "--bank", "x.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("IDEATION_API_TOKEN"));
}

#[test]
fn preprocess_writes_cleaned_corpus_and_vocab() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    std::fs::write(&raw, "text,class\n\"<b>I</b> am SO tired, email me@x.com!\",suicide\nGame night with friends,non-suicide\n").unwrap();
    let out = dir.path().join("clean.csv");
    let vocab = dir.path().join("vocab.tsv");
    let o = ideation(&[
        "preprocess",
        "--data",
        s(&raw),
        "--out",
        s(&out),
        "--vocab",
        s(&vocab),
        "--max-words",
        "100",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cleaned = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        cleaned,
        "text,class\ntired email,suicide\ngame night friends,non-suicide\n"
    );
    assert_eq!(std::fs::read_to_string(&vocab).unwrap().lines().count(), 5);
}

#[test]
fn same_flags_same_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 120, 3);
    let again = dir.path().join("again.csv");
    ideation(&["synth-data", "--out", s(&again), "--n", "120", "--seed", "3"]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());

    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, r#"{"model": {"vocab_size": 200, "embed_dim": 8, "gru_units": 6, "seq_len": 20}, "train": {"batch_size": 16}}"#).unwrap();
    let run = |tag: &str| {
        let (m, h) = (
            dir.path().join(format!("{tag}.bin")),
            dir.path().join(format!("{tag}.csv")),
        );
        let o = ideation(&[
            "train",
            "--data",
            s(&data),
            "--config",
            s(&cfg),
            "--epochs",
            "2",
            "--out",
            s(&m),
            "--history",
            s(&h),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(m).unwrap(), std::fs::read(h).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let history = String::from_utf8(a.1).unwrap();
    assert_eq!(
        history.lines().next().unwrap(),
        "epoch,train_loss,train_acc,val_loss,val_acc"
    );
    assert_eq!(history.lines().count(), 3);
}

#[test]
fn desk_scale_train_evaluate_predict_serve() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 2000, 7);
    let model = dir.path().join("model.bin");
    let history = dir.path().join("history.csv");
    let o = ideation(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&model),
        "--history",
        s(&history),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&history).unwrap().lines().count() - 1;
    assert!((1..=25).contains(&rows), "{rows} epochs");
    let size = std::fs::metadata(&model).unwrap().len();
    assert!(
        (1_053_502 * 4..1_053_502 * 4 + 64 * 1024).contains(&size),
        "archive is {size} bytes"
    );

    let reports = dir.path().join("reports");
    let o = ideation(&[
        "evaluate",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--report-dir",
        s(&reports),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let overall = std::fs::read_to_string(reports.join("overall_stats.csv")).unwrap();
    assert_eq!(overall.lines().count(), 15, "header + 14 merits");
    assert!(!overall.contains("Train Accuracy,undefined"));
    assert_eq!(
        std::fs::read_to_string(reports.join("class_stats.csv"))
            .unwrap()
            .lines()
            .count(),
        10
    );
    assert!(reports.join("confusion_matrix.csv").exists() && reports.join("report.txt").exists());

    let o = ideation(&[
        "predict",
        "--model",
        s(&model),
        "--text",
        "the and of it was so very",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("suicide_probability="));
    assert!(out.contains("\nlabel="));

    // the desk corpus only has long documents, so probe with full-window texts
    let long = |words: &[&str]| format!("{}.", words.repeat(2).join(" "));
    let o = ideation(&["predict", "--model", s(&model), "--text", &long(&SUICIDE_LEXICON)]);
    assert!(stdout(&o).ends_with("label=suicide\n"), "{}", stdout(&o));
    let o = ideation(&[
        "predict",
        "--model",
        s(&model),
        "--text",
        &long(&NON_SUICIDE_LEXICON),
    ]);
    assert!(stdout(&o).ends_with("label=non-suicide\n"), "{}", stdout(&o));

    serve_smoke(&model, dir.path());
}

fn http(addr: &str, request: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.write_all(request.as_bytes()).unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    response
}

fn serve_smoke(model: &Path, dir: &Path) {
    let bank = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/question_bank.json");
    let mut child = Command::new(BIN)
        .args([
            "serve",
            "--model",
            s(model),
            "--bank",
            s(&bank),
            "--addr",
            "127.0.0.1:0",
        ])
        .args(["--data-dir", s(&dir.join("sessions"))])
        .env("IDEATION_API_TOKEN", "smoke")
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .split("http://")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_owned();

    let health = http(
        &addr,
        "GET /v1/health HTTP/1.1\r\nHost: x\r\nAuthorization: Bearer smoke\r\nConnection: close\r\n\r\n",
    );
    let created = http(&addr, "POST /v1/sessions HTTP/1.1\r\nHost: x\r\nAuthorization: Bearer smoke\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    let denied = http(
        &addr,
        "GET /v1/health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n",
    );
    child.kill().unwrap();
    child.wait().unwrap();

    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    let expected = ideation_core::chat::archive_checksum(&std::fs::read(model).unwrap());
    assert!(health.contains(&expected), "{health}");
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");
    assert!(created.contains("How have you been feeling"), "{created}");
    assert!(denied.starts_with("HTTP/1.1 401"), "{denied}");
    assert_eq!(std::fs::read_dir(dir.join("sessions")).unwrap().count(), 1);
}
