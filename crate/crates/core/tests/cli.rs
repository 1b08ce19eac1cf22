use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use iacsmell::cli::{run, EXIT_CLEAN, EXIT_ERROR, EXIT_FINDINGS};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn corpus() -> String {
    fixtures().join("corpus").display().to_string()
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("iacsmell").chain(args.iter().copied()), &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_directory_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["analyze", path_str(dir.path()), "--format", "records"]);
    assert_eq!(o.code, EXIT_CLEAN, "{}", o.stderr);
    assert_eq!(o.stdout, "");
}

#[test]
fn findings_set_the_exit_code() {
    let o = cli(&["analyze", &corpus()]);
    assert_eq!(o.code, EXIT_FINDINGS, "{}", o.stderr);
    assert!(o.stdout.starts_with("rank"));
    assert!(o.stderr.contains("38 kept, 0 dropped"));
}

#[test]
fn bad_input_is_an_error() {
    let o = cli(&["analyze", "/definitely/not/here"]);
    assert_eq!(o.code, EXIT_ERROR);
    assert!(o.stderr.starts_with("error:"));
    assert_eq!(cli(&["analyze", &corpus(), "--fp-threshold", "1.5"]).code, EXIT_ERROR);
    assert_eq!(cli(&["analyze", &corpus(), "--scorer", "magic"]).code, EXIT_ERROR);
    assert_eq!(cli(&["no-such-command"]).code, EXIT_ERROR);
}

#[test]
fn records_are_byte_identical_across_runs() {
    let a = cli(&["analyze", &corpus(), "--format", "records"]);
    let b = cli(&["analyze", &corpus(), "--format", "records"]);
    assert_eq!(a.code, EXIT_FINDINGS);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout.lines().count(), 38);
}

#[test]
fn passthrough_records_equal_raw_rule_output() {
    use iacsmell::parsers::load_corpus;
    use iacsmell::rules::{detect, RuleConfig};

    let loaded = load_corpus(&fixtures().join("corpus"), None).unwrap();
    let mut raw: Vec<(String, usize, String, String)> = detect(&loaded.project, &RuleConfig::default())
        .into_iter()
        .map(|f| (f.file_path, f.line, f.smell.name().to_string(), f.rationale))
        .collect();
    raw.sort();
    let o = cli(&["analyze", &corpus(), "--format", "records"]);
    let mut got: Vec<(String, usize, String, String)> = o
        .stdout
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert_eq!(v["status"], "kept");
            assert_eq!(v["confidence"], 1.0);
            (
                v["file"].as_str().unwrap().to_string(),
                v["line"].as_u64().unwrap() as usize,
                v["smell"].as_str().unwrap().to_string(),
                v["rationale"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    got.sort();
    assert_eq!(got, raw);
}

#[test]
fn eval_reproduces_expected_table() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.jsonl");
    let o = cli(&["analyze", &corpus(), "--format", "records"]);
    fs::write(&preds, o.stdout).unwrap();
    let oracle = fixtures().join("oracle.csv");
    let e = cli(&[
        "eval",
        "--oracle",
        path_str(&oracle),
        "--predictions",
        path_str(&preds),
        "--corpus",
        &corpus(),
    ]);
    assert_eq!(e.code, EXIT_CLEAN, "{}", e.stderr);
    let expected = fs::read_to_string(fixtures().join("expected_report.csv")).unwrap();
    let report = e.stdout.split("\n\n").nth(1).unwrap();
    assert_eq!(report, expected);
    assert!(e.stdout.contains("Puppet,9,3,0,0.750,1.000,0.857,9.09,0.200"));
    assert!(e.stdout.contains("macro_f1,0.895"));

    // --total-loc is refused on a mixed corpus
    let mixed = cli(&[
        "eval", "--oracle", path_str(&oracle), "--predictions", path_str(&preds), "--corpus", &corpus(),
        "--total-loc", "1000",
    ]);
    assert_eq!(mixed.code, EXIT_ERROR);
}

#[test]
fn dataset_mine_on_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    let out = dir.path().join("mined.jsonl");
    let o = cli(&["dataset", "mine", path_str(&corpus), "--out", path_str(&out)]);
    assert_eq!(o.code, EXIT_CLEAN, "{}", o.stderr);
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn dataset_split_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let o = cli(&["dataset", "synth", "--out-train", path_str(&p("t.jsonl")), "--out-val", path_str(&p("v.jsonl"))]);
    assert_eq!(o.code, EXIT_CLEAN, "{}", o.stderr);
    for run_no in ["1", "2"] {
        let o = cli(&[
            "dataset",
            "split",
            path_str(&p("t.jsonl")),
            "--out-train",
            path_str(&p(&format!("train{run_no}.jsonl"))),
            "--out-val",
            path_str(&p(&format!("val{run_no}.jsonl"))),
            "--seed",
            "7",
        ]);
        assert_eq!(o.code, EXIT_CLEAN, "{}", o.stderr);
    }
    let read = |n: &str| fs::read(p(n)).unwrap();
    assert_eq!(read("train1.jsonl"), read("train2.jsonl"));
    assert_eq!(read("val1.jsonl"), read("val2.jsonl"));
    assert!(!read("val1.jsonl").is_empty());
}

#[test]
fn training_on_one_class_fails() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let line = r#"{"id":"x","technology":"Puppet","file_path":"a.pp","line":1,"smell":"HardCodedSecret","target":"$p = 'a'","context":"$p = 'a'","rationale":"r","label":"TP"}"#;
    fs::write(&train, format!("{line}\n")).unwrap();
    let o = cli(&["train-builtin", "--train", path_str(&train), "--out", path_str(&dir.path().join("m"))]);
    assert_eq!(o.code, EXIT_ERROR);
    assert!(!dir.path().join("m").exists());
}

#[test]
fn builtin_scorer_drops_the_lookup_default() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    cli(&["dataset", "synth", "--out-train", path_str(&p("t.jsonl")), "--out-val", path_str(&p("v.jsonl")), "--seed", "7"]);
    let o = cli(&[
        "train-builtin", "--train", path_str(&p("t.jsonl")), "--val", path_str(&p("v.jsonl")),
        "--out", path_str(&p("m.model")), "--seed", "7",
    ]);
    assert_eq!(o.code, EXIT_CLEAN, "{}", o.stderr);
    let src = p("src/manifests");
    fs::create_dir_all(&src).unwrap();
    fs::write(src.join("init.pp"), "$db_user = hiera('user','ironic')\n").unwrap();
    fs::write(src.join("secrets.pp"), "$db_password = 'Xk9#mQ2v'\n").unwrap();
    let scorer = format!("builtin:{}", path_str(&p("m.model")));
    let o = cli(&["analyze", path_str(&p("src")), "--scorer", &scorer, "--format", "records"]);
    assert_eq!(o.code, EXIT_FINDINGS, "{}", o.stderr);
    let status: Vec<(String, String)> = o
        .stdout
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["file"].as_str().unwrap().to_string(), v["status"].as_str().unwrap().to_string())
        })
        .collect();
    assert_eq!(
        status,
        [
            ("manifests/secrets.pp".to_string(), "kept".to_string()),
            ("manifests/init.pp".to_string(), "dropped".to_string())
        ]
    );
}

#[test]
fn config_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("rules.conf");
    fs::write(&config, "suspicious_words =\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_iacsmell");
    let records = |env: Option<&Path>| {
        let mut cmd = Command::new(bin);
        cmd.args(["analyze", &corpus(), "--format", "records"]).env_remove("IACSMELL_CONFIG");
        if let Some(c) = env {
            cmd.env("IACSMELL_CONFIG", c);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(EXIT_FINDINGS));
        String::from_utf8(out.stdout).unwrap()
    };
    let default = records(None);
    let configured = records(Some(&config));
    assert!(default.contains("SuspiciousComment"));
    assert!(!configured.contains("SuspiciousComment"));
    assert_eq!(configured.lines().count(), default.lines().count() - 6);

    fs::write(&config, "no_such_key = 1\n").unwrap();
    let out = Command::new(bin)
        .args(["analyze", &corpus()])
        .env("IACSMELL_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_ERROR));
}
