use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn chronotask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronotask")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_string_lossy().into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_reports_verdict_and_exit_code() {
    let grant = fixture("grant_controller.hoa");
    let ok = chronotask(&["check", "--automaton", &grant, "--trace", "!g&!r;!g&r;!g&!r;g&r"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("accepted (4 steps)"));
    assert!(stdout(&ok).contains(r#"{"step":3,"sourceState":3,"nextState":5,"legal":true}"#));

    let bad = chronotask(&["check", "--automaton", &grant, "--trace", "!g&!r;g&r"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("rejected at step 1"));
}

#[test]
fn causes_match_the_table() {
    let out = chronotask(&[
        "causes",
        "--automaton",
        &fixture("grant_controller.hoa"),
        "--trace",
        "!g&!r;!g&r;!g&!r;g&r",
        "--effect",
        "XXX g",
        "--table",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let label: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(label["XXX g"]["3"], serde_json::json!(["r"]));
    assert_eq!(label["XXX g"]["0"], serde_json::json!(["no constraints"]));

    let unknown = chronotask(&["causes", "--automaton", &fixture("grant_controller.hoa"), "--trace", "g&r", "--effect", "q"]);
    assert!(!unknown.status.success());
}

#[test]
fn gen_split_and_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let gen = chronotask(&["gen", "--out", p(&data), "--count", "30", "--seed", "5", "--spec-dir", &fixture("")]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("config.json")).unwrap()).unwrap();
    assert_eq!((cfg["masterSeed"].as_u64(), cfg["tceCount"].as_u64()), (Some(5), Some(30)));

    let tce = data.join("tce.jsonl");
    let split_out = dir.path().join("split.jsonl");
    let split = chronotask(&["split", "--dataset", p(&tce), "--top-n", "1", "--out", p(&split_out)]);
    assert!(split.status.success());
    let hard = fs::read_to_string(&split_out).unwrap().lines().filter(|l| l.contains(r#""difficulty":"hard""#)).count();
    assert!((1..=5).contains(&hard), "{hard} hard tasks");

    let prompt = chronotask(&["prompt", "--dataset", p(&tce), "--id", "tce-00004"]);
    assert!(prompt.status.success());
    let text = stdout(&prompt);
    assert!(text.contains("### JSON Ground Truth ###:"));
    assert!(!text.contains("groundTruth"));
    assert!(!chronotask(&["prompt", "--dataset", p(&tce), "--id", "nope"]).status.success());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.json");
    fs::write(&cfg, r#"{"masterSeed": 1, "traceLen": 4}"#).unwrap();
    let out = chronotask(&["gen", "--out", p(&dir.path().join("d")), "--config", p(&cfg)]);
    assert!(!out.status.success());
}

#[test]
fn synthesized_controllers_feed_gen() {
    let dir = tempfile::tempdir().unwrap();
    let specs = dir.path().join("specs");
    let synth = chronotask(&["synth-random", "--out", p(&specs), "--count", "4", "--seed", "9"]);
    assert!(synth.status.success());
    assert_eq!(fs::read_dir(&specs).unwrap().count(), 4);
    let gen = chronotask(&["gen", "--spec-dir", p(&specs), "--out", p(&dir.path().join("d")), "--count", "12"]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
}

#[test]
fn unknown_group_key_fails_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(chronotask(&["gen", "--out", p(&data), "--count", "4"]).status.success());
    let out = chronotask(&[
        "score",
        "--dataset",
        p(&data.join("tce.jsonl")),
        "--run-dir",
        p(dir.path()),
        "--group-by",
        "model,colour",
    ]);
    assert!(!out.status.success());

    // Without transcripts every task is an unanswered parse failure.
    let out = chronotask(&["score", "--dataset", p(&data.join("tce.jsonl")), "--run-dir", p(dir.path()), "--group-by", "task"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().nth(1).unwrap(), "tce,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000,4,4");
}
