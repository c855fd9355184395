use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn sygus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sygus")).args(args).output().unwrap()
}

fn path(rel: &str) -> String {
    root().join(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_good_and_bad() {
    let good = sygus(&["check", &path("desk/max2.sl"), &path("desk/solutions/max2.good.sol")]);
    assert_eq!(good.status.code(), Some(0));
    assert_eq!(stdout(&good).lines().next(), Some("valid"));

    let bad = sygus(&["check", &path("desk/max2.sl"), &path("desk/solutions/max2.swap.sol")]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("invalid"));
    assert!(lines.any(|l| l.starts_with("x = ")), "{out}");

    let op = sygus(&["check", &path("desk/max2.sl"), &path("desk/solutions/max2.op.sol")]);
    assert_eq!((op.status.code(), stdout(&op).lines().next()), (Some(1), Some("syntactic-reject")));
}

#[test]
fn usage_and_unreadable_files_exit_2() {
    assert_eq!(sygus(&[]).status.code(), Some(2));
    assert_eq!(sygus(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sygus(&["parse", "/nonexistent.sl"]).status.code(), Some(2));
    assert_eq!(sygus(&["score", &path("fixtures/general.jsonl"), "--format", "pdf"]).status.code(), Some(2));
    let neg = sygus(&["solve", &path("desk/max2.sl"), "--timeout", "-1"]);
    assert_eq!(neg.status.code(), Some(2));
    assert!(neg.stdout.is_empty());
}

#[test]
fn parse_round_trips() {
    let o = sygus(&["parse", &path("desk/inv_eq.sl")]);
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again.sl");
    std::fs::write(&again, &o.stdout).unwrap();
    let o2 = sygus(&["parse", again.to_str().unwrap()]);
    assert_eq!(stdout(&o2), stdout(&o));

    std::fs::write(&again, "(set-logic LIA)(check-synth)").unwrap();
    let bad = sygus(&["parse", again.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty() && !bad.stderr.is_empty());
}

#[test]
fn solve_prints_a_checkable_solution() {
    let o = sygus(&["solve", &path("desk/max2.sl"), "--timeout", "60"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("max2.sol");
    std::fs::write(&sol, &o.stdout).unwrap();
    let c = sygus(&["check", &path("desk/max2.sl"), sol.to_str().unwrap()]);
    assert_eq!(stdout(&c).lines().next(), Some("valid"));
}

#[test]
fn score_general_track_fixture() {
    let o = sygus(&["score", &path("fixtures/general.jsonl"), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let n: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(n, ["448", "420", "398"]);
    let text = stdout(&sygus(&["score", &path("fixtures/general.jsonl")]));
    assert!(text.lines().nth(1).unwrap().starts_with("CVC4_2018"));
}

#[test]
fn report_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("rep");
    let o = sygus(&[
        "report",
        &path("fixtures/general.jsonl"),
        "--categories",
        &path("fixtures/general.categories.csv"),
        "--format",
        "csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    let solved: Vec<&str> = table.lines().filter(|l| l.contains(",Solved,")).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(solved, ["448", "420", "398"]);
    for f in ["table.csv", "table.txt", "scores.csv", "details.csv", "report.svg"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(out_dir.join("report.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("href"));
}

#[test]
fn run_with_builtin_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.conf");
    std::fs::write(
        &cfg,
        format!("benchmark = {}\nbenchmark = {}\nsolver = ref: builtin\nwall_limit = 60\n", path("desk/max2.sl"), path("desk/bv_mask.sl")),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let o = sygus(&["run", cfg.to_str().unwrap(), "--jobs", "2", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains("Solved")).count(), 2);
    let s = sygus(&["score", out_dir.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(stdout(&s).lines().nth(1), Some("ref,2,2,2,2,18"));
}
