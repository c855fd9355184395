use std::path::{Path, PathBuf};
use std::time::Duration;

use sygus_core::harness::{load_records, run_suite, write_records, HarnessError, Invocation, RunConfig, RunRecord, SolverSpec, Status};

fn desk(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/desk").join(name)
}

fn stub(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    format!("sh {}", path.display())
}

fn config(dir: &Path, solvers: Vec<SolverSpec>, limit: Duration) -> RunConfig {
    RunConfig {
        benchmarks: vec![desk("max2.sl")],
        solvers,
        wall_limit: limit,
        workers: 4,
        output_dir: dir.join("out"),
        ..RunConfig::default()
    }
}

fn cmd(id: &str, c: String) -> SolverSpec {
    SolverSpec { id: id.into(), invocation: Invocation::Command(c) }
}

#[test]
fn stub_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(desk("solutions/max2.good.sol")).unwrap();
    let solvers = vec![
        cmd("good", stub(dir.path(), "good.sh", &format!("cat <<'END'\n{}\nEND", good.trim()))),
        cmd("cut", stub(dir.path(), "cut.sh", "echo '(define-fun'")),
        cmd("wrong", stub(dir.path(), "wrong.sh", "echo '(define-fun max2 ((x Int) (y Int)) Int x)'")),
        cmd("crash", stub(dir.path(), "crash.sh", "exit 3")),
        cmd("missing", "/nonexistent/solver".into()),
        cmd("gives_up", stub(dir.path(), "unknown.sh", "echo unknown")),
        SolverSpec { id: "builtin".into(), invocation: Invocation::Builtin },
    ];
    let cfg = config(dir.path(), solvers, Duration::from_secs(30));
    let records = run_suite(&cfg).unwrap();
    let status: Vec<(&str, Status)> = records.iter().map(|r| (r.solver_id.as_str(), r.status)).collect();
    assert_eq!(
        status,
        [
            ("good", Status::Solved),
            ("cut", Status::IllFormed),
            ("wrong", Status::SemanticReject),
            ("crash", Status::Crash),
            ("missing", Status::Crash),
            ("gives_up", Status::Unknown),
            ("builtin", Status::Solved),
        ]
    );
    assert!(records[0].wall_seconds < 1.0);
    assert_eq!(records[0].solution_size, Some(6));
    assert_eq!(records[0].benchmark_id, "max2.sl");
    assert!(records.iter().filter(|r| r.status != Status::Solved).all(|r| r.solution_size.is_none() || r.solver_id == "wrong"));

    // the durable log holds the same records (in completion order)
    let mut logged = load_records(&cfg.output_dir.join("records.jsonl")).unwrap();
    logged.sort_by_key(|r| records.iter().position(|x| x.solver_id == r.solver_id));
    assert_eq!(logged, records);
    let csv = std::fs::read_to_string(cfg.output_dir.join("records.csv")).unwrap();
    assert!(csv.starts_with("solver_id,benchmark_id,status,wall_seconds,solution_text,solution_size\n"));
    assert_eq!(csv.lines().count(), records.len() + 1);
}

#[test]
fn sleeping_solvers_are_killed() {
    let dir = tempfile::tempdir().unwrap();
    // the child keeps stdout open; the whole group must die
    let sleeper = stub(dir.path(), "sleep.sh", "sleep 30 &\nsleep 30\necho late");
    let solvers = (0..20).map(|i| cmd(&format!("sleep{i}"), sleeper.clone())).collect();
    let mut cfg = config(dir.path(), solvers, Duration::from_secs(2));
    cfg.workers = 20;
    let records = run_suite(&cfg).unwrap();
    assert_eq!(records.len(), 20);
    for r in &records {
        assert_eq!(r.status, Status::Timeout);
        assert!(r.wall_seconds >= 2.0 && r.wall_seconds <= 4.0, "{}", r.wall_seconds);
    }
}

#[test]
fn memory_limit_maps_to_crash() {
    let dir = tempfile::tempdir().unwrap();
    let hog = stub(dir.path(), "hog.sh", "exec python3 -c 'x = bytearray(512 << 20)'");
    let mut cfg = config(dir.path(), vec![cmd("hog", hog)], Duration::from_secs(30));
    cfg.memory_limit_mb = Some(64);
    assert_eq!(run_suite(&cfg).unwrap()[0].status, Status::Crash);
}

#[test]
fn unreadable_benchmark_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let marker = dir.path().join("ran");
    let touch = stub(dir.path(), "touch.sh", &format!("touch {}", marker.display()));
    let mut cfg = config(dir.path(), vec![cmd("t", touch)], Duration::from_secs(5));
    cfg.benchmarks.push(dir.path().join("absent.sl"));
    assert!(matches!(run_suite(&cfg), Err(HarnessError::Io { .. })));
    assert!(!marker.exists());
}

#[test]
fn record_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let records = vec![
        RunRecord {
            solver_id: "a".into(),
            benchmark_id: "x.sl".into(),
            status: Status::Solved,
            wall_seconds: 0.123456789,
            solution_text: Some("(define-fun f () Int \"q\")\n".into()),
            solution_size: Some(1),
        },
        RunRecord {
            solver_id: "b".into(),
            benchmark_id: "x.sl".into(),
            status: Status::Timeout,
            wall_seconds: 3600.0,
            solution_text: None,
            solution_size: None,
        },
    ];
    write_records(&path, &records).unwrap();
    assert_eq!(load_records(&path).unwrap(), records);

    std::fs::write(&path, "").unwrap();
    assert!(load_records(&path).unwrap().is_empty());

    let line = serde_json::to_string(&records[0]).unwrap();
    std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
    assert!(matches!(load_records(&path), Err(HarnessError::Duplicate { .. })));
    std::fs::write(&path, format!("{line}\n{{\"solver_id\": 1}}\n")).unwrap();
    assert!(matches!(load_records(&path), Err(HarnessError::Malformed { line: 2, .. })));
}

#[test]
fn config_file_expands_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("suite.conf");
    let desk_dir = desk("");
    std::fs::write(&cfg_path, format!("benchmark = {}\nsolver = ref: builtin\n", desk_dir.display())).unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.benchmarks.len(), 10);
    assert!(cfg.benchmarks.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(cfg.output_dir, dir.path().join("results"));
}
