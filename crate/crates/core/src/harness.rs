//! Runs solvers over benchmark suites under a wall-clock limit, checks every
//! claimed solution and appends one record per (solver, benchmark) pair.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::parser::{parse_candidate, parse_problem};
use crate::printer::print_candidates;
use crate::problem::Problem;
use crate::smt::{SmtConfig, SmtSession};
use crate::solver::{solve, Budget, SolveOutcome};
use crate::verifier::{check_solution, Verdict};

/// Extra time a killed solver gets before its record is written.
pub const GRACE: Duration = Duration::from_secs(2);
pub const DEFAULT_WALL_LIMIT: Duration = Duration::from_secs(3600);
pub const RECORDS_FILE: &str = "records.jsonl";
pub const RECORDS_CSV: &str = "records.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Solved,
    SyntacticReject,
    SemanticReject,
    IllFormed,
    Timeout,
    Crash,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver_id: String,
    pub benchmark_id: String,
    pub status: Status,
    pub wall_seconds: f64,
    pub solution_text: Option<String>,
    pub solution_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Invocation {
    /// Shell command; `{benchmark}` is replaced by the quoted path, or the
    /// path is appended when the placeholder is absent.
    Command(String),
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverSpec {
    pub id: String,
    pub invocation: Invocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub benchmarks: Vec<PathBuf>,
    pub solvers: Vec<SolverSpec>,
    pub wall_limit: Duration,
    /// Address-space cap for external solvers, in MiB.
    pub memory_limit_mb: Option<u64>,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub smt_solver: Option<String>,
    /// Term size cap for the builtin solver.
    pub max_size: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            benchmarks: Vec::new(),
            solvers: Vec::new(),
            wall_limit: DEFAULT_WALL_LIMIT,
            memory_limit_mb: None,
            workers: 1,
            output_dir: PathBuf::from("results"),
            smt_solver: None,
            max_size: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("benchmark {path}: {message}")]
    Benchmark { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate record for solver `{solver}` on benchmark `{benchmark}`")]
    Duplicate { solver: String, benchmark: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// `*.sl` files of a directory, sorted; a file stands for itself.
fn expand_benchmark(path: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io_err(path))? {
        let p = entry.map_err(io_err(path))?.path();
        if p.extension().is_some_and(|e| e == "sl") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

impl RunConfig {
    /// Parses `key = value` lines (`#` starts a comment). Keys: `benchmark`
    /// (repeatable, file or directory), `solver` (`id: command` or
    /// `id: builtin`), `wall_limit` (seconds), `memory_limit_mb`, `workers`,
    /// `output_dir`, `smt_solver`, `max_size`. Relative paths resolve
    /// against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, HarnessError> {
        let mut cfg = RunConfig { output_dir: base.join("results"), ..RunConfig::default() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Config { line, message };
            let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` needs a positive integer, got `{v}`")));
            match key {
                "benchmark" => cfg.benchmarks.extend(expand_benchmark(&base.join(value))?),
                "solver" => {
                    let (id, cmd) = value.split_once(':').ok_or_else(|| err("expected `solver = id: command`".into()))?;
                    let (id, cmd) = (id.trim(), cmd.trim());
                    if id.is_empty() || cmd.is_empty() {
                        return Err(err("solver id and command must be non-empty".into()));
                    }
                    let invocation =
                        if cmd == "builtin" { Invocation::Builtin } else { Invocation::Command(cmd.to_string()) };
                    cfg.solvers.push(SolverSpec { id: id.to_string(), invocation });
                }
                "wall_limit" => {
                    let secs: f64 = value.parse().map_err(|_| err(format!("bad wall_limit `{value}`")))?;
                    if !(secs > 0.0 && secs.is_finite()) {
                        return Err(err("wall_limit must be positive".into()));
                    }
                    cfg.wall_limit = Duration::from_secs_f64(secs);
                }
                "memory_limit_mb" => cfg.memory_limit_mb = Some(number(value)?),
                "workers" => cfg.workers = number(value)? as usize,
                "output_dir" => cfg.output_dir = base.join(value),
                "smt_solver" => cfg.smt_solver = Some(value.to_string()),
                "max_size" => cfg.max_size = Some(number(value)? as usize),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Invalid(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.wall_limit.is_zero() {
            return bad("wall_limit must be positive");
        }
        if self.memory_limit_mb == Some(0) || self.max_size == Some(0) {
            return bad("limits must be positive");
        }
        let mut ids = HashSet::new();
        for s in &self.solvers {
            if !ids.insert(&s.id) {
                return Err(HarnessError::Invalid(format!("solver id `{}` used twice", s.id)));
            }
        }
        let mut names = HashSet::new();
        for b in &self.benchmarks {
            if !names.insert(benchmark_id(b)) {
                return Err(HarnessError::Invalid(format!("benchmark name `{}` used twice", benchmark_id(b))));
            }
        }
        Ok(())
    }
}

/// File name of a benchmark path; records refer to benchmarks by it.
pub fn benchmark_id(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

struct ProcessRun {
    stdout: String,
    success: bool,
    timed_out: bool,
    wall: Duration,
}

/// Spawns the command in its own process group so that a timeout kills
/// everything it started.
fn run_process(template: &str, bench: &Path, limit: Duration, memory_mb: Option<u64>) -> std::io::Result<ProcessRun> {
    let quoted = shell_quote(&bench.to_string_lossy());
    let line = if template.contains("{benchmark}") {
        template.replace("{benchmark}", &quoted)
    } else {
        format!("{template} {quoted}")
    };
    let mut cmd = Command::new("sh");
    cmd.arg("-c").arg(&line).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::null());
    cmd.process_group(0);
    if let Some(mb) = memory_mb {
        let bytes = mb.saturating_mul(1 << 20) as libc::rlim_t;
        // SAFETY: setrlimit is async-signal-safe and touches no shared state.
        unsafe {
            cmd.pre_exec(move || {
                let lim = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;
    let mut out = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out.read_to_end(&mut buf);
        buf
    });
    let deadline = start + limit;
    let (status, timed_out) = loop {
        if let Some(s) = child.try_wait()? {
            break (Some(s), false);
        }
        if Instant::now() >= deadline {
            // SAFETY: the group id is the child's pid, created above.
            unsafe {
                libc::killpg(pid, libc::SIGKILL);
            }
            let _ = child.wait();
            break (None, true);
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let wall = start.elapsed();
    if timed_out {
        // Grandchildren holding the pipe are gone with the group.
        let _ = reader.join();
        return Ok(ProcessRun { stdout: String::new(), success: false, timed_out, wall });
    }
    let stdout = String::from_utf8_lossy(&reader.join().unwrap_or_default()).into_owned();
    Ok(ProcessRun { stdout, success: status.is_some_and(|s| s.success()), timed_out, wall })
}

fn solution_size(p: &Problem, text: &str) -> Option<usize> {
    parse_candidate(text, p).ok().map(|cs| cs.iter().map(|c| c.body.size()).sum())
}

/// Status of a finished solver output, after both checking stages.
pub fn classify_output(p: &Problem, output: &str, session: &mut SmtSession) -> (Status, Option<String>, Option<usize>) {
    let text = output.trim();
    if text == "unknown" || text.starts_with("(fail") {
        return (Status::Unknown, None, None);
    }
    let status = match check_solution(p, text, session) {
        Ok(Verdict::Valid) => Status::Solved,
        Ok(Verdict::Invalid(_)) => Status::SemanticReject,
        Ok(Verdict::Unknown(_)) => Status::Unknown,
        Ok(Verdict::SyntacticReject(_)) => Status::SyntacticReject,
        Ok(Verdict::IllFormed(_)) => Status::IllFormed,
        Err(e) => {
            log::warn!("verification failed: {e}");
            Status::Unknown
        }
    };
    let solution = (!text.is_empty()).then(|| text.to_string());
    (status, solution, solution_size(p, text))
}

struct Job<'a> {
    solver: &'a SolverSpec,
    path: &'a Path,
    problem: &'a Problem,
}

fn run_job(job: &Job, cfg: &RunConfig, session: &mut SmtSession) -> RunRecord {
    let mut rec = RunRecord {
        solver_id: job.solver.id.clone(),
        benchmark_id: benchmark_id(job.path),
        status: Status::Crash,
        wall_seconds: 0.0,
        solution_text: None,
        solution_size: None,
    };
    match &job.solver.invocation {
        Invocation::Command(template) => match run_process(template, job.path, cfg.wall_limit, cfg.memory_limit_mb) {
            Err(e) => log::warn!("{}: cannot start `{template}`: {e}", rec.solver_id),
            Ok(run) => {
                rec.wall_seconds = run.wall.as_secs_f64();
                if run.timed_out {
                    rec.status = Status::Timeout;
                } else if !run.success && run.stdout.trim().is_empty() {
                    rec.status = Status::Crash;
                } else {
                    (rec.status, rec.solution_text, rec.solution_size) =
                        classify_output(job.problem, &run.stdout, session);
                }
            }
        },
        Invocation::Builtin => {
            let mut budget = Budget { wall: cfg.wall_limit, ..Budget::default() };
            if let Some(m) = cfg.max_size {
                budget.max_term_size = m;
            }
            let start = Instant::now();
            let result = solve(job.problem, budget, session);
            rec.wall_seconds = start.elapsed().as_secs_f64();
            match result {
                Ok(r) => match r.outcome {
                    SolveOutcome::Solved(c) => {
                        (rec.status, rec.solution_text, rec.solution_size) =
                            classify_output(job.problem, &print_candidates(&c), session)
                    }
                    SolveOutcome::Exhausted => rec.status = Status::Unknown,
                    SolveOutcome::TimedOut => rec.status = Status::Timeout,
                },
                Err(e) => log::warn!("{} on {}: {e}", rec.solver_id, rec.benchmark_id),
            }
            if rec.wall_seconds > cfg.wall_limit.as_secs_f64() {
                rec.status = Status::Timeout;
            }
        }
    }
    log::info!("{} {} {:?} {:.2}s", rec.solver_id, rec.benchmark_id, rec.status, rec.wall_seconds);
    rec
}

/// Runs every solver on every benchmark with `cfg.workers` threads, each
/// with its own SMT session. Records are appended to
/// `output_dir/records.jsonl` as they finish, then exported as CSV. The
/// returned list is in (solver, benchmark) order.
pub fn run_suite(cfg: &RunConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let mut problems = Vec::new();
    for path in &cfg.benchmarks {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let p = parse_problem(&text)
            .map_err(|e| HarnessError::Benchmark { path: path.clone(), message: e.to_string() })?;
        problems.push(p);
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let jsonl = cfg.output_dir.join(RECORDS_FILE);
    let mut sink = File::create(&jsonl).map_err(io_err(&jsonl))?;

    let jobs: Vec<Job> = cfg
        .solvers
        .iter()
        .flat_map(|s| cfg.benchmarks.iter().zip(&problems).map(move |(path, problem)| Job { solver: s, path, problem }))
        .collect();
    let queue = Mutex::new(0..jobs.len());
    let smt = SmtConfig::resolve(cfg.smt_solver.as_deref());
    let mut slots: Vec<Option<RunRecord>> = vec![None; jobs.len()];
    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        for _ in 0..cfg.workers.min(jobs.len().max(1)) {
            let tx = tx.clone();
            let (jobs, queue, smt) = (&jobs, &queue, smt.clone());
            scope.spawn(move || {
                let mut session = SmtSession::new(smt);
                loop {
                    let next = queue.lock().expect("queue lock").next();
                    let Some(i) = next else { break };
                    if tx.send((i, run_job(&jobs[i], cfg, &mut session))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        for (i, rec) in rx {
            let line = serde_json::to_string(&rec).expect("record serializes");
            writeln!(sink, "{line}").and_then(|_| sink.flush()).map_err(io_err(&jsonl))?;
            slots[i] = Some(rec);
        }
        Ok(())
    })?;
    let records: Vec<RunRecord> = slots.into_iter().flatten().collect();
    write_csv(&cfg.output_dir.join(RECORDS_CSV), &records)?;
    Ok(records)
}

/// Reads a JSON-lines record file. Blank lines are skipped.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord =
            serde_json::from_str(&line).map_err(|e| HarnessError::Malformed { line: i + 1, message: e.to_string() })?;
        if !(rec.wall_seconds >= 0.0 && rec.wall_seconds.is_finite()) {
            return Err(HarnessError::Malformed { line: i + 1, message: "wall_seconds must be nonnegative".into() });
        }
        if rec.solution_size == Some(0) {
            return Err(HarnessError::Malformed { line: i + 1, message: "solution_size must be positive".into() });
        }
        if !seen.insert((rec.solver_id.clone(), rec.benchmark_id.clone())) {
            return Err(HarnessError::Duplicate { solver: rec.solver_id, benchmark: rec.benchmark_id });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes records as JSON lines, replacing the file.
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut f = OpenOptions::new().write(true).create(true).truncate(true).open(path).map_err(io_err(path))?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io_err(path))?;
    }
    Ok(())
}

/// CSV export with the same columns as the JSON records.
pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(["solver_id", "benchmark_id", "status", "wall_seconds", "solution_text", "solution_size"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
