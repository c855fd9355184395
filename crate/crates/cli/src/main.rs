use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sygus_core::harness::{load_records, run_suite, RunConfig, RECORDS_FILE};
use sygus_core::parser::parse_problem;
use sygus_core::printer::{print_candidates, print_problem, print_value};
use sygus_core::problem::Problem;
use sygus_core::report::{load_categories, report, Categories};
use sygus_core::smt::{SmtConfig, SmtSession};
use sygus_core::solver::{solve, Budget, SolveOutcome};
use sygus_core::verifier::{check_solution, Verdict};

#[derive(Parser)]
#[command(name = "sygus", version, about = "Parse, check, solve and score SyGuS problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalized problem.
    Parse { file: PathBuf },
    /// Check a solution: grammar membership, then validity.
    Check {
        benchmark: PathBuf,
        solution: PathBuf,
        /// SMT solver command (default: $SYGUS_SMT_SOLVER, then z3).
        #[arg(long)]
        smt_solver: Option<String>,
    },
    /// Run the reference solver and print the solution.
    Solve {
        benchmark: PathBuf,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 3600.0)]
        timeout: f64,
        /// Largest enumerated term size.
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        smt_solver: Option<String>,
    },
    /// Run the solvers of a suite configuration.
    Run {
        config: PathBuf,
        /// Overrides the configured wall limit (seconds).
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        smt_solver: Option<String>,
    },
    /// Print score cards for a record file.
    Score {
        records: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print category tables; with --out, also write details and plots.
    Report {
        records: PathBuf,
        /// `benchmark,category` sidecar.
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Unreadable inputs and bad flag values; they exit with 2 like usage errors.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

fn problem(path: &Path) -> Result<Problem> {
    let text = read(path)?;
    parse_problem(&text).with_context(|| format!("{}", path.display()))
}

fn seconds(s: f64) -> Result<Duration> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(InputError(format!("timeout must be positive, got {s}")).into());
    }
    Ok(Duration::from_secs_f64(s))
}

fn records_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(RECORDS_FILE)
    } else {
        p.to_path_buf()
    }
}

/// Returns whether the command succeeded in the domain sense.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Parse { file } => {
            print!("{}", print_problem(&problem(&file)?));
            Ok(true)
        }
        Command::Check { benchmark, solution, smt_solver } => {
            let p = problem(&benchmark)?;
            let text = read(&solution)?;
            let mut session = SmtSession::new(SmtConfig::resolve(smt_solver.as_deref()));
            let v = check_solution(&p, &text, &mut session)?;
            println!("{}", v.label());
            match &v {
                Verdict::Invalid(point) => {
                    for (name, value) in point {
                        println!("{name} = {}", print_value(value));
                    }
                }
                Verdict::Unknown(d) | Verdict::SyntacticReject(d) | Verdict::IllFormed(d) => println!("{d}"),
                Verdict::Valid => {}
            }
            Ok(v == Verdict::Valid)
        }
        Command::Solve { benchmark, timeout, max_size, smt_solver } => {
            let p = problem(&benchmark)?;
            let mut budget = Budget { wall: seconds(timeout)?, ..Budget::default() };
            if let Some(m) = max_size {
                budget.max_term_size = m;
            }
            let mut session = SmtSession::new(SmtConfig::resolve(smt_solver.as_deref()));
            let r = solve(&p, budget, &mut session)?;
            log::info!("{} rounds", r.stats.rounds);
            match r.outcome {
                SolveOutcome::Solved(c) => {
                    print!("{}", print_candidates(&c));
                    Ok(true)
                }
                other => {
                    eprintln!("no solution: {other:?}");
                    println!("unknown");
                    Ok(false)
                }
            }
        }
        Command::Run { config, timeout, jobs, out, max_size, smt_solver } => {
            read(&config)?;
            let mut cfg = RunConfig::load(&config)?;
            if let Some(t) = timeout {
                cfg.wall_limit = seconds(t)?;
            }
            if let Some(j) = jobs {
                cfg.workers = j;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if max_size.is_some() {
                cfg.max_size = max_size;
            }
            if smt_solver.is_some() {
                cfg.smt_solver = smt_solver;
            }
            let records = run_suite(&cfg)?;
            for r in &records {
                println!("{}\t{}\t{:?}\t{:.3}", r.solver_id, r.benchmark_id, r.status, r.wall_seconds);
            }
            eprintln!("records written to {}", cfg.output_dir.join(RECORDS_FILE).display());
            Ok(true)
        }
        Command::Score { records, format } => {
            read(&records_path(&records))?;
            let recs = load_records(&records_path(&records))?;
            let r = report(&recs, &Categories::new())?;
            match format {
                Format::Csv => print!("{}", r.cards_csv()),
                Format::Text => {
                    let w = r.cards.iter().map(|c| c.solver_id.len()).max().unwrap_or(0).max(6);
                    println!("{:<w$}  {:>5}  {:>5}  {:>5}  {:>6}  {:>6}", "solver", "N", "F", "S", "unique", "score");
                    for c in &r.cards {
                        println!(
                            "{:<w$}  {:>5}  {:>5}  {:>5}  {:>6}  {:>6}",
                            c.solver_id,
                            c.n,
                            c.f,
                            c.s,
                            c.unique,
                            c.score()
                        );
                    }
                }
                Format::Svg => bail!(InputError("score has no svg output; use report".into())),
            }
            Ok(true)
        }
        Command::Report { records, categories, format, out } => {
            read(&records_path(&records))?;
            let recs = load_records(&records_path(&records))?;
            let cats = match categories {
                Some(path) => {
                    read(&path)?;
                    load_categories(&path)?
                }
                None => Categories::new(),
            };
            let r = report(&recs, &cats)?;
            match format {
                Format::Csv => print!("{}", r.table_csv()),
                Format::Text => print!("{}", r.table_text()),
                Format::Svg => print!("{}", r.svg()),
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (name, body) in [
                    ("table.csv", r.table_csv()),
                    ("table.txt", r.table_text()),
                    ("scores.csv", r.cards_csv()),
                    ("details.csv", r.detail_csv()),
                    ("report.svg", r.svg()),
                ] {
                    let path = dir.join(name);
                    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
