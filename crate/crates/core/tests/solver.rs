use std::path::PathBuf;
use std::time::Duration;

use sygus_core::parser::parse_problem;
use sygus_core::printer::print_term;
use sygus_core::smt::{SmtConfig, SmtSession};
use sygus_core::solver::{solve, Budget, SolveError, SolveOutcome};
use sygus_core::verifier::{verify, Verdict};

fn desk(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/desk").join(format!("{name}.sl"));
    std::fs::read_to_string(path).unwrap()
}

fn budget(secs: u64) -> Budget {
    Budget { wall: Duration::from_secs(secs), ..Budget::default() }
}

#[test]
fn desk_suite() {
    let names = [
        "max2", "max3", "clia_cond", "bv_mask", "bv_shift", "str_firstname", "str_period", "inv_eq", "inv_bound",
        "hd_clear_lowest",
    ];
    let mut session = SmtSession::new(SmtConfig::default());
    let mut solved = 0;
    for name in names {
        let p = parse_problem(&desk(name)).unwrap();
        let report = solve(&p, budget(60), &mut session).unwrap();
        eprintln!("{name}: {:?} after {} rounds", report.outcome, report.stats.rounds);
        if let SolveOutcome::Solved(c) = report.outcome {
            assert_eq!(verify(&p, &c, &mut session).unwrap(), Verdict::Valid, "{name}");
            solved += 1;
        }
    }
    assert!(solved >= 8, "solved {solved}");
}

#[test]
fn pbe_increment() {
    let p = parse_problem(
        "(set-logic LIA)(synth-fun f ((x Int)) Int ((Start Int (x 0 1 (+ Start Start)))))
         (constraint (= (f 1) 2))(constraint (= (f 5) 6))(check-synth)",
    )
    .unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    let SolveOutcome::Solved(c) = solve(&p, budget(30), &mut session).unwrap().outcome else { panic!() };
    assert_eq!(print_term(&c[0].body), "(+ x 1)");
}

#[test]
fn unreachable_target_exhausts() {
    let p = parse_problem(
        "(set-logic LIA)(synth-fun f ((x Int)) Int ((Start Int (0))))
         (declare-var x Int)(constraint (= (f x) x))(check-synth)",
    )
    .unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    assert_eq!(solve(&p, budget(30), &mut session).unwrap().outcome, SolveOutcome::Exhausted);
}

#[test]
fn counterexamples_are_fresh_and_refuting() {
    let p = parse_problem(&desk("max3")).unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    let report = solve(&p, budget(60), &mut session).unwrap();
    let cex = &report.stats.counterexamples;
    for (i, a) in cex.iter().enumerate() {
        assert!(!cex[..i].contains(a));
    }
    assert_eq!(report.stats.rounds, cex.len() + 1);
}

#[test]
fn no_predicates_means_single_terms() {
    let p = parse_problem(&desk("max2")).unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    // every single term of size <= 5 fails somewhere, so only a tree works
    let with = Budget { max_term_size: 5, ..budget(30) };
    assert!(matches!(solve(&p, with, &mut session).unwrap().outcome, SolveOutcome::Solved(_)));
    let without = Budget { max_pred_size: 0, ..with };
    assert_eq!(solve(&p, without, &mut session).unwrap().outcome, SolveOutcome::Exhausted);
}

#[test]
fn zero_budget_times_out() {
    let p = parse_problem(&desk("max3")).unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    let b = Budget { wall: Duration::ZERO, ..Budget::default() };
    assert_eq!(solve(&p, b, &mut session).unwrap().outcome, SolveOutcome::TimedOut);
}

#[test]
fn two_functions_are_rejected() {
    let p = parse_problem(
        "(set-logic LIA)(synth-fun f ((x Int)) Int)(synth-fun g ((x Int)) Int)
         (declare-var x Int)(constraint (= (f x) (g x)))(check-synth)",
    )
    .unwrap();
    let mut session = SmtSession::new(SmtConfig::default());
    assert!(matches!(solve(&p, budget(5), &mut session), Err(SolveError::MultipleFunctions(2))));
}
