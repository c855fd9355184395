#![allow(dead_code)]

pub mod oracle;

use sygus_core::harness::{RunRecord, Status};
use sygus_core::report::Categories;

pub const GENERAL_SOLVERS: [&str; 3] = ["CVC4_2018", "EUSolver_2017", "CVC4_2017"];

pub const GENERAL_CATEGORIES: [&str; 12] = [
    "Compiler Optimizations and Bit Vectors",
    "Let and Motion Planning",
    "Invariant Generation with Bounded Ints",
    "Invariant Generation with Unbounded Ints",
    "Multiple Functions",
    "Arrays",
    "Hackers Delight",
    "Integers",
    "Program Repair",
    "ICFP",
    "Cryptographic Circuits",
    "Instruction Selection",
];

pub const GENERAL_SIZES: [usize; 12] = [32, 30, 28, 28, 32, 35, 69, 34, 18, 50, 214, 28];

/// Solved, fastest and uniquely-solved rows per solver, per category.
pub const GENERAL_SOLVED: [[usize; 12]; 3] = [
    [16, 17, 24, 24, 13, 31, 62, 34, 17, 50, 160, 0],
    [16, 10, 24, 23, 18, 31, 53, 33, 14, 50, 148, 0],
    [15, 15, 24, 24, 12, 31, 62, 34, 17, 48, 116, 0],
];
pub const GENERAL_FASTEST: [[usize; 12]; 3] = [
    [15, 15, 22, 24, 9, 31, 59, 33, 16, 23, 119, 0],
    [13, 1, 12, 11, 14, 5, 29, 15, 12, 45, 109, 0],
    [12, 9, 16, 14, 9, 24, 60, 33, 6, 20, 49, 0],
];
pub const GENERAL_UNIQUE: [[usize; 12]; 3] = [
    [1, 2, 0, 0, 0, 0, 0, 0, 2, 0, 7, 0],
    [3, 0, 0, 0, 6, 0, 0, 0, 0, 0, 0, 0],
    [0; 12],
];

/// The uniquely-solved row as realized by the fixture. Program Repair
/// cannot hold 2 benchmarks unique to CVC4_2018 while CVC4_2017 solves 17 of
/// its 18, so those two move to Cryptographic Circuits; totals are kept.
pub const FIXTURE_UNIQUE: [[usize; 12]; 3] = [
    [1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 9, 0],
    [3, 0, 0, 0, 6, 0, 0, 0, 0, 0, 0, 0],
    [0; 12],
];

pub const CLIA_SOLVERS: [&str; 3] = ["CVC4_2018", "DryadSynth", "EUSolver_2017"];
pub const CLIA_SIZE: usize = 88;
pub const CLIA_SOLVED: [usize; 3] = [85, 84, 81];
pub const CLIA_FASTEST: [usize; 3] = [74, 79, 29];
pub const CLIA_UNIQUE: [usize; 3] = [1, 2, 0];

const FAST: f64 = 0.5;
const SLOW: f64 = 2.0;

/// Benchmarks of one category as lists of (solver index, is_fastest).
/// Unique benchmarks come first; the shared ones are split into pairs and
/// triples so that every solver reaches its solved count, then fastest
/// marks are handed out greedily.
fn category(solved: [usize; 3], fastest: [usize; 3], unique: [usize; 3], n: usize) -> Vec<Vec<(usize, bool)>> {
    let mut benches: Vec<Vec<(usize, bool)>> = Vec::new();
    for (i, &u) in unique.iter().enumerate() {
        benches.extend(std::iter::repeat_n(vec![(i, true)], u));
    }
    // as many triples as possible keeps the benchmark count low
    let r: Vec<i64> = (0..3).map(|i| (solved[i] - unique[i]) as i64).collect();
    let (triples, ab, ac, bc) = (0..=*r.iter().min().unwrap())
        .rev()
        .find_map(|t| {
            let s: Vec<i64> = r.iter().map(|x| x - t).collect();
            let sum: i64 = s.iter().sum();
            let pairs = ((s[0] + s[1] - s[2]) / 2, (s[0] + s[2] - s[1]) / 2, (s[1] + s[2] - s[0]) / 2);
            (sum % 2 == 0 && pairs.0 >= 0 && pairs.1 >= 0 && pairs.2 >= 0).then_some((t, pairs.0, pairs.1, pairs.2))
        })
        .unwrap_or_else(|| panic!("no pair/triple split for {r:?}"));
    let shared_start = benches.len();
    for (members, count) in [(vec![0, 1, 2], triples), (vec![0, 1], ab), (vec![0, 2], ac), (vec![1, 2], bc)] {
        for _ in 0..count {
            benches.push(members.iter().map(|&s| (s, false)).collect());
        }
    }
    let mut left: Vec<i64> = (0..3).map(|i| (fastest[i] - unique[i]) as i64).collect();
    // one fastest solver per shared benchmark, scarcest budget last
    for b in &mut benches[shared_start..] {
        let pick = b.iter().map(|(s, _)| *s).max_by_key(|s| (left[*s], std::cmp::Reverse(*s))).unwrap();
        assert!(left[pick] > 0, "fastest budget exhausted");
        left[pick] -= 1;
        b.iter_mut().find(|(s, _)| *s == pick).unwrap().1 = true;
    }
    for b in &mut benches[shared_start..] {
        for (s, fast) in b.iter_mut() {
            if !*fast && left[*s] > 0 {
                left[*s] -= 1;
                *fast = true;
            }
        }
    }
    assert_eq!(left, [0, 0, 0], "fastest counts not reachable");
    assert!(benches.len() <= n, "{} benchmarks needed, {n} available", benches.len());
    benches.resize(n, Vec::new());
    benches
}

/// Per benchmark: the solvers that solve it and whether each is fastest.
type Category = (String, Vec<Vec<(usize, bool)>>);

fn records_for(solvers: &[&str], cats: &[Category]) -> (Vec<RunRecord>, Categories) {
    let mut records = Vec::new();
    let mut categories = Categories::new();
    for (ci, (cat, benches)) in cats.iter().enumerate() {
        for (bi, b) in benches.iter().enumerate() {
            let id = format!("c{ci:02}_b{bi:03}.sl");
            categories.insert(id.clone(), cat.clone());
            for (si, solver) in solvers.iter().enumerate() {
                let run = b.iter().find(|(s, _)| *s == si);
                records.push(RunRecord {
                    solver_id: solver.to_string(),
                    benchmark_id: id.clone(),
                    status: if run.is_some() { Status::Solved } else { Status::Timeout },
                    wall_seconds: match run {
                        Some((_, true)) => FAST,
                        Some((_, false)) => SLOW,
                        None => 3600.0,
                    },
                    solution_text: run.map(|_| "(define-fun f () Int 0)".to_string()),
                    solution_size: run.map(|_| 1),
                });
            }
        }
    }
    (records, categories)
}

pub fn general_fixture() -> (Vec<RunRecord>, Categories) {
    let col = |t: &[[usize; 12]; 3], c: usize| [t[0][c], t[1][c], t[2][c]];
    let cats: Vec<_> = (0..12)
        .map(|c| {
            let benches =
                category(col(&GENERAL_SOLVED, c), col(&GENERAL_FASTEST, c), col(&FIXTURE_UNIQUE, c), GENERAL_SIZES[c]);
            (GENERAL_CATEGORIES[c].to_string(), benches)
        })
        .collect();
    records_for(&GENERAL_SOLVERS, &cats)
}

pub fn clia_fixture() -> (Vec<RunRecord>, Categories) {
    let benches = category(CLIA_SOLVED, CLIA_FASTEST, CLIA_UNIQUE, CLIA_SIZE);
    records_for(&CLIA_SOLVERS, &[("CLIA".to_string(), benches)])
}
