//! Competition metrics: pseudo-logarithmic buckets, per-solver score cards
//! and per-benchmark details.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;

use crate::harness::{RunRecord, Status};

/// Upper edges of the time buckets, in seconds; the last bucket is open.
pub const TIME_EDGES: [f64; 8] = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3600.0];
/// Upper edges of the size buckets; the last bucket is open.
pub const SIZE_EDGES: [usize; 5] = [10, 30, 100, 300, 1000];

/// Index of the half-open interval holding `seconds` (0..=8). Negative and
/// NaN inputs fall in the first bucket.
pub fn time_bucket(seconds: f64) -> usize {
    TIME_EDGES.iter().take_while(|&&e| e <= seconds).count()
}

/// Index of the half-open interval holding `size` (0..=5).
pub fn size_bucket(size: usize) -> usize {
    SIZE_EDGES.iter().take_while(|&&e| e <= size).count()
}

fn label(lower: &[String], upper: &[String], i: usize) -> String {
    match upper.get(i) {
        Some(u) => format!("[{},{u})", lower[i]),
        None => format!("≥{}", lower[i]),
    }
}

pub fn time_bucket_label(i: usize) -> String {
    let lower: Vec<String> = std::iter::once(0.0).chain(TIME_EDGES).map(|e| e.to_string()).collect();
    label(&lower, &lower[1..], i)
}

pub fn size_bucket_label(i: usize) -> String {
    let lower: Vec<String> = std::iter::once(1).chain(SIZE_EDGES).map(|e| e.to_string()).collect();
    label(&lower, &lower[1..], i)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreCard {
    pub solver_id: String,
    /// Benchmarks solved.
    pub n: usize,
    /// Solved within the fastest time bucket.
    pub f: usize,
    /// Solved within the smallest size bucket.
    pub s: usize,
    /// Solved by no other solver.
    pub unique: usize,
}

impl ScoreCard {
    pub fn score(&self) -> usize {
        5 * self.n + 3 * self.f + self.s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkDetail {
    pub benchmark_id: String,
    pub solver_count: usize,
    pub min_time: Option<f64>,
    pub max_time: Option<f64>,
    pub min_size: Option<usize>,
    pub max_size: Option<usize>,
    pub fastest: Vec<String>,
    pub smallest: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub cards: Vec<ScoreCard>,
    pub details: Vec<BenchmarkDetail>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("duplicate record for solver `{solver}` on benchmark `{benchmark}`")]
    Duplicate { solver: String, benchmark: String },
}

/// Scores records. Solvers and benchmarks keep their order of first
/// appearance. Only Solved records count; the fastest and smallest sets of
/// a benchmark are taken among the solvers that solved it.
pub fn score(records: &[RunRecord]) -> Result<Scores, ScoreError> {
    let mut seen = HashSet::new();
    let mut cards: IndexMap<&str, ScoreCard> = IndexMap::new();
    let mut by_bench: IndexMap<&str, Vec<&RunRecord>> = IndexMap::new();
    for r in records {
        if !seen.insert((&r.solver_id, &r.benchmark_id)) {
            return Err(ScoreError::Duplicate { solver: r.solver_id.clone(), benchmark: r.benchmark_id.clone() });
        }
        cards.entry(&r.solver_id).or_insert_with(|| ScoreCard {
            solver_id: r.solver_id.clone(),
            n: 0,
            f: 0,
            s: 0,
            unique: 0,
        });
        by_bench.entry(&r.benchmark_id).or_default().push(r);
    }
    let mut details = Vec::with_capacity(by_bench.len());
    for (bench, runs) in by_bench {
        let solved: Vec<&RunRecord> = runs.into_iter().filter(|r| r.status == Status::Solved).collect();
        let times = solved.iter().map(|r| r.wall_seconds);
        let sizes: Vec<usize> = solved.iter().filter_map(|r| r.solution_size).collect();
        let min_time = times.clone().reduce(f64::min);
        let max_time = times.reduce(f64::max);
        let fastest: Vec<String> = match min_time {
            Some(t) => solved
                .iter()
                .filter(|r| time_bucket(r.wall_seconds) == time_bucket(t))
                .map(|r| r.solver_id.clone())
                .collect(),
            None => Vec::new(),
        };
        let min_size = sizes.iter().copied().min();
        let smallest: Vec<String> = match min_size {
            Some(m) => solved
                .iter()
                .filter(|r| r.solution_size.is_some_and(|s| size_bucket(s) == size_bucket(m)))
                .map(|r| r.solver_id.clone())
                .collect(),
            None => Vec::new(),
        };
        for r in &solved {
            let card = &mut cards[r.solver_id.as_str()];
            card.n += 1;
            card.f += usize::from(fastest.contains(&r.solver_id));
            card.s += usize::from(smallest.contains(&r.solver_id));
            card.unique += usize::from(solved.len() == 1);
        }
        details.push(BenchmarkDetail {
            benchmark_id: bench.to_string(),
            solver_count: solved.len(),
            min_time,
            max_time,
            min_size,
            max_size: sizes.iter().copied().max(),
            fastest,
            smallest,
        });
    }
    Ok(Scores { cards: cards.into_values().collect(), details })
}
