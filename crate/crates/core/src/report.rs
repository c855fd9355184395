//! Per-category Solved/Fastest/Uniquely tables, per-benchmark detail CSV and
//! SVG plots of the detail data.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use crate::harness::{RunRecord, Status};
use crate::scoring::{score, size_bucket, time_bucket, BenchmarkDetail, ScoreCard, ScoreError, SIZE_EDGES};

pub const UNCATEGORIZED: &str = "uncategorized";
const INFINITY: &str = "∞";

/// Benchmark id to category name, in file order.
pub type Categories = IndexMap<String, String>;

#[derive(Debug, thiserror::Error)]
pub enum CategoryError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Reads a sidecar of `benchmark,category` lines. Blank lines and lines
/// starting with `#` are skipped; a first line `benchmark,category` is a
/// header.
pub fn load_categories(path: &Path) -> Result<Categories, CategoryError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CategoryError::Io { path: path.display().to_string(), source })?;
    parse_categories(&text)
}

pub fn parse_categories(text: &str) -> Result<Categories, CategoryError> {
    let mut out = Categories::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == "benchmark,category") {
            continue;
        }
        let malformed = |message: &str| CategoryError::Malformed { line: i + 1, message: message.to_string() };
        let (bench, cat) = line.split_once(',').ok_or_else(|| malformed("expected `benchmark,category`"))?;
        let (bench, cat) = (bench.trim(), cat.trim());
        if bench.is_empty() || cat.is_empty() {
            return Err(malformed("empty field"));
        }
        if out.insert(bench.to_string(), cat.to_string()).is_some() {
            return Err(malformed("benchmark listed twice"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub solvers: Vec<String>,
    /// Categories holding at least one benchmark, sidecar order first.
    pub categories: Vec<String>,
    /// `[solver][category]` counts.
    pub solved: Vec<Vec<usize>>,
    pub fastest: Vec<Vec<usize>>,
    pub unique: Vec<Vec<usize>>,
    pub cards: Vec<ScoreCard>,
    pub details: Vec<(BenchmarkDetail, String)>,
}

/// Builds the report bundle. Benchmarks missing from `categories` go to
/// "uncategorized", which is listed last.
pub fn report(records: &[RunRecord], categories: &Categories) -> Result<Report, ScoreError> {
    let scores = score(records)?;
    let cat_of = |b: &str| categories.get(b).map_or(UNCATEGORIZED, String::as_str).to_string();
    let present: Vec<String> = scores.details.iter().map(|d| cat_of(&d.benchmark_id)).collect();
    let mut order: Vec<String> = Vec::new();
    for c in categories.values().chain(std::iter::once(&UNCATEGORIZED.to_string())) {
        if present.contains(c) && !order.contains(c) {
            order.push(c.clone());
        }
    }
    let solvers: Vec<String> = scores.cards.iter().map(|c| c.solver_id.clone()).collect();
    let zero = vec![vec![0; order.len()]; solvers.len()];
    let (mut solved, mut fastest, mut unique) = (zero.clone(), zero.clone(), zero);
    let solved_pairs: std::collections::HashSet<(&str, &str)> = records
        .iter()
        .filter(|r| r.status == Status::Solved)
        .map(|r| (r.solver_id.as_str(), r.benchmark_id.as_str()))
        .collect();
    let mut details = Vec::with_capacity(scores.details.len());
    for (d, cat) in scores.details.into_iter().zip(present) {
        let ci = order.iter().position(|c| *c == cat).expect("category collected");
        for (si, s) in solvers.iter().enumerate() {
            if solved_pairs.contains(&(s.as_str(), d.benchmark_id.as_str())) {
                solved[si][ci] += 1;
                fastest[si][ci] += usize::from(d.fastest.contains(s));
                unique[si][ci] += usize::from(d.solver_count == 1);
            }
        }
        details.push((d, cat));
    }
    Ok(Report { solvers, categories: order, solved, fastest, unique, cards: scores.cards, details })
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn floor_secs(t: f64) -> String {
    format!("{}", t.floor() as u64)
}

fn shown_size(s: usize) -> String {
    if s > 1000 {
        INFINITY.into()
    } else {
        s.to_string()
    }
}

impl Report {
    fn rows(&self) -> Vec<(String, &'static str, Vec<usize>)> {
        let mut rows = Vec::new();
        for (si, s) in self.solvers.iter().enumerate() {
            for (metric, table) in [("Solved", &self.solved), ("Fastest", &self.fastest), ("Uniquely", &self.unique)] {
                let mut cells = table[si].clone();
                cells.push(cells.iter().sum());
                rows.push((s.clone(), metric, cells));
            }
        }
        rows
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["solver".to_string(), "metric".to_string()];
        h.extend(self.categories.iter().cloned());
        h.push("Total".into());
        h
    }

    /// One row per (solver, metric), one column per category plus Total.
    pub fn table_csv(&self) -> String {
        let mut out = csv_line(&self.header());
        for (s, m, cells) in self.rows() {
            let mut f = vec![s, m.to_string()];
            f.extend(cells.iter().map(usize::to_string));
            out.push_str(&csv_line(&f));
        }
        out
    }

    pub fn table_text(&self) -> String {
        let mut grid = vec![self.header()];
        for (s, m, cells) in self.rows() {
            let mut f = vec![s, m.to_string()];
            f.extend(cells.iter().map(usize::to_string));
            grid.push(f);
        }
        let widths: Vec<usize> =
            (0..grid[0].len()).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &grid {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| if c < 2 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Score cards as CSV: solver, N, F, S, unique, score.
    pub fn cards_csv(&self) -> String {
        let mut out = csv_line(&["solver", "N", "F", "S", "unique", "score"].map(String::from));
        for c in &self.cards {
            out.push_str(&csv_line(&[
                c.solver_id.clone(),
                c.n.to_string(),
                c.f.to_string(),
                c.s.to_string(),
                c.unique.to_string(),
                c.score().to_string(),
            ]));
        }
        out
    }

    /// Per-benchmark rows. Times are floored to whole seconds; the maximum
    /// time of a benchmark nobody solved and sizes above 1000 show as ∞.
    pub fn detail_csv(&self) -> String {
        let mut out = csv_line(
            &[
                "benchmark",
                "category",
                "solvers_solved",
                "min_time",
                "max_time",
                "min_size",
                "max_size",
                "fastest_solvers",
                "smallest_solvers",
            ]
            .map(String::from),
        );
        for (d, cat) in &self.details {
            out.push_str(&csv_line(&[
                d.benchmark_id.clone(),
                cat.clone(),
                d.solver_count.to_string(),
                d.min_time.map(floor_secs).unwrap_or_default(),
                d.max_time.map_or_else(|| INFINITY.to_string(), floor_secs),
                d.min_size.map(shown_size).unwrap_or_default(),
                d.max_size.map(shown_size).unwrap_or_default(),
                d.fastest.join(";"),
                d.smallest.join(";"),
            ]));
        }
        out
    }

    /// One panel per category. Per benchmark: the time range as a black bar
    /// above the axis and the size range as a gray bar below it, both on
    /// the bucket scale, with fastest/smallest solvers marked by colored
    /// squares and the number of solvers on top.
    pub fn svg(&self) -> String {
        const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
        const COL: f64 = 28.0;
        const UNIT: f64 = 16.0;
        const LEFT: f64 = 60.0;
        let color = |s: &str| PALETTE[self.solvers.iter().position(|x| x == s).unwrap_or(0) % PALETTE.len()];
        let marker_rows = self.solvers.len() as f64 * 6.0;
        let time_h = 9.0 * UNIT;
        let size_h = (SIZE_EDGES.len() + 1) as f64 * UNIT;
        let panel_h = 40.0 + time_h + 2.0 * marker_rows + size_h + 50.0;
        let widest = self
            .categories
            .iter()
            .map(|c| self.details.iter().filter(|(_, dc)| dc == c).count())
            .max()
            .unwrap_or(0);
        let width = LEFT + widest as f64 * COL + 20.0;
        let legend_h = 30.0;
        let height = legend_h + panel_h * self.categories.len() as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="9">"#
        );
        for (i, s) in self.solvers.iter().enumerate() {
            let x = 10.0 + i as f64 * 140.0;
            let _ = writeln!(out, r#"<rect x="{x}" y="8" width="10" height="10" fill="{}"/>"#, color(s));
            let _ = writeln!(out, r#"<text x="{}" y="17">{}</text>"#, x + 14.0, xml_escape(s));
        }
        for (pi, cat) in self.categories.iter().enumerate() {
            let top = legend_h + pi as f64 * panel_h;
            let axis = top + 40.0 + time_h;
            let _ = writeln!(out, r#"<text x="4" y="{}" font-size="11" font-weight="bold">{}</text>"#, top + 12.0, xml_escape(cat));
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{axis}" x2="{}" y2="{axis}" stroke="#000"/>"##,
                width - 10.0
            );
            for (bi, (d, _)) in self.details.iter().filter(|(_, c)| c == cat).enumerate() {
                let x = LEFT + bi as f64 * COL;
                let mid = x + COL / 2.0;
                let _ = writeln!(out, r#"<text x="{mid}" y="{}" text-anchor="middle">{}</text>"#, top + 26.0, d.solver_count);
                if let (Some(lo), Some(hi)) = (d.min_time, d.max_time) {
                    let (a, b) = (time_bucket(lo) as f64, time_bucket(hi) as f64 + 1.0);
                    let y = axis - b * UNIT;
                    let _ = writeln!(
                        out,
                        r##"<rect x="{}" y="{y}" width="{}" height="{}" fill="#000"/>"##,
                        x + 4.0,
                        COL - 8.0,
                        (b - a) * UNIT
                    );
                    let _ = writeln!(out, r#"<text x="{mid}" y="{}" text-anchor="middle">{}</text>"#, y - 2.0, floor_secs(hi));
                    let _ = writeln!(
                        out,
                        r##"<text x="{mid}" y="{}" text-anchor="middle" fill="#fff">{}</text>"##,
                        axis - a * UNIT - 3.0,
                        floor_secs(lo)
                    );
                } else {
                    let _ = writeln!(out, r#"<text x="{mid}" y="{}" text-anchor="middle">{INFINITY}</text>"#, axis - 3.0);
                }
                for (k, s) in d.fastest.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{}" height="5" fill="{}"/>"#,
                        x + 4.0,
                        axis + 1.0 + k as f64 * 6.0,
                        COL - 8.0,
                        color(s)
                    );
                }
                let size_axis = axis + 2.0 * marker_rows;
                for (k, s) in d.smallest.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{}" height="5" fill="{}"/>"#,
                        x + 4.0,
                        size_axis - 6.0 - k as f64 * 6.0,
                        COL - 8.0,
                        color(s)
                    );
                }
                if let (Some(lo), Some(hi)) = (d.min_size, d.max_size) {
                    let (a, b) = (size_bucket(lo) as f64, size_bucket(hi) as f64 + 1.0);
                    let _ = writeln!(
                        out,
                        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#999"/>"##,
                        x + 4.0,
                        size_axis + a * UNIT,
                        COL - 8.0,
                        (b - a) * UNIT
                    );
                    let _ = writeln!(
                        out,
                        r#"<text x="{mid}" y="{}" text-anchor="middle">{}</text>"#,
                        size_axis + b * UNIT + 10.0,
                        shown_size(hi)
                    );
                    if size_bucket(lo) != size_bucket(hi) {
                        let _ = writeln!(
                            out,
                            r##"<text x="{mid}" y="{}" text-anchor="middle" fill="#fff">{}</text>"##,
                            size_axis + a * UNIT + 10.0,
                            lo
                        );
                    }
                }
                let _ = writeln!(
                    out,
                    r#"<text x="{mid}" y="{}" text-anchor="middle">{}</text>"#,
                    size_axis + size_h + 24.0,
                    xml_escape(&d.benchmark_id)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
