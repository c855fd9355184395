//! Enumerative CEGIS with divide-and-conquer unification: enumerate terms
//! against the counterexample points, cover the points with several terms,
//! and join them with a decision tree over enumerated predicates.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::grammar::{derives, ConstantPool, Enumerator};
use crate::printer::print_term;
use crate::problem::{Candidate, GTerm, Grammar, Problem, SynthFun};
use crate::semantics::{eval, holds_at, Env, EvalError, FunTable};
use crate::smt::SmtSession;
use crate::term::{Sort, Term, Value, FRESH_MARKER};
use crate::verifier::{verify, Verdict, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub wall: Duration,
    pub max_term_size: usize,
    /// 0 disables predicates, so only single terms are tried.
    pub max_pred_size: usize,
    pub max_rounds: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { wall: Duration::from_secs(3600), max_term_size: 20, max_pred_size: 10, max_rounds: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf(Term),
    Node(Term, Box<DecisionTree>, Box<DecisionTree>),
}

/// Nested `ite` for the tree.
pub fn flatten(dt: &DecisionTree) -> Term {
    match dt {
        DecisionTree::Leaf(t) => t.clone(),
        DecisionTree::Node(p, a, b) => Term::app("ite", vec![p.clone(), flatten(a), flatten(b)]),
    }
}

/// Rows are candidate terms in enumeration order, columns are points;
/// a cell says whether the term satisfies the constraints at the point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverMatrix {
    pub terms: Vec<Term>,
    pub cells: Vec<Vec<bool>>,
}

impl CoverMatrix {
    pub fn columns(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    fn covering(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.terms.len()).filter(move |&r| self.cells[r][col])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("no predicate separates points that need different terms")]
    NoSeparator,
    #[error("point {0} is covered by no term")]
    Uncovered(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn entropy(cols: &[usize], m: &CoverMatrix) -> f64 {
    let mut weight: HashMap<usize, f64> = HashMap::new();
    for &c in cols {
        let rows: Vec<usize> = m.covering(c).collect();
        let share = 1.0 / rows.len() as f64;
        for r in rows {
            *weight.entry(r).or_default() += share;
        }
    }
    let n = cols.len() as f64;
    weight
        .values()
        .map(|w| w / n)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// ID3-style exact learner. Each point spreads one unit of label weight
/// evenly over the terms covering it; predicates are chosen by information
/// gain (natural log), ties going to the smaller predicate and then to the
/// earlier one. Leaves hold the smallest covering term, earliest first.
pub fn learn_tree(
    m: &CoverMatrix,
    preds: &[Term],
    points: &[Env],
    funs: &FunTable,
) -> Result<DecisionTree, LearnError> {
    for c in 0..points.len() {
        if m.covering(c).next().is_none() {
            return Err(LearnError::Uncovered(c));
        }
    }
    let mut table = Vec::with_capacity(preds.len());
    for p in preds {
        let mut row = Vec::with_capacity(points.len());
        for pt in points {
            row.push(matches!(eval(p, pt, funs)?, Value::Bool(true)));
        }
        table.push(row);
    }
    let cols: Vec<usize> = (0..points.len()).collect();
    learn(m, preds, &table, &cols)
}

fn learn(m: &CoverMatrix, preds: &[Term], table: &[Vec<bool>], cols: &[usize]) -> Result<DecisionTree, LearnError> {
    let common = (0..m.terms.len())
        .filter(|&r| cols.iter().all(|&c| m.cells[r][c]))
        .min_by_key(|&r| (m.terms[r].size(), r));
    if let Some(r) = common {
        return Ok(DecisionTree::Leaf(m.terms[r].clone()));
    }
    let h = entropy(cols, m);
    let n = cols.len() as f64;
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, p) in preds.iter().enumerate() {
        let (yes, no): (Vec<usize>, Vec<usize>) = cols.iter().partition(|&&c| table[i][c]);
        if yes.is_empty() || no.is_empty() {
            continue;
        }
        let gain = h - (yes.len() as f64 / n) * entropy(&yes, m) - (no.len() as f64 / n) * entropy(&no, m);
        let better = match best {
            None => true,
            Some((g, size, _)) => gain > g + 1e-12 || ((gain - g).abs() <= 1e-12 && p.size() < size),
        };
        if better {
            best = Some((gain, p.size(), i));
        }
    }
    let Some((_, _, i)) = best else { return Err(LearnError::NoSeparator) };
    let (yes, no): (Vec<usize>, Vec<usize>) = cols.iter().partition(|&&c| table[i][c]);
    Ok(DecisionTree::Node(
        preds[i].clone(),
        Box::new(learn(m, preds, table, &yes)?),
        Box::new(learn(m, preds, table, &no)?),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved(Vec<Candidate>),
    /// The grammar was enumerated to the size cap without a solution.
    Exhausted,
    TimedOut,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub rounds: usize,
    /// Counterexamples in the order they were added.
    pub counterexamples: Vec<Env>,
    /// The candidate each counterexample refuted.
    pub refuted: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub stats: SolveStats,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("the reference solver handles exactly one synth-fun, found {0}")]
    MultipleFunctions(usize),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Desugar(#[from] crate::problem::DesugarError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("verifier returned unknown: {0}")]
    VerifierUnknown(String),
    #[error("counterexample {point:?} makes no progress: {reason}")]
    NoProgress { point: Env, reason: String },
}

const OUT: &str = "@out";

/// How points are turned into the columns terms are scored on.
enum Mode {
    /// Each constraint calls f on at most one argument tuple; the
    /// constraints decompose into per-input requirements on f's output.
    Separable { rewritten: Vec<Term>, args: Vec<Option<Vec<Term>>> },
    /// Checks of all constraints per point (e.g. invariants).
    Whole { nested: bool },
}

fn invocations<'t>(t: &'t Term, f: &str, out: &mut Vec<&'t [Term]>) -> bool {
    let mut nested = false;
    match t {
        Term::App(op, args) => {
            if op == f {
                if !out.contains(&args.as_slice()) {
                    out.push(args);
                }
                nested |= args.iter().any(|a| a.mentions_fun(f));
            }
            for a in args {
                nested |= invocations(a, f, out);
            }
        }
        Term::Let(bs, body) => {
            for (_, b) in bs {
                nested |= invocations(b, f, out);
            }
            nested |= invocations(body, f, out);
        }
        _ => {}
    }
    nested
}

fn replace_calls(t: &Term, f: &str) -> Term {
    match t {
        Term::App(op, _) if op == f => Term::var(OUT),
        Term::App(op, args) => Term::App(op.clone(), args.iter().map(|a| replace_calls(a, f)).collect()),
        Term::Let(bs, body) => Term::Let(
            bs.iter().map(|(n, b)| (n.clone(), replace_calls(b, f))).collect(),
            Box::new(replace_calls(body, f)),
        ),
        other => other.clone(),
    }
}

fn has_let(t: &Term) -> bool {
    let mut found = false;
    t.walk(&mut |n| found |= matches!(n, Term::Let(..)));
    found
}

fn classify(p: &Problem, f: &str) -> Mode {
    let mut rewritten = Vec::new();
    let mut args = Vec::new();
    let mut separable = true;
    let mut nested = false;
    for c in &p.constraints {
        let mut calls = Vec::new();
        nested |= invocations(c, f, &mut calls);
        if calls.len() > 1 || (has_let(c) && !calls.is_empty()) {
            separable = false;
        }
        args.push(calls.first().map(|a| a.to_vec()));
        rewritten.push(replace_calls(c, f));
    }
    if separable && !nested {
        Mode::Separable { rewritten, args }
    } else {
        Mode::Whole { nested }
    }
}

/// The scoring view of the current point set.
struct Columns {
    /// Valuations of f's parameters: the points predicates are tested on
    /// (separable) or the observation points for deduplication.
    observe: Vec<Env>,
    /// Separable: the (point, constraint) checks attached to each input.
    checks: Vec<Vec<(usize, usize)>>,
}

struct Search<'a> {
    p: &'a Problem,
    f: &'a SynthFun,
    grammar: Grammar,
    mode: Mode,
    funs: FunTable<'a>,
    budget: Budget,
    deadline: Instant,
}

enum Found {
    Term(Term),
    Exhausted,
    TimedOut,
}

impl<'a> Search<'a> {
    fn param_env(&self, vals: Vec<Value>) -> Env {
        self.f.params.iter().map(|(n, _)| n.clone()).zip(vals).collect()
    }

    fn columns(&self, points: &[Env]) -> Result<Columns, EvalError> {
        let mut observe = Vec::new();
        let mut checks: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut index: HashMap<Env, usize> = HashMap::new();
        match &self.mode {
            Mode::Separable { args, .. } => {
                for (pi, pt) in points.iter().enumerate() {
                    for (ci, a) in args.iter().enumerate() {
                        let Some(a) = a else { continue };
                        let vals = a.iter().map(|t| eval(t, pt, &self.funs)).collect::<Result<_, _>>()?;
                        let env = self.param_env(vals);
                        let col = *index.entry(env.clone()).or_insert_with(|| {
                            observe.push(env);
                            checks.push(Vec::new());
                            observe.len() - 1
                        });
                        checks[col].push((pi, ci));
                    }
                }
            }
            Mode::Whole { nested: false } => {
                for pt in points {
                    for c in &self.p.constraints {
                        let mut calls = Vec::new();
                        invocations(c, &self.f.name, &mut calls);
                        for a in calls {
                            let vals = a.iter().map(|t| eval(t, pt, &self.funs)).collect::<Result<_, _>>()?;
                            let env = self.param_env(vals);
                            if !index.contains_key(&env) {
                                index.insert(env.clone(), observe.len());
                                observe.push(env);
                            }
                        }
                    }
                }
            }
            Mode::Whole { nested: true } => {}
        }
        Ok(Columns { observe, checks })
    }

    fn candidate(&self, body: Term) -> Candidate {
        Candidate { target: self.f.name.clone(), params: self.f.params.clone(), ret: self.f.ret, body }
    }

    /// Constraints that do not mention f must already hold at every point.
    fn fixed_constraints_hold(&self, points: &[Env]) -> Result<bool, EvalError> {
        for c in self.p.constraints.iter().filter(|c| !c.mentions_fun(&self.f.name)) {
            for pt in points {
                if eval(c, pt, &self.funs)? != Value::Bool(true) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Cover row of `t`: one cell per column (separable) or per point.
    fn cover_row(
        &self,
        t: &Term,
        points: &[Env],
        cols: &Columns,
        memo: &mut HashMap<(usize, Value), bool>,
    ) -> Result<Vec<bool>, EvalError> {
        match &self.mode {
            Mode::Separable { rewritten, .. } => {
                let mut row = Vec::with_capacity(cols.observe.len());
                for (i, input) in cols.observe.iter().enumerate() {
                    let v = eval(t, input, &self.funs)?;
                    if let Some(&ok) = memo.get(&(i, v.clone())) {
                        row.push(ok);
                        continue;
                    }
                    let mut ok = true;
                    for &(pi, ci) in &cols.checks[i] {
                        let mut env = points[pi].clone();
                        env.insert(OUT.to_string(), v.clone());
                        if eval(&rewritten[ci], &env, &self.funs)? != Value::Bool(true) {
                            ok = false;
                            break;
                        }
                    }
                    memo.insert((i, v), ok);
                    row.push(ok);
                }
                Ok(row)
            }
            Mode::Whole { .. } => {
                let cand = [self.candidate(t.clone())];
                points.iter().map(|pt| holds_at(self.p, &cand, pt)).collect()
            }
        }
    }

    /// The nonterminal supplying `ite` conditions in the start production,
    /// or `None` when conditions are written inline (or there is no `ite`).
    fn predicate_source(&self) -> Option<Option<usize>> {
        for alt in &self.grammar.productions[0].alternatives {
            if let GTerm::App(op, args) = alt {
                if op == "ite" && args.len() == 3 {
                    return Some(match &args[0] {
                        GTerm::NonTerminal(b) => self.grammar.index_of(b),
                        _ => None,
                    });
                }
            }
        }
        None
    }

    fn timed_out(&self) -> bool {
        Instant::now() >= self.deadline
    }

    fn synthesize(&self, points: &[Env]) -> Result<Found, SolveError> {
        if !self.fixed_constraints_hold(points)? {
            return Ok(Found::Exhausted);
        }
        let cols = self.columns(points)?;
        let width = match self.mode {
            Mode::Separable { .. } => cols.observe.len(),
            Mode::Whole { .. } => points.len(),
        };
        let pool = ConstantPool::default();
        let mut terms = Enumerator::new(&self.grammar, 0, self.budget.max_term_size, &pool)
            .distinct_on(cols.observe.clone(), self.funs.clone());
        let pred_source = if self.budget.max_pred_size == 0 || !matches!(self.mode, Mode::Separable { .. }) {
            None
        } else {
            self.predicate_source()
        };
        let mut preds_enum = match pred_source {
            Some(Some(b)) => Some(
                Enumerator::new(&self.grammar, b, self.budget.max_pred_size, &pool)
                    .distinct_on(cols.observe.clone(), self.funs.clone()),
            ),
            _ => None,
        };
        let mut matrix = CoverMatrix::default();
        let mut seen_rows: BTreeSet<Vec<bool>> = BTreeSet::new();
        let mut all_terms: Vec<Term> = Vec::new();
        let mut memo = HashMap::new();
        let mut preds: Vec<Term> = Vec::new();
        let mut pred_size = 0;
        for size in 1..=self.budget.max_term_size {
            if self.timed_out() {
                return Ok(Found::TimedOut);
            }
            let bank: Vec<Term> = terms.bank(0, size).to_vec();
            for t in bank {
                let row = match self.cover_row(&t, points, &cols, &mut memo) {
                    Ok(r) => r,
                    Err(e) => {
                        log::debug!("skipping {}: {e}", print_term(&t));
                        continue;
                    }
                };
                all_terms.push(t.clone());
                if row.iter().all(|c| *c) {
                    return Ok(Found::Term(t));
                }
                if row.iter().any(|c| *c) && seen_rows.insert(row.clone()) {
                    matrix.terms.push(t);
                    matrix.cells.push(row);
                }
            }
            let Some(source) = pred_source else { continue };
            let covered = (0..width).all(|c| matrix.cells.iter().any(|r| r[c]));
            if !covered {
                continue;
            }
            // Grow predicates alongside terms, retrying the learner each step.
            let limit = self.budget.max_pred_size.min(size);
            while pred_size < limit {
                pred_size += 1;
                match (&mut preds_enum, source) {
                    (Some(e), Some(b)) => preds.extend(e.bank(b, pred_size).iter().cloned()),
                    _ => preds = self.comparison_predicates(&all_terms),
                }
            }
            match learn_tree(&matrix, &preds, &cols.observe, &self.funs) {
                Ok(dt) => {
                    let t = flatten(&dt);
                    if derives(&self.grammar, &t) {
                        return Ok(Found::Term(t));
                    }
                    log::debug!("learned term outside grammar: {}", print_term(&t));
                }
                Err(LearnError::NoSeparator) => {}
                Err(e) => log::debug!("learner: {e}"),
            }
        }
        Ok(Found::Exhausted)
    }

    /// Fallback conditions `(<= a b)` and `(= a b)` over enumerated terms,
    /// smallest first.
    fn comparison_predicates(&self, terms: &[Term]) -> Vec<Term> {
        let mut out = Vec::new();
        let ops: &[&str] = if self.f.ret == Sort::Int { &["<=", "="] } else { &["="] };
        for a in terms {
            for b in terms {
                if a == b {
                    continue;
                }
                for op in ops {
                    let t = Term::app(*op, vec![a.clone(), b.clone()]);
                    if t.size() <= self.budget.max_pred_size {
                        out.push(t);
                    }
                }
            }
        }
        out.sort_by_key(Term::size);
        out
    }
}

/// Runs CEGIS on a single-function problem. The first candidate is the
/// smallest term of the grammar; each round adds the verifier's
/// counterexample, which must be new and must refute the current candidate.
pub fn solve(p: &Problem, budget: Budget, session: &mut SmtSession) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    if p.synth_funs.len() != 1 {
        return Err(SolveError::MultipleFunctions(p.synth_funs.len()));
    }
    let desugared;
    let p = if p.inv_constraints.is_empty() {
        p
    } else {
        desugared = p.desugar_inv()?;
        &desugared
    };
    let f = &p.synth_funs[0];
    let grammar = f.effective_grammar(&p.logic);
    let search = Search {
        p,
        f,
        mode: classify(p, &f.name),
        grammar,
        funs: FunTable::of_problem(p),
        budget,
        deadline: start + budget.wall,
    };
    debug_assert!(!f.name.contains(FRESH_MARKER));
    let mut stats = SolveStats::default();
    let report = |outcome, stats| Ok(SolveReport { outcome, stats });
    let Some(first) = Enumerator::new(&search.grammar, 0, budget.max_term_size, &ConstantPool::default()).next()
    else {
        return report(SolveOutcome::Exhausted, stats);
    };
    let mut current = first;
    let mut points: Vec<Env> = Vec::new();
    loop {
        if search.timed_out() {
            return report(SolveOutcome::TimedOut, stats);
        }
        stats.rounds += 1;
        let cand = search.candidate(current.clone());
        log::debug!("round {}: {}", stats.rounds, print_term(&current));
        match verify(p, std::slice::from_ref(&cand), session)? {
            Verdict::Valid => return report(SolveOutcome::Solved(vec![cand]), stats),
            Verdict::Unknown(r) => return Err(SolveError::VerifierUnknown(r)),
            Verdict::Invalid(point) => {
                if points.contains(&point) {
                    return Err(SolveError::NoProgress { point, reason: "point already in the set".into() });
                }
                if holds_at(p, std::slice::from_ref(&cand), &point)? {
                    return Err(SolveError::NoProgress { point, reason: "candidate already satisfies it".into() });
                }
                stats.counterexamples.push(point.clone());
                stats.refuted.push(current.clone());
                points.push(point);
            }
            other => unreachable!("verify returned {other:?}"),
        }
        if stats.rounds >= budget.max_rounds {
            return report(SolveOutcome::TimedOut, stats);
        }
        match search.synthesize(&points)? {
            Found::Term(t) => current = t,
            Found::Exhausted => return report(SolveOutcome::Exhausted, stats),
            Found::TimedOut => return report(SolveOutcome::TimedOut, stats),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs.iter().map(|(n, v)| (n.to_string(), Value::int(*v))).collect()
    }

    #[test]
    fn single_cover_is_a_leaf() {
        let m = CoverMatrix { terms: vec![Term::var("x"), Term::var("y")], cells: vec![vec![false, true], vec![true, true]] };
        let dt = learn_tree(&m, &[], &[env(&[]), env(&[])], &FunTable::new()).unwrap();
        assert_eq!(dt, DecisionTree::Leaf(Term::var("y")));
    }

    #[test]
    fn two_points_split() {
        let m = CoverMatrix { terms: vec![Term::var("x"), Term::var("y")], cells: vec![vec![true, false], vec![false, true]] };
        let p = parse_term("(>= x y)").unwrap();
        let points = [env(&[("x", 1), ("y", 0)]), env(&[("x", 0), ("y", 1)])];
        let dt = learn_tree(&m, std::slice::from_ref(&p), &points, &FunTable::new()).unwrap();
        assert_eq!(
            dt,
            DecisionTree::Node(p, Box::new(DecisionTree::Leaf(Term::var("x"))), Box::new(DecisionTree::Leaf(Term::var("y"))))
        );
    }

    #[test]
    fn identical_points_cannot_separate() {
        let m = CoverMatrix { terms: vec![Term::var("a"), Term::var("b")], cells: vec![vec![true, false], vec![false, true]] };
        let pt = env(&[("x", 3)]);
        let preds = [parse_term("(>= x 0)").unwrap()];
        assert_eq!(learn_tree(&m, &preds, &[pt.clone(), pt], &FunTable::new()), Err(LearnError::NoSeparator));
    }

    #[test]
    fn flatten_shapes() {
        assert_eq!(flatten(&DecisionTree::Leaf(Term::var("x"))), Term::var("x"));
        let b = Term::var("b");
        let node = DecisionTree::Node(b.clone(), Box::new(DecisionTree::Leaf(Term::var("x"))), Box::new(DecisionTree::Leaf(Term::var("y"))));
        assert_eq!(print_term(&flatten(&node)), "(ite b x y)");
        let deep = DecisionTree::Node(b, Box::new(node.clone()), Box::new(DecisionTree::Leaf(Term::int(0))));
        // 3 leaves + 2 * 2 internal nodes, each condition of size 1
        assert_eq!(flatten(&deep).size(), 3 + 2 * 2);
    }
}
