//! Grammar membership and size-ordered enumeration of grammar terms.

use std::collections::{HashMap, HashSet};

use crate::printer::print_term;
use crate::problem::{GTerm, Grammar};
use crate::semantics::{eval, Env, FunTable};
use crate::term::{Sort, Term, Value};

/// Nonterminals reachable from each nonterminal through unit alternatives
/// (`N ::= M`), including itself, in discovery order.
fn unit_closure(g: &Grammar) -> Vec<Vec<usize>> {
    (0..g.productions.len())
        .map(|start| {
            let mut seen = vec![start];
            let mut i = 0;
            while i < seen.len() {
                for alt in &g.productions[seen[i]].alternatives {
                    if let GTerm::NonTerminal(m) = alt {
                        if let Some(j) = g.index_of(m) {
                            if !seen.contains(&j) {
                                seen.push(j);
                            }
                        }
                    }
                }
                i += 1;
            }
            seen
        })
        .collect()
}

/// Memoized top-down membership test for one grammar.
pub struct Derivation<'g> {
    g: &'g Grammar,
    closure: Vec<Vec<usize>>,
    memo: HashMap<(usize, *const Term), bool>,
}

impl<'g> Derivation<'g> {
    pub fn new(g: &'g Grammar) -> Self {
        Derivation { g, closure: unit_closure(g), memo: HashMap::new() }
    }

    /// Whether `t` derives from nonterminal `nt`.
    pub fn derives_from(&mut self, nt: usize, t: &Term) -> bool {
        let key = (nt, t as *const Term);
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let g = self.g;
        let mut r = false;
        'outer: for &m in &self.closure[nt].clone() {
            for alt in &g.productions[m].alternatives {
                if !matches!(alt, GTerm::NonTerminal(_)) && self.matches(alt, t) {
                    r = true;
                    break 'outer;
                }
            }
        }
        self.memo.insert(key, r);
        r
    }

    fn matches(&mut self, alt: &GTerm, t: &Term) -> bool {
        match (alt, t) {
            (GTerm::NonTerminal(n), _) => match self.g.index_of(n) {
                Some(i) => self.derives_from(i, t),
                None => false,
            },
            (GTerm::Lit(v), _) => t.as_constant().as_ref() == Some(v),
            (GTerm::Constant(s), _) => t.as_constant().is_some_and(|v| v.sort() == *s),
            (GTerm::Var(x), Term::Var(y)) => x == y,
            (GTerm::Variable(s), Term::Var(y)) => self.g.params.iter().any(|(n, ps)| n == y && ps == s),
            (GTerm::App(op, gargs), Term::App(top, targs)) => {
                op == top
                    && gargs.len() == targs.len()
                    && gargs.iter().zip(targs).all(|(ga, ta)| self.matches(ga, ta))
            }
            (GTerm::Let(gbs, gbody), Term::Let(tbs, tbody)) => {
                gbs.len() == tbs.len()
                    && gbs.iter().zip(tbs).all(|((gn, gb), (tn, tb))| gn == tn && self.matches(gb, tb))
                    && self.matches(gbody, tbody)
            }
            _ => false,
        }
    }
}

/// True iff `t` is derivable from the grammar's start symbol.
pub fn derives(g: &Grammar, t: &Term) -> bool {
    !g.productions.is_empty() && Derivation::new(g).derives_from(0, t)
}

/// Describes why `t` is outside the grammar: the first node (pre-order)
/// whose operator or leaf appears nowhere in the grammar, or else the whole
/// term.
pub fn explain_reject(g: &Grammar, t: &Term) -> String {
    let mut ops = HashSet::new();
    let mut vars = HashSet::new();
    let mut lits = HashSet::new();
    let mut const_sorts = HashSet::new();
    let mut has_let = false;
    fn collect(
        a: &GTerm,
        g: &Grammar,
        ops: &mut HashSet<String>,
        vars: &mut HashSet<String>,
        lits: &mut HashSet<Value>,
        const_sorts: &mut HashSet<Sort>,
        has_let: &mut bool,
    ) {
        match a {
            GTerm::Lit(v) => {
                lits.insert(v.clone());
            }
            GTerm::Var(x) => {
                vars.insert(x.clone());
            }
            GTerm::NonTerminal(_) => {}
            GTerm::Constant(s) => {
                const_sorts.insert(*s);
            }
            GTerm::Variable(s) => {
                vars.extend(g.params.iter().filter(|(_, ps)| ps == s).map(|(n, _)| n.clone()));
            }
            GTerm::App(op, args) => {
                ops.insert(op.clone());
                for x in args {
                    collect(x, g, ops, vars, lits, const_sorts, has_let);
                }
            }
            GTerm::Let(bs, body) => {
                *has_let = true;
                for (n, b) in bs {
                    vars.insert(n.clone());
                    collect(b, g, ops, vars, lits, const_sorts, has_let);
                }
                collect(body, g, ops, vars, lits, const_sorts, has_let);
            }
        }
    }
    for p in &g.productions {
        for a in &p.alternatives {
            collect(a, g, &mut ops, &mut vars, &mut lits, &mut const_sorts, &mut has_let);
        }
    }
    let mut offending = None;
    let mut skip_negated = HashSet::new();
    t.walk(&mut |n: &Term| {
        if offending.is_some() || skip_negated.contains(&(n as *const Term)) {
            return;
        }
        if let Some(v) = n.as_constant() {
            if let Term::App(_, args) = n {
                skip_negated.insert(&args[0] as *const Term);
            }
            if !lits.contains(&v) && !const_sorts.contains(&v.sort()) {
                offending = Some(n);
            }
            return;
        }
        let ok = match n {
            Term::Lit(_) => true,
            Term::Var(x) => vars.contains(x),
            Term::App(op, _) => ops.contains(op),
            Term::Let(..) => has_let,
        };
        if !ok {
            offending = Some(n);
        }
    });
    match offending {
        Some(n) => format!("`{}` is not allowed by the grammar", print_term(n)),
        None => format!("`{}` is not derivable from the grammar", print_term(t)),
    }
}

/// Finite stand-ins for `(Constant S)` leaves during enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantPool {
    extra: Vec<Value>,
}

impl ConstantPool {
    /// Adds a constant beyond the seeded ones (kept in insertion order).
    pub fn add(&mut self, v: Value) {
        if !self.extra.contains(&v) {
            self.extra.push(v);
        }
    }

    /// Int: -1, 0, 1, 2. BitVec: 0, 1, all ones. String: "", "a".
    /// Bool: true, false. Then any added constants of the sort.
    pub fn values(&self, sort: Sort) -> Vec<Value> {
        let mut out = match sort {
            Sort::Int => vec![Value::int(-1), Value::int(0), Value::int(1), Value::int(2)],
            Sort::BitVec(w) => vec![Value::bv(w, 0), Value::bv(w, 1), Value::bv(w, u128::MAX)],
            Sort::Str => vec![Value::str(""), Value::str("a")],
            Sort::Bool => vec![Value::Bool(true), Value::Bool(false)],
        };
        out.extend(self.extra.iter().filter(|v| v.sort() == sort).cloned());
        let mut seen = Vec::new();
        out.retain(|v| {
            let fresh = !seen.contains(v);
            seen.push(v.clone());
            fresh
        });
        out
    }
}

#[derive(Debug, Clone)]
enum Hole {
    Nt(usize),
    /// Candidate leaf terms grouped by size.
    Leaves(Vec<Vec<Term>>),
}

#[derive(Debug, Clone)]
enum Alt {
    Unit(usize),
    Skeleton { gterm: GTerm, fixed: usize, holes: Vec<Hole> },
}

fn compile_alt(g: &Grammar, a: &GTerm, pool: &ConstantPool) -> Alt {
    if let GTerm::NonTerminal(n) = a {
        return Alt::Unit(g.index_of(n).expect("validated grammar"));
    }
    let mut fixed = 0;
    let mut holes = Vec::new();
    fn walk(g: &Grammar, a: &GTerm, pool: &ConstantPool, fixed: &mut usize, holes: &mut Vec<Hole>) {
        let group = |terms: Vec<Term>| {
            let mut by_size: Vec<Vec<Term>> = Vec::new();
            for t in terms {
                let s = t.size();
                if by_size.len() <= s {
                    by_size.resize(s + 1, Vec::new());
                }
                by_size[s].push(t);
            }
            Hole::Leaves(by_size)
        };
        match a {
            GTerm::NonTerminal(n) => holes.push(Hole::Nt(g.index_of(n).expect("validated grammar"))),
            GTerm::Constant(s) => {
                holes.push(group(pool.values(*s).iter().map(Value::to_term).collect()))
            }
            GTerm::Variable(s) => holes.push(group(
                g.params.iter().filter(|(_, ps)| ps == s).map(|(n, _)| Term::var(n.clone())).collect(),
            )),
            GTerm::Lit(v) => *fixed += v.to_term().size(),
            GTerm::Var(_) => *fixed += 1,
            GTerm::App(_, args) => {
                *fixed += 1;
                args.iter().for_each(|x| walk(g, x, pool, fixed, holes));
            }
            GTerm::Let(bs, body) => {
                *fixed += 1;
                bs.iter().for_each(|(_, b)| walk(g, b, pool, fixed, holes));
                walk(g, body, pool, fixed, holes);
            }
        }
    }
    walk(g, a, pool, &mut fixed, &mut holes);
    Alt::Skeleton { gterm: a.clone(), fixed, holes }
}

fn instantiate(a: &GTerm, fill: &mut std::slice::Iter<'_, &Term>) -> Term {
    match a {
        GTerm::NonTerminal(_) | GTerm::Constant(_) | GTerm::Variable(_) => {
            (*fill.next().expect("one filler per hole")).clone()
        }
        GTerm::Lit(v) => v.to_term(),
        GTerm::Var(x) => Term::Var(x.clone()),
        GTerm::App(op, args) => Term::App(op.clone(), args.iter().map(|x| instantiate(x, fill)).collect()),
        GTerm::Let(bs, body) => {
            let bs = bs.iter().map(|(n, b)| (n.clone(), instantiate(b, fill))).collect();
            Term::Let(bs, Box::new(instantiate(body, fill)))
        }
    }
}

/// Observational-equivalence filter: value vectors on a fixed point list.
struct Observer<'a> {
    points: Vec<Env>,
    funs: FunTable<'a>,
    seen: Vec<HashSet<Vec<Value>>>,
}

impl Observer<'_> {
    /// True if `t` is new for nonterminal `nt` (and records it). Terms that
    /// cannot be evaluated in isolation are always kept.
    fn admit(&mut self, nt: usize, t: &Term) -> bool {
        let mut vec = Vec::with_capacity(self.points.len());
        for p in &self.points {
            match eval(t, p, &self.funs) {
                Ok(v) => vec.push(v),
                Err(_) => return true,
            }
        }
        self.seen[nt].insert(vec)
    }
}

/// Bottom-up enumerator yielding the terms of one nonterminal in
/// nondecreasing size. Within a size, terms follow production order and then
/// the lexicographic order of subterm choices.
pub struct Enumerator<'a> {
    alts: Vec<Vec<Alt>>,
    /// `banks[nt][size]`; complete for every size below `next_size`.
    banks: Vec<Vec<Vec<Term>>>,
    target: usize,
    max_size: usize,
    next_size: usize,
    /// Size of the cell the iterator is reading.
    size: usize,
    cursor: usize,
    observer: Option<Observer<'a>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(g: &Grammar, nonterminal: usize, max_size: usize, pool: &ConstantPool) -> Self {
        let mut g = g.clone();
        g.dedup_alternatives();
        let alts = g
            .productions
            .iter()
            .map(|p| p.alternatives.iter().map(|a| compile_alt(&g, a, pool)).collect())
            .collect();
        Enumerator {
            alts,
            banks: vec![vec![Vec::new()]; g.productions.len()],
            target: nonterminal,
            max_size,
            next_size: 1,
            size: 1,
            cursor: 0,
            observer: None,
        }
    }

    /// Suppresses terms whose values on `points` repeat an earlier term of
    /// the same nonterminal. An empty point list disables the filter.
    pub fn distinct_on(mut self, points: Vec<Env>, funs: FunTable<'a>) -> Self {
        if !points.is_empty() {
            let n = self.alts.len();
            self.observer = Some(Observer { points, funs, seen: vec![HashSet::new(); n] });
        }
        self
    }

    /// Terms of `nonterminal` with exactly `size` nodes (after filtering).
    pub fn bank(&mut self, nonterminal: usize, size: usize) -> &[Term] {
        while self.next_size <= size {
            self.grow();
        }
        &self.banks[nonterminal][size]
    }

    fn grow(&mut self) {
        let s = self.next_size;
        let n = self.alts.len();
        let mut direct: Vec<Vec<Term>> = Vec::with_capacity(n);
        for nt in 0..n {
            let mut cell = Vec::new();
            let mut seen = HashSet::new();
            for alt in &self.alts[nt] {
                if let Alt::Skeleton { gterm, fixed, holes } = alt {
                    if *fixed > s {
                        continue;
                    }
                    let mut chosen = Vec::with_capacity(holes.len());
                    self.fill(gterm, holes, 0, s - fixed, &mut chosen, &mut |t| {
                        if seen.insert(t.clone()) {
                            cell.push(t);
                        }
                    });
                }
            }
            direct.push(cell);
        }
        // Full cells: alternatives in order, unit alternatives splicing in the
        // target's full cell of the same size.
        let mut full: Vec<Option<Vec<Term>>> = vec![None; n];
        for nt in 0..n {
            self.assemble(nt, &direct, &mut full, &mut Vec::new());
        }
        for (nt, cell) in full.into_iter().enumerate() {
            let mut cell = cell.expect("assembled");
            if let Some(obs) = self.observer.as_mut() {
                cell.retain(|t| obs.admit(nt, t));
            }
            self.banks[nt].push(cell);
        }
        self.next_size += 1;
    }

    fn assemble(
        &self,
        nt: usize,
        direct: &[Vec<Term>],
        full: &mut Vec<Option<Vec<Term>>>,
        stack: &mut Vec<usize>,
    ) -> Vec<Term> {
        if let Some(c) = &full[nt] {
            return c.clone();
        }
        stack.push(nt);
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut direct_done = false;
        for alt in &self.alts[nt] {
            match alt {
                Alt::Skeleton { .. } if !direct_done => {
                    direct_done = true;
                    for t in &direct[nt] {
                        if seen.insert(t.clone()) {
                            out.push(t.clone());
                        }
                    }
                }
                Alt::Skeleton { .. } => {}
                Alt::Unit(m) if !stack.contains(m) => {
                    for t in self.assemble(*m, direct, full, stack) {
                        if seen.insert(t.clone()) {
                            out.push(t);
                        }
                    }
                }
                // A unit cycle back to a nonterminal being assembled: its
                // direct terms are reachable through the closure instead.
                Alt::Unit(m) => {
                    for t in &direct[*m] {
                        if seen.insert(t.clone()) {
                            out.push(t.clone());
                        }
                    }
                }
            }
        }
        stack.pop();
        if stack.is_empty() {
            full[nt] = Some(out.clone());
        }
        out
    }

    fn fill<'t>(
        &'t self,
        gterm: &GTerm,
        holes: &'t [Hole],
        i: usize,
        remaining: usize,
        chosen: &mut Vec<&'t Term>,
        emit: &mut dyn FnMut(Term),
    ) {
        if i == holes.len() {
            if remaining == 0 {
                emit(instantiate(gterm, &mut chosen.iter()));
            }
            return;
        }
        let rest_min = holes.len() - i - 1;
        if remaining < 1 + rest_min {
            return;
        }
        for k in 1..=remaining - rest_min {
            let options: &[Term] = match &holes[i] {
                Hole::Nt(m) => self.banks[*m].get(k).map(Vec::as_slice).unwrap_or(&[]),
                Hole::Leaves(by_size) => by_size.get(k).map(Vec::as_slice).unwrap_or(&[]),
            };
            for t in options {
                chosen.push(t);
                self.fill(gterm, holes, i + 1, remaining - k, chosen, emit);
                chosen.pop();
            }
        }
    }
}

impl Iterator for Enumerator<'_> {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        loop {
            if self.size > self.max_size {
                return None;
            }
            while self.next_size <= self.size {
                self.grow();
            }
            if let Some(t) = self.banks[self.target][self.size].get(self.cursor) {
                self.cursor += 1;
                return Some(t.clone());
            }
            self.size += 1;
            self.cursor = 0;
        }
    }
}

/// Every term derivable from the start symbol with at most `max_size` nodes.
pub fn enumerate(g: &Grammar, max_size: usize) -> Enumerator<'static> {
    Enumerator::new(g, 0, max_size, &ConstantPool::default())
}

/// As [`enumerate`], without two terms that agree on every point.
pub fn enumerate_distinct<'a>(
    g: &Grammar,
    max_size: usize,
    points: Vec<Env>,
    funs: FunTable<'a>,
) -> Enumerator<'a> {
    Enumerator::new(g, 0, max_size, &ConstantPool::default()).distinct_on(points, funs)
}
