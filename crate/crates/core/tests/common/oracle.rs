//! Brute-force references for grammar membership and random ground terms
//! for checking evaluation against the SMT backend.

use std::collections::{BTreeSet, HashSet};

use rand::rngs::StdRng;
use rand::Rng;
use sygus_core::parser::parse_problem;
use sygus_core::problem::{GTerm, Grammar};
use sygus_core::term::{Term, Value};

/// Seed grammars with symbols outside them (leaf terms, operators with
/// arity) that the membership universe also draws from.
pub const SEED_GRAMMARS: [(&str, &str, &str); 5] = [
    (
        "lia",
        "(set-logic LIA)(synth-fun f ((x Int) (y Int)) Int
           ((Start Int (x y 1 (+ Start Start) (- Start Start)))))(check-synth)",
        "2 (* _ _)",
    ),
    (
        "bv",
        "(set-logic BV)(synth-fun f ((x (BitVec 4))) (BitVec 4)
           ((Start (BitVec 4) (x #x1 (bvand Start Start) (bvnot Start) (bvshl Start Start)))))(check-synth)",
        "#x2 (bvor _ _)",
    ),
    (
        "string",
        "(set-logic SLIA)(synth-fun f ((s String)) String
           ((Start String (s \"a\" (str.++ Start Start) (str.substr Start I I)))
            (I Int (0 1 (str.len Start)))))(check-synth)",
        "\"b\"",
    ),
    (
        "bool",
        "(set-logic LIA)(synth-fun f ((p Bool) (q Bool)) Bool
           ((B Bool (p q (and B B) (or B B) (not B)))))(check-synth)",
        "false (xor _ _)",
    ),
    (
        "mixed",
        "(set-logic LIA)(synth-fun f ((x Int) (y Int)) Int
           ((Start Int (T 0 (ite B Start Start) (+ Start T)))
            (T Int ((Variable Int) (* T 2) Start))
            (B Bool (true (<= Start T) (not B)))))(check-synth)",
        "",
    ),
];

pub fn seed_grammar(text: &str) -> Grammar {
    let p = parse_problem(text).unwrap();
    let f = &p.synth_funs[0];
    f.effective_grammar(&p.logic)
}

fn expand_leaf(g: &Grammar, gt: &GTerm) -> Option<Vec<Term>> {
    match gt {
        GTerm::Lit(v) => Some(vec![v.to_term()]),
        GTerm::Var(v) => Some(vec![Term::var(v.clone())]),
        GTerm::Variable(s) => Some(g.params.iter().filter(|(_, ps)| ps == s).map(|(n, _)| Term::var(n.clone())).collect()),
        _ => None,
    }
}

/// Every instance of a skeleton whose nonterminals take values from the
/// current sets, kept to `max` nodes.
fn instances(g: &Grammar, gt: &GTerm, sets: &[HashSet<Term>], max: usize) -> Vec<Term> {
    if let Some(leaves) = expand_leaf(g, gt) {
        return leaves.into_iter().filter(|t| t.size() <= max).collect();
    }
    match gt {
        GTerm::NonTerminal(n) => sets[g.index_of(n).unwrap()].iter().filter(|t| t.size() <= max).cloned().collect(),
        GTerm::App(op, args) => {
            let mut partial: Vec<Vec<Term>> = vec![Vec::new()];
            for a in args {
                let options = instances(g, a, sets, max);
                let mut next = Vec::new();
                for p in &partial {
                    let used: usize = p.iter().map(Term::size).sum();
                    for o in &options {
                        if 1 + used + o.size() <= max {
                            let mut q = p.clone();
                            q.push(o.clone());
                            next.push(q);
                        }
                    }
                }
                partial = next;
            }
            partial
                .into_iter()
                .map(|args| Term::app(op.clone(), args))
                .filter(|t| t.size() <= max)
                .collect()
        }
        other => panic!("oracle does not handle {other:?}"),
    }
}

/// Terms derivable from the start symbol with at most `max` nodes, by
/// naive fixpoint iteration over all nonterminals.
pub fn derivable(g: &Grammar, max: usize) -> HashSet<Term> {
    let mut sets: Vec<HashSet<Term>> = vec![HashSet::new(); g.productions.len()];
    loop {
        let mut changed = false;
        for (i, p) in g.productions.iter().enumerate() {
            for alt in &p.alternatives {
                for t in instances(g, alt, &sets, max) {
                    changed |= sets[i].insert(t);
                }
            }
        }
        if !changed {
            return sets.swap_remove(0);
        }
    }
}

fn collect_symbols(g: &Grammar, gt: &GTerm, leaves: &mut BTreeSet<Term>, ops: &mut BTreeSet<(String, usize)>) {
    if let Some(ls) = expand_leaf(g, gt) {
        leaves.extend(ls);
        return;
    }
    if let GTerm::App(op, args) = gt {
        ops.insert((op.clone(), args.len()));
        for a in args {
            collect_symbols(g, a, leaves, ops);
        }
    }
}

/// All terms of at most `max` nodes over the grammar's leaves and
/// operators plus the `extra` ones, well-sorted or not. `extra` is written
/// as terms with `_` for argument positions.
pub fn universe(g: &Grammar, max: usize, extra: &str) -> Vec<Term> {
    let mut leaves = BTreeSet::new();
    let mut ops = BTreeSet::new();
    for e in sygus_core::sexpr::parse_all(extra).unwrap() {
        let t = sygus_core::parser::parse_term(&e.to_string()).unwrap();
        match t {
            Term::App(op, args) if args.iter().all(|a| *a == Term::var("_")) => {
                ops.insert((op, args.len()));
            }
            leaf => {
                leaves.insert(leaf);
            }
        }
    }
    for p in &g.productions {
        for alt in &p.alternatives {
            collect_symbols(g, alt, &mut leaves, &mut ops);
        }
    }
    // by_size[n]: all terms of exactly n nodes
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max + 1];
    by_size[1] = leaves.iter().filter(|t| t.size() == 1).cloned().collect();
    for size in 2..=max {
        let mut out: Vec<Term> = leaves.iter().filter(|t| t.size() == size).cloned().collect();
        for (op, arity) in &ops {
            for split in compositions(size - 1, *arity) {
                let mut partial: Vec<Vec<Term>> = vec![Vec::new()];
                for part in split {
                    partial = partial
                        .into_iter()
                        .flat_map(|p| {
                            by_size[part].iter().map(move |t| {
                                let mut q = p.clone();
                                q.push(t.clone());
                                q
                            })
                        })
                        .collect();
                }
                out.extend(partial.into_iter().map(|args| Term::app(op.clone(), args)));
            }
        }
        by_size[size] = out;
    }
    by_size.concat()
}

/// Ordered ways to write `n` as `k` positive parts.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    (1..=n)
        .flat_map(|first| {
            compositions(n - first, k - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Random ground terms for one theory.
pub struct TermGen {
    pub rng: StdRng,
}

fn int(v: i64) -> Term {
    Term::int(v)
}

impl TermGen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    /// Int terms; divisors are kept nonzero because the backend leaves
    /// division by zero unspecified.
    pub fn int_term(&mut self, depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return int(self.rng.gen_range(-20..=20));
        }
        let d = depth - 1;
        match self.rng.gen_range(0..8) {
            0 => Term::app("+", vec![self.int_term(d), self.int_term(d)]),
            1 => Term::app("-", vec![self.int_term(d), self.int_term(d)]),
            2 => Term::app("*", vec![self.int_term(d), self.int_term(d)]),
            3 | 4 => {
                let op = if self.rng.gen_bool(0.5) { "div" } else { "mod" };
                let divisor = self.int_term(d);
                let divisor = match sygus_core::semantics::eval(&divisor, &Default::default(), &Default::default()) {
                    Ok(Value::Int(v)) if v != 0.into() => divisor,
                    _ => int(*self.pick(&[-7, -3, -2, 2, 3, 5])),
                };
                Term::app(op, vec![self.int_term(d), divisor])
            }
            5 => Term::app("abs", vec![self.int_term(d)]),
            6 => Term::app("-", vec![self.int_term(d)]),
            _ => Term::app("ite", vec![self.int_pred(d), self.int_term(d), self.int_term(d)]),
        }
    }

    fn int_pred(&mut self, depth: u32) -> Term {
        let op = *self.pick(&["<", "<=", ">", ">=", "="]);
        Term::app(op, vec![self.int_term(depth), self.int_term(depth)])
    }

    pub fn bv_term(&mut self, w: u32, depth: u32) -> Term {
        let mask = if w == 128 { u128::MAX } else { (1u128 << w) - 1 };
        if depth == 0 || self.rng.gen_bool(0.2) {
            return Value::bv(w, self.rng.gen::<u128>() & mask).to_term();
        }
        let d = depth - 1;
        const BIN: [&str; 16] = [
            "bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvsdiv", "bvsrem", "bvsmod", "bvshl", "bvlshr", "bvashr",
            "bvand", "bvor", "bvxor", "bvnand", "bvxnor",
        ];
        match self.rng.gen_range(0..10) {
            0 => Term::app(*self.pick(&["bvnot", "bvneg"]), vec![self.bv_term(w, d)]),
            1 => {
                let op = *self.pick(&["bvult", "bvule", "bvslt", "bvsge", "bvugt", "="]);
                let c = Term::app(op, vec![self.bv_term(w, d), self.bv_term(w, d)]);
                Term::app("ite", vec![c, self.bv_term(w, d), self.bv_term(w, d)])
            }
            _ => Term::app(*self.pick(&BIN), vec![self.bv_term(w, d), self.bv_term(w, d)]),
        }
    }

    fn lit_str(&mut self) -> Term {
        Term::Lit(Value::str(*self.pick(&["", "a", "b", "ab", "ba", "aab", "12", "-3", "0"])))
    }

    pub fn str_term(&mut self, depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.lit_str();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..6) {
            0 => Term::app("str.++", vec![self.str_term(d), self.str_term(d)]),
            1 => Term::app("str.substr", vec![self.str_term(d), self.small_int(d), self.small_int(d)]),
            2 => Term::app("str.at", vec![self.str_term(d), self.small_int(d)]),
            3 => Term::app("str.replace", vec![self.str_term(d), self.str_term(d), self.str_term(d)]),
            4 => Term::app("int.to.str", vec![self.small_int(d)]),
            _ => {
                let op = *self.pick(&["str.prefixof", "str.suffixof", "str.contains", "="]);
                let c = Term::app(op, vec![self.str_term(d), self.str_term(d)]);
                Term::app("ite", vec![c, self.str_term(d), self.str_term(d)])
            }
        }
    }

    /// Int-valued string measurements, mixed with small literals.
    pub fn small_int(&mut self, depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return int(self.rng.gen_range(-2..=4));
        }
        let d = depth - 1;
        match self.rng.gen_range(0..4) {
            0 => Term::app("str.len", vec![self.str_term(d)]),
            1 => Term::app("str.indexof", vec![self.str_term(d), self.str_term(d), self.small_int(d)]),
            2 => Term::app("str.to.int", vec![self.str_term(d)]),
            _ => Term::app("+", vec![self.small_int(d), self.small_int(d)]),
        }
    }
}

/// Evaluates each ground term locally and through the backend (one query
/// binding `v<i>` to term i) and returns the number of terms compared.
pub fn cross_check(logic: &str, terms: &[Term]) -> Result<usize, String> {
    use sygus_core::semantics::eval;
    use sygus_core::smt::{SatResult, SmtConfig, SmtSession};
    let mut local = Vec::new();
    let mut decls = Vec::new();
    let mut asserts = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let v = eval(t, &Default::default(), &Default::default()).map_err(|e| format!("{t:?}: {e}"))?;
        let name = format!("v{i}");
        decls.push((name.clone(), v.sort()));
        asserts.push(Term::app("=", vec![Term::var(name), t.clone()]));
        local.push(v);
    }
    let mut session = SmtSession::new(SmtConfig::default());
    let model = match session.check_sat(logic, &decls, &asserts).map_err(|e| e.to_string())? {
        SatResult::Sat(m) => m,
        other => return Err(format!("backend answered {other:?}")),
    };
    for (i, (t, v)) in terms.iter().zip(&local).enumerate() {
        let theirs = &model[&format!("v{i}")];
        if theirs != v {
            return Err(format!(
                "{}: local {} backend {}",
                sygus_core::printer::print_term(t),
                sygus_core::printer::print_value(v),
                sygus_core::printer::print_value(theirs)
            ));
        }
    }
    Ok(terms.len())
}

pub fn random_terms(seed: u64, theory: &str, n: usize) -> Vec<Term> {
    use rand::SeedableRng;
    let mut g = TermGen { rng: StdRng::seed_from_u64(seed) };
    (0..n)
        .map(|_| match theory {
            "int" => g.int_term(4),
            "bv4" => g.bv_term(4, 4),
            "bv8" => g.bv_term(8, 4),
            "string" => {
                if g.rng.gen_bool(0.7) {
                    g.str_term(3)
                } else {
                    g.small_int(3)
                }
            }
            other => panic!("unknown theory {other}"),
        })
        .collect()
}

/// Theory name and backend logic for the cross-check.
pub const THEORIES: [(&str, &str); 4] = [("int", "NIA"), ("bv4", "BV"), ("bv8", "BV"), ("string", "SLIA")];
