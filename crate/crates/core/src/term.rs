//! Sorted terms: the shared representation for constraints, grammar
//! skeletons and synthesized function bodies.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, Zero};

/// Widest bit-vector sort supported by the concrete evaluator.
pub const MAX_BV_WIDTH: u32 = 128;

/// Marker that separates a source name from the counter of a fresh name.
/// The lexer rejects it in source identifiers, so fresh names never collide
/// with user symbols.
pub const FRESH_MARKER: char = '@';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    BitVec(u32),
    Str,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Int => write!(f, "Int"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Str => write!(f, "String"),
        }
    }
}

/// A concrete value of one of the supported sorts. Literals in terms carry
/// a `Value` directly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    /// `bits` is always below `2^width`.
    BitVec { width: u32, bits: u128 },
    Str(String),
}

pub(crate) fn bv_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    /// Builds a bit-vector value, truncating `bits` to `width`.
    pub fn bv(width: u32, bits: u128) -> Value {
        assert!((1..=MAX_BV_WIDTH).contains(&width), "bit-vector width {width} out of range");
        Value::BitVec { width, bits: bits & bv_mask(width) }
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::BitVec { width, .. } => Sort::BitVec(*width),
            Value::Str(_) => Sort::Str,
        }
    }

    /// The default value of a sort, used for variables a model leaves unassigned.
    pub fn default_of(sort: Sort) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::BitVec(w) => Value::bv(w, 0),
            Sort::Str => Value::Str(String::new()),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// The term denoting this value. Negative integers become `(- k)` so
    /// that the term matches what the printer and parser produce.
    pub fn to_term(&self) -> Term {
        match self {
            Value::Int(i) if i.sign() == Sign::Minus => {
                Term::App("-".into(), vec![Term::Lit(Value::Int(i.abs()))])
            }
            v => Term::Lit(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Lit(Value),
    Var(String),
    App(String, Vec<Term>),
    Let(Vec<(String, Term)>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(op: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(op.into(), args)
    }

    pub fn int(v: impl Into<BigInt>) -> Term {
        Value::Int(v.into()).to_term()
    }

    pub fn bool(b: bool) -> Term {
        Term::Lit(Value::Bool(b))
    }

    pub fn size(&self) -> usize {
        term_size(self)
    }

    /// Recognizes literal constants, including the `(- k)` spelling of a
    /// negative integer.
    pub fn as_constant(&self) -> Option<Value> {
        match self {
            Term::Lit(v) => Some(v.clone()),
            Term::App(op, args) if op == "-" && args.len() == 1 => match &args[0] {
                Term::Lit(Value::Int(k)) => Some(Value::Int(-k)),
                _ => None,
            },
            _ => None,
        }
    }

    /// True if `name` is applied anywhere in the term.
    pub fn mentions_fun(&self, name: &str) -> bool {
        match self {
            Term::Lit(_) | Term::Var(_) => false,
            Term::App(op, args) => op == name || args.iter().any(|a| a.mentions_fun(name)),
            Term::Let(bs, body) => {
                bs.iter().any(|(_, t)| t.mentions_fun(name)) || body.mentions_fun(name)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free_vars(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every symbol that occurs in the term: variables, binders and operators.
    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Lit(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(op, args) => {
                out.insert(op.clone());
                args.iter().for_each(|a| a.symbols(out));
            }
            Term::Let(bs, body) => {
                for (n, t) in bs {
                    out.insert(n.clone());
                    t.symbols(out);
                }
                body.symbols(out);
            }
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        match self {
            Term::Lit(_) | Term::Var(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.walk(f)),
            Term::Let(bs, body) => {
                bs.iter().for_each(|(_, t)| t.walk(f));
                body.walk(f);
            }
        }
    }
}

fn collect_free_vars(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Term::Lit(_) => {}
        Term::Var(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_free_vars(a, bound, out)),
        Term::Let(bs, body) => {
            for (_, bt) in bs {
                collect_free_vars(bt, bound, out);
            }
            let depth = bound.len();
            bound.extend(bs.iter().map(|(n, _)| n.clone()));
            collect_free_vars(body, bound, out);
            bound.truncate(depth);
        }
    }
}

/// Number of nodes in the parse tree. A `let` counts one node for the binder
/// plus its binding bodies and its body.
pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Lit(_) | Term::Var(_) => 1,
        Term::App(_, args) => 1 + args.iter().map(term_size).sum::<usize>(),
        Term::Let(bs, body) => {
            1 + bs.iter().map(|(_, b)| term_size(b)).sum::<usize>() + term_size(body)
        }
    }
}

/// A function definition: `define-fun` in a benchmark, or a synthesized
/// implementation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

impl FunDef {
    pub fn signature(&self) -> FunSig {
        FunSig { params: self.params.iter().map(|(_, s)| *s).collect(), ret: self.ret }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunSig {
    pub params: Vec<Sort>,
    pub ret: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("`{name}` applied to {found} arguments, expected {expected}")]
    Arity { name: String, expected: usize, found: usize },
}

/// Replaces every application of `def.name` in `phi` by `def.body` with the
/// parameters bound to the call's arguments. Binders inside the body that
/// would capture a free variable of an argument are renamed.
pub fn substitute(phi: &Term, def: &FunDef) -> Result<Term, SubstError> {
    let mut used = BTreeSet::new();
    phi.symbols(&mut used);
    def.body.symbols(&mut used);
    let mut fresh = FreshNames { used, next: 0 };
    subst_calls(phi, def, &mut fresh)
}

fn subst_calls(t: &Term, def: &FunDef, fresh: &mut FreshNames) -> Result<Term, SubstError> {
    Ok(match t {
        Term::Lit(_) | Term::Var(_) => t.clone(),
        Term::App(op, args) => {
            let args = args
                .iter()
                .map(|a| subst_calls(a, def, fresh))
                .collect::<Result<Vec<_>, _>>()?;
            if *op == def.name {
                if args.len() != def.params.len() {
                    return Err(SubstError::Arity {
                        name: op.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                let map: HashMap<&str, Term> =
                    def.params.iter().map(|(n, _)| n.as_str()).zip(args).collect();
                subst_vars(&def.body, &map, fresh)
            } else {
                Term::App(op.clone(), args)
            }
        }
        Term::Let(bs, body) => Term::Let(
            bs.iter()
                .map(|(n, b)| Ok((n.clone(), subst_calls(b, def, fresh)?)))
                .collect::<Result<Vec<_>, SubstError>>()?,
            Box::new(subst_calls(body, def, fresh)?),
        ),
    })
}

struct FreshNames {
    used: BTreeSet<String>,
    next: usize,
}

impl FreshNames {
    fn fresh(&mut self, base: &str) -> String {
        let stem = base.split(FRESH_MARKER).next().unwrap_or(base);
        loop {
            let candidate = format!("{stem}{FRESH_MARKER}{}", self.next);
            self.next += 1;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// Simultaneous capture-avoiding substitution of variables.
fn subst_vars(t: &Term, map: &HashMap<&str, Term>, fresh: &mut FreshNames) -> Term {
    if map.is_empty() {
        return t.clone();
    }
    match t {
        Term::Lit(_) => t.clone(),
        Term::Var(v) => map.get(v.as_str()).cloned().unwrap_or_else(|| t.clone()),
        Term::App(op, args) => {
            Term::App(op.clone(), args.iter().map(|a| subst_vars(a, map, fresh)).collect())
        }
        Term::Let(bs, body) => {
            let bindings: Vec<(String, Term)> =
                bs.iter().map(|(n, b)| (n.clone(), subst_vars(b, map, fresh))).collect();
            let mut inner: HashMap<&str, Term> = map
                .iter()
                .filter(|(k, _)| !bs.iter().any(|(n, _)| n == *k))
                .map(|(k, v)| (*k, v.clone()))
                .collect();
            let incoming: BTreeSet<String> =
                inner.values().flat_map(|v| v.free_vars()).collect();
            let mut renamed = Vec::with_capacity(bindings.len());
            for ((orig, _), (n, b)) in bs.iter().zip(bindings) {
                if incoming.contains(&n) {
                    let new_name = fresh.fresh(&n);
                    inner.insert(orig.as_str(), Term::Var(new_name.clone()));
                    renamed.push((new_name, b));
                } else {
                    renamed.push((n, b));
                }
            }
            Term::Let(renamed, Box::new(subst_vars(body, &inner, fresh)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SortError {
    #[error("unknown symbol `{symbol}` in `{term}`")]
    UnknownSymbol { symbol: String, term: String },
    #[error("`{op}` expects {expected} arguments, found {found}, in `{term}`")]
    Arity { op: String, expected: String, found: usize, term: String },
    #[error("operand sort mismatch in `{term}`: {detail}")]
    Mismatch { term: String, detail: String },
    #[error("duplicate binding `{name}` in `{term}`")]
    DuplicateBinding { name: String, term: String },
}

/// The symbols in scope for sort checking: variables and non-builtin
/// functions (defined and synthesized).
#[derive(Debug, Clone, Default)]
pub struct Signature {
    pub vars: HashMap<String, Sort>,
    pub funs: HashMap<String, FunSig>,
}

impl Signature {
    pub fn with_vars<'a>(vars: impl IntoIterator<Item = &'a (String, Sort)>) -> Signature {
        Signature { vars: vars.into_iter().cloned().collect(), funs: HashMap::new() }
    }
}

/// Sort of `t` under `sig`, or the first sort error found.
pub fn well_sorted(t: &Term, sig: &Signature) -> Result<Sort, SortError> {
    let mut scope = Vec::new();
    sort_of(t, sig, &mut scope)
}

fn sort_of(t: &Term, sig: &Signature, scope: &mut Vec<(String, Sort)>) -> Result<Sort, SortError> {
    match t {
        Term::Lit(v) => Ok(v.sort()),
        Term::Var(v) => scope
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, s)| *s)
            .or_else(|| sig.vars.get(v).copied())
            .ok_or_else(|| SortError::UnknownSymbol {
                symbol: v.clone(),
                term: crate::printer::print_term(t),
            }),
        Term::App(op, args) => {
            let sorts = args
                .iter()
                .map(|a| sort_of(a, sig, scope))
                .collect::<Result<Vec<_>, _>>()?;
            apply_sort(op, &sorts, sig).map_err(|e| e.into_sort_error(op, crate::printer::print_term(t)))
        }
        Term::Let(bs, body) => {
            let mut names = BTreeSet::new();
            let mut bound = Vec::with_capacity(bs.len());
            for (n, b) in bs {
                if !names.insert(n.as_str()) {
                    return Err(SortError::DuplicateBinding {
                        name: n.clone(),
                        term: crate::printer::print_term(t),
                    });
                }
                bound.push((n.clone(), sort_of(b, sig, scope)?));
            }
            let depth = scope.len();
            scope.extend(bound);
            let r = sort_of(body, sig, scope);
            scope.truncate(depth);
            r
        }
    }
}

/// Why an application failed to sort check, before the offending term is
/// attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApplyError {
    Unknown,
    Arity(String, usize),
    Mismatch(String),
}

impl ApplyError {
    pub(crate) fn into_sort_error(self, op: &str, term: String) -> SortError {
        match self {
            ApplyError::Unknown => SortError::UnknownSymbol { symbol: op.to_string(), term },
            ApplyError::Arity(expected, found) => {
                SortError::Arity { op: op.to_string(), expected, found, term }
            }
            ApplyError::Mismatch(detail) => SortError::Mismatch { term, detail },
        }
    }
}

/// Result sort of applying `op` to arguments of the given sorts. Builtin
/// theory operators take precedence over user functions of the same name.
pub fn apply_sort(op: &str, args: &[Sort], sig: &Signature) -> Result<Sort, ApplyError> {
    if let Some(r) = builtin_sort(op, args) {
        return r;
    }
    let fs = sig.funs.get(op).ok_or(ApplyError::Unknown)?;
    if fs.params.len() != args.len() {
        return Err(ApplyError::Arity(fs.params.len().to_string(), args.len()));
    }
    for (i, (want, got)) in fs.params.iter().zip(args).enumerate() {
        if want != got {
            return Err(ApplyError::Mismatch(format!(
                "argument {} of `{op}` has sort {got}, expected {want}",
                i + 1
            )));
        }
    }
    Ok(fs.ret)
}

/// True for every operator the evaluator and sort checker know natively.
pub fn is_builtin(op: &str) -> bool {
    BUILTIN_OPS.contains(&op)
}

pub const BUILTIN_OPS: &[&str] = &[
    "not", "and", "or", "xor", "=>", "=", "distinct", "ite", //
    "+", "-", "*", "div", "mod", "abs", "<=", "<", ">=", ">", //
    "bvnot", "bvneg", "bvand", "bvor", "bvxor", "bvnand", "bvnor", "bvxnor", "bvadd", "bvsub",
    "bvmul", "bvudiv", "bvurem", "bvsdiv", "bvsrem", "bvsmod", "bvshl", "bvlshr", "bvashr",
    "bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge", "concat", //
    "str.++", "str.len", "str.at", "str.substr", "str.prefixof", "str.suffixof", "str.contains",
    "str.indexof", "str.replace", "str.to.int", "str.to_int", "int.to.str", "str.from_int",
];

fn arity(expected: &str, found: usize) -> Option<Result<Sort, ApplyError>> {
    Some(Err(ApplyError::Arity(expected.to_string(), found)))
}

fn all_are(args: &[Sort], want: Sort, op: &str) -> Result<(), ApplyError> {
    match args.iter().position(|s| *s != want) {
        None => Ok(()),
        Some(i) => Err(ApplyError::Mismatch(format!(
            "argument {} of `{op}` has sort {}, expected {want}",
            i + 1,
            args[i]
        ))),
    }
}

fn same_bv(args: &[Sort], op: &str) -> Result<u32, ApplyError> {
    match args.first() {
        Some(Sort::BitVec(w)) => {
            all_are(args, Sort::BitVec(*w), op)?;
            Ok(*w)
        }
        Some(s) => Err(ApplyError::Mismatch(format!("`{op}` expects bit-vectors, found {s}"))),
        None => Err(ApplyError::Arity("1+".into(), 0)),
    }
}

fn builtin_sort(op: &str, args: &[Sort]) -> Option<Result<Sort, ApplyError>> {
    use Sort::*;
    let n = args.len();
    let fixed = |params: &[Sort], ret: Sort| -> Result<Sort, ApplyError> {
        if params.len() != n {
            return Err(ApplyError::Arity(params.len().to_string(), n));
        }
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            if p != a {
                return Err(ApplyError::Mismatch(format!(
                    "argument {} of `{op}` has sort {a}, expected {p}",
                    i + 1
                )));
            }
        }
        Ok(ret)
    };
    Some(match op {
        "not" => fixed(&[Bool], Bool),
        "and" | "or" | "xor" | "=>" => {
            if n < 1 || (op == "=>" && n < 2) {
                return arity(if op == "=>" { "2+" } else { "1+" }, n);
            }
            all_are(args, Bool, op).map(|_| Bool)
        }
        "=" | "distinct" => {
            if n < 2 {
                return arity("2+", n);
            }
            all_are(args, args[0], op).map(|_| Bool)
        }
        "ite" => {
            if n != 3 {
                return arity("3", n);
            }
            if args[0] != Bool {
                Err(ApplyError::Mismatch(format!("`ite` condition has sort {}", args[0])))
            } else if args[1] != args[2] {
                Err(ApplyError::Mismatch(format!(
                    "`ite` branches have different sorts {} and {}",
                    args[1], args[2]
                )))
            } else {
                Ok(args[1])
            }
        }
        "+" | "*" => {
            if n < 2 {
                return arity("2+", n);
            }
            all_are(args, Int, op).map(|_| Int)
        }
        "-" => {
            if n < 1 {
                return arity("1+", n);
            }
            all_are(args, Int, op).map(|_| Int)
        }
        "div" | "mod" => fixed(&[Int, Int], Int),
        "abs" => fixed(&[Int], Int),
        "<=" | "<" | ">=" | ">" => {
            if n < 2 {
                return arity("2+", n);
            }
            all_are(args, Int, op).map(|_| Bool)
        }
        "bvnot" | "bvneg" => {
            if n != 1 {
                return arity("1", n);
            }
            same_bv(args, op).map(BitVec)
        }
        "bvand" | "bvor" | "bvxor" | "bvadd" | "bvmul" => {
            if n < 2 {
                return arity("2+", n);
            }
            same_bv(args, op).map(BitVec)
        }
        "bvnand" | "bvnor" | "bvxnor" | "bvsub" | "bvudiv" | "bvurem" | "bvsdiv" | "bvsrem"
        | "bvsmod" | "bvshl" | "bvlshr" | "bvashr" => {
            if n != 2 {
                return arity("2", n);
            }
            same_bv(args, op).map(BitVec)
        }
        "bvult" | "bvule" | "bvugt" | "bvuge" | "bvslt" | "bvsle" | "bvsgt" | "bvsge" => {
            if n != 2 {
                return arity("2", n);
            }
            same_bv(args, op).map(|_| Bool)
        }
        "concat" => match args {
            [BitVec(a), BitVec(b)] if a + b <= MAX_BV_WIDTH => Ok(BitVec(a + b)),
            [BitVec(_), BitVec(_)] => {
                Err(ApplyError::Mismatch(format!("`concat` result wider than {MAX_BV_WIDTH} bits")))
            }
            _ if n != 2 => Err(ApplyError::Arity("2".into(), n)),
            _ => Err(ApplyError::Mismatch("`concat` expects bit-vectors".into())),
        },
        "str.++" => {
            if n < 2 {
                return arity("2+", n);
            }
            all_are(args, Str, op).map(|_| Str)
        }
        "str.len" => fixed(&[Str], Int),
        "str.at" => fixed(&[Str, Int], Str),
        "str.substr" => fixed(&[Str, Int, Int], Str),
        "str.prefixof" | "str.suffixof" | "str.contains" => fixed(&[Str, Str], Bool),
        "str.indexof" => fixed(&[Str, Str, Int], Int),
        "str.replace" => fixed(&[Str, Str, Str], Str),
        "str.to.int" | "str.to_int" => fixed(&[Str], Int),
        "int.to.str" | "str.from_int" => fixed(&[Int], Str),
        _ => return None,
    })
}
