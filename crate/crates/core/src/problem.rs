//! Benchmark-level data: grammars, functions to synthesize, constraints and
//! proposed solutions.

use std::collections::BTreeSet;

use crate::term::{apply_sort, FunDef, FunSig, Signature, Sort, SortError, Term, Value};

/// A production right-hand side: a term skeleton whose leaves may also be
/// nonterminals or "any constant / any parameter of sort S".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GTerm {
    Lit(Value),
    Var(String),
    NonTerminal(String),
    Constant(Sort),
    Variable(Sort),
    App(String, Vec<GTerm>),
    Let(Vec<(String, GTerm)>, Box<GTerm>),
}

impl GTerm {
    pub fn app(op: impl Into<String>, args: Vec<GTerm>) -> GTerm {
        GTerm::App(op.into(), args)
    }

    pub fn nt(name: impl Into<String>) -> GTerm {
        GTerm::NonTerminal(name.into())
    }

    pub fn var(name: impl Into<String>) -> GTerm {
        GTerm::Var(name.into())
    }

    pub fn int(v: i64) -> GTerm {
        GTerm::Lit(Value::int(v))
    }

    /// Nonterminals referenced anywhere in the skeleton.
    pub fn nonterminals<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            GTerm::NonTerminal(n) => out.push(n),
            GTerm::App(_, args) => args.iter().for_each(|a| a.nonterminals(out)),
            GTerm::Let(bs, body) => {
                bs.iter().for_each(|(_, b)| b.nonterminals(out));
                body.nonterminals(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub nonterminal: String,
    pub sort: Sort,
    pub alternatives: Vec<GTerm>,
}

/// A regular tree grammar over the parameters of one function. The first
/// production's nonterminal is the start symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub productions: Vec<Production>,
    /// Parameters of the function the grammar belongs to; `(Variable S)`
    /// leaves range over these.
    pub params: Vec<(String, Sort)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("grammar has no productions")]
    Empty,
    #[error("duplicate nonterminal `{0}`")]
    DuplicateNonTerminal(String),
    #[error("unknown nonterminal `{0}`")]
    UnknownNonTerminal(String),
    #[error("start symbol has sort {found}, function returns {expected}")]
    StartSort { expected: Sort, found: Sort },
    #[error("alternative of `{nonterminal}` has sort {found}, expected {expected}")]
    AlternativeSort { nonterminal: String, expected: Sort, found: Sort },
    #[error("in grammar: {0}")]
    Sort(#[from] SortError),
}

impl Grammar {
    pub fn start(&self) -> &str {
        &self.productions[0].nonterminal
    }

    pub fn start_sort(&self) -> Sort {
        self.productions[0].sort
    }

    pub fn index_of(&self, nonterminal: &str) -> Option<usize> {
        self.productions.iter().position(|p| p.nonterminal == nonterminal)
    }

    pub fn production(&self, nonterminal: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.nonterminal == nonterminal)
    }

    /// Drops repeated alternatives, keeping the first occurrence.
    pub fn dedup_alternatives(&mut self) {
        for p in &mut self.productions {
            let mut seen = Vec::new();
            p.alternatives.retain(|a| {
                if seen.contains(a) {
                    false
                } else {
                    seen.push(a.clone());
                    true
                }
            });
        }
    }

    /// Checks nonterminal references, uniqueness and alternative sorts.
    /// `funs` supplies user-defined functions the grammar may apply.
    pub fn validate(&self, ret: Sort, funs: &Signature) -> Result<(), GrammarError> {
        if self.productions.is_empty() {
            return Err(GrammarError::Empty);
        }
        let mut names = BTreeSet::new();
        for p in &self.productions {
            if !names.insert(p.nonterminal.as_str()) {
                return Err(GrammarError::DuplicateNonTerminal(p.nonterminal.clone()));
            }
        }
        if self.start_sort() != ret {
            return Err(GrammarError::StartSort { expected: ret, found: self.start_sort() });
        }
        let mut sig = funs.clone();
        sig.vars = self.params.iter().cloned().collect();
        for p in &self.productions {
            for alt in &p.alternatives {
                let found = self.gterm_sort(alt, &sig, &mut Vec::new())?;
                if found != p.sort {
                    return Err(GrammarError::AlternativeSort {
                        nonterminal: p.nonterminal.clone(),
                        expected: p.sort,
                        found,
                    });
                }
            }
        }
        Ok(())
    }

    fn gterm_sort(
        &self,
        g: &GTerm,
        sig: &Signature,
        scope: &mut Vec<(String, Sort)>,
    ) -> Result<Sort, GrammarError> {
        match g {
            GTerm::Lit(v) => Ok(v.sort()),
            GTerm::Constant(s) | GTerm::Variable(s) => Ok(*s),
            GTerm::NonTerminal(n) => self
                .production(n)
                .map(|p| p.sort)
                .ok_or_else(|| GrammarError::UnknownNonTerminal(n.clone())),
            GTerm::Var(v) => scope
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, s)| *s)
                .or_else(|| sig.vars.get(v).copied())
                .ok_or_else(|| {
                    GrammarError::Sort(SortError::UnknownSymbol { symbol: v.clone(), term: v.clone() })
                }),
            GTerm::App(op, args) => {
                let sorts = args
                    .iter()
                    .map(|a| self.gterm_sort(a, sig, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                apply_sort(op, &sorts, sig).map_err(|e| {
                    GrammarError::Sort(e.into_sort_error(op, crate::printer::print_gterm(g)))
                })
            }
            GTerm::Let(bs, body) => {
                let mut bound = Vec::new();
                for (n, b) in bs {
                    bound.push((n.clone(), self.gterm_sort(b, sig, scope)?));
                }
                let depth = scope.len();
                scope.extend(bound);
                let r = self.gterm_sort(body, sig, scope);
                scope.truncate(depth);
                r
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFun {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    /// `None` when the benchmark gave no grammar; see [`default_grammar`].
    pub grammar: Option<Grammar>,
}

impl SynthFun {
    pub fn signature(&self) -> FunSig {
        FunSig { params: self.params.iter().map(|(_, s)| *s).collect(), ret: self.ret }
    }

    /// The explicit grammar, or the default grammar for `logic`.
    pub fn effective_grammar(&self, logic: &str) -> Grammar {
        self.grammar
            .clone()
            .unwrap_or_else(|| default_grammar(logic, &self.params, self.ret))
    }
}

/// `(inv-constraint inv pre trans post)`, kept symbolic until desugared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvConstraint {
    pub inv: String,
    pub pre: String,
    pub trans: String,
    pub post: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    General,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub logic: String,
    pub vars: Vec<(String, Sort)>,
    /// Primed copies (`x!`) of state variables from `declare-primed-var`.
    pub primed_vars: Vec<(String, Sort)>,
    pub defined_funs: Vec<FunDef>,
    pub synth_funs: Vec<SynthFun>,
    pub constraints: Vec<Term>,
    pub inv_constraints: Vec<InvConstraint>,
    pub kind: ProblemKind,
}

impl Problem {
    /// Declared variables followed by primed variables.
    pub fn all_vars(&self) -> impl Iterator<Item = &(String, Sort)> {
        self.vars.iter().chain(self.primed_vars.iter())
    }

    /// State variables, i.e. the unprimed names of `primed_vars`.
    pub fn state_vars(&self) -> Vec<(String, Sort)> {
        self.primed_vars
            .iter()
            .map(|(n, s)| (n.strip_suffix('!').unwrap_or(n).to_string(), *s))
            .collect()
    }

    pub fn synth_fun(&self, name: &str) -> Option<&SynthFun> {
        self.synth_funs.iter().find(|f| f.name == name)
    }

    pub fn defined_fun(&self, name: &str) -> Option<&FunDef> {
        self.defined_funs.iter().find(|f| f.name == name)
    }

    /// Variables, defined functions and synth-funs in scope for constraints.
    pub fn signature(&self) -> Signature {
        let mut sig = Signature::with_vars(self.all_vars());
        for d in &self.defined_funs {
            sig.funs.insert(d.name.clone(), d.signature());
        }
        for s in &self.synth_funs {
            sig.funs.insert(s.name.clone(), s.signature());
        }
        sig
    }

    /// Defined functions only; the scope of candidate bodies.
    pub fn defined_signature(&self) -> Signature {
        let mut sig = Signature::default();
        for d in &self.defined_funs {
            sig.funs.insert(d.name.clone(), d.signature());
        }
        sig
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesugarError {
    #[error("inv-constraint refers to unknown function `{0}`")]
    Unresolved(String),
    #[error("`{name}` takes {found} parameters, expected {expected} for the state variables")]
    Arity { name: String, expected: usize, found: usize },
    #[error("`{name}` has a signature incompatible with the state variables")]
    Sort { name: String },
}

impl Problem {
    /// Replaces every inv-constraint by its three implications over the
    /// state variables `x` and their primed copies `x!`:
    /// pre(x) => inv(x), inv(x) and trans(x, x!) => inv(x!), inv(x) => post(x).
    pub fn desugar_inv(&self) -> Result<Problem, DesugarError> {
        let mut out = self.clone();
        out.inv_constraints.clear();
        out.kind = ProblemKind::General;
        let state = self.state_vars();
        let unprimed: Vec<Term> = state.iter().map(|(n, _)| Term::var(n.clone())).collect();
        let primed: Vec<Term> = self.primed_vars.iter().map(|(n, _)| Term::var(n.clone())).collect();
        let sorts: Vec<Sort> = state.iter().map(|(_, s)| *s).collect();
        let check = |name: &str, want: &[Sort], ret: Option<Sort>| -> Result<(), DesugarError> {
            let sig = if let Some(f) = self.synth_fun(name) {
                f.signature()
            } else if let Some(d) = self.defined_fun(name) {
                d.signature()
            } else {
                return Err(DesugarError::Unresolved(name.to_string()));
            };
            if sig.params.len() != want.len() {
                return Err(DesugarError::Arity {
                    name: name.to_string(),
                    expected: want.len(),
                    found: sig.params.len(),
                });
            }
            if sig.params != want || ret.is_some_and(|r| r != sig.ret) || sig.ret != Sort::Bool {
                return Err(DesugarError::Sort { name: name.to_string() });
            }
            Ok(())
        };
        let both: Vec<Sort> = sorts.iter().chain(sorts.iter()).copied().collect();
        for ic in &self.inv_constraints {
            check(&ic.inv, &sorts, Some(Sort::Bool))?;
            check(&ic.pre, &sorts, None)?;
            check(&ic.trans, &both, None)?;
            check(&ic.post, &sorts, None)?;
            let call = |f: &str, args: &[Term]| Term::app(f, args.to_vec());
            let trans_args: Vec<Term> = unprimed.iter().chain(primed.iter()).cloned().collect();
            out.constraints.push(Term::app(
                "=>",
                vec![call(&ic.pre, &unprimed), call(&ic.inv, &unprimed)],
            ));
            out.constraints.push(Term::app(
                "=>",
                vec![
                    Term::app("and", vec![call(&ic.inv, &unprimed), call(&ic.trans, &trans_args)]),
                    call(&ic.inv, &primed),
                ],
            ));
            out.constraints.push(Term::app(
                "=>",
                vec![call(&ic.inv, &unprimed), call(&ic.post, &unprimed)],
            ));
        }
        Ok(out)
    }
}

/// A proposed implementation of one synth-fun.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub target: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

impl Candidate {
    pub fn to_fun_def(&self) -> FunDef {
        FunDef {
            name: self.target.clone(),
            params: self.params.clone(),
            ret: self.ret,
            body: self.body.clone(),
        }
    }
}

fn nonterminal_for(sort: Sort, ret: Sort) -> String {
    if sort == ret {
        return "Start".into();
    }
    match sort {
        Sort::Bool => "StartBool".into(),
        Sort::Int => "StartInt".into(),
        Sort::BitVec(w) => format!("StartBv{w}"),
        Sort::Str => "StartStr".into(),
    }
}

/// Grammar used when a synth-fun or synth-inv omits one: the theory
/// operators of `logic` over the parameters, with the constants 0 and 1
/// (Int, bit-vectors), `true`/`false` and `""`, plus a `(Constant S)` leaf
/// for every non-Bool sort.
pub fn default_grammar(logic: &str, params: &[(String, Sort)], ret: Sort) -> Grammar {
    let upper = logic.to_ascii_uppercase();
    let strings = upper.contains('S') && !upper.contains("BV");
    let bitvec = upper.contains("BV");
    let ints = upper.contains("IA") || strings || (!bitvec && !strings);

    let mut sorts: Vec<Sort> = vec![ret];
    let mut add = |s: Sort| {
        if !sorts.contains(&s) {
            sorts.push(s);
        }
    };
    add(Sort::Bool);
    for (_, s) in params {
        add(*s);
    }
    if ints {
        add(Sort::Int);
    }
    if strings {
        add(Sort::Str);
    }

    let nt = |s: Sort| GTerm::NonTerminal(nonterminal_for(s, ret));
    let has = |s: Sort| sorts.contains(&s);
    let mut productions = Vec::new();
    for &sort in &sorts {
        let mut alts: Vec<GTerm> = params
            .iter()
            .filter(|(_, s)| *s == sort)
            .map(|(n, _)| GTerm::Var(n.clone()))
            .collect();
        let bin = |op: &str, a: Sort, b: Sort| GTerm::app(op, vec![nt(a), nt(b)]);
        match sort {
            Sort::Bool => {
                alts.push(GTerm::Lit(Value::Bool(true)));
                alts.push(GTerm::Lit(Value::Bool(false)));
                alts.push(GTerm::app("not", vec![nt(Sort::Bool)]));
                alts.push(bin("and", Sort::Bool, Sort::Bool));
                alts.push(bin("or", Sort::Bool, Sort::Bool));
                alts.push(bin("=>", Sort::Bool, Sort::Bool));
                for &other in &sorts {
                    match other {
                        Sort::Int => {
                            for op in ["=", "<=", "<", ">=", ">"] {
                                alts.push(bin(op, Sort::Int, Sort::Int));
                            }
                        }
                        Sort::BitVec(_) => {
                            for op in ["=", "bvult", "bvule", "bvslt", "bvsle"] {
                                alts.push(bin(op, other, other));
                            }
                        }
                        Sort::Str => {
                            for op in ["=", "str.prefixof", "str.suffixof", "str.contains"] {
                                alts.push(bin(op, Sort::Str, Sort::Str));
                            }
                        }
                        Sort::Bool => {}
                    }
                }
            }
            Sort::Int => {
                alts.push(GTerm::int(0));
                alts.push(GTerm::int(1));
                alts.push(GTerm::Constant(Sort::Int));
                alts.push(bin("+", Sort::Int, Sort::Int));
                alts.push(bin("-", Sort::Int, Sort::Int));
                alts.push(GTerm::app("*", vec![GTerm::Constant(Sort::Int), nt(Sort::Int)]));
                alts.push(GTerm::app("*", vec![nt(Sort::Int), GTerm::Constant(Sort::Int)]));
                if has(Sort::Str) {
                    alts.push(GTerm::app("str.len", vec![nt(Sort::Str)]));
                    alts.push(GTerm::app(
                        "str.indexof",
                        vec![nt(Sort::Str), nt(Sort::Str), nt(Sort::Int)],
                    ));
                    alts.push(GTerm::app("str.to.int", vec![nt(Sort::Str)]));
                }
                alts.push(GTerm::app("ite", vec![nt(Sort::Bool), nt(Sort::Int), nt(Sort::Int)]));
            }
            Sort::BitVec(w) => {
                alts.push(GTerm::Lit(Value::bv(w, 0)));
                alts.push(GTerm::Lit(Value::bv(w, 1)));
                alts.push(GTerm::Constant(sort));
                for op in ["bvnot", "bvneg"] {
                    alts.push(GTerm::app(op, vec![nt(sort)]));
                }
                for op in [
                    "bvand", "bvor", "bvxor", "bvadd", "bvsub", "bvmul", "bvudiv", "bvurem",
                    "bvshl", "bvlshr", "bvashr",
                ] {
                    alts.push(bin(op, sort, sort));
                }
                alts.push(GTerm::app("ite", vec![nt(Sort::Bool), nt(sort), nt(sort)]));
            }
            Sort::Str => {
                alts.push(GTerm::Lit(Value::str("")));
                alts.push(GTerm::Constant(Sort::Str));
                alts.push(bin("str.++", Sort::Str, Sort::Str));
                alts.push(GTerm::app("str.at", vec![nt(Sort::Str), nt(Sort::Int)]));
                alts.push(GTerm::app(
                    "str.substr",
                    vec![nt(Sort::Str), nt(Sort::Int), nt(Sort::Int)],
                ));
                alts.push(GTerm::app(
                    "str.replace",
                    vec![nt(Sort::Str), nt(Sort::Str), nt(Sort::Str)],
                ));
                alts.push(GTerm::app("int.to.str", vec![nt(Sort::Int)]));
                alts.push(GTerm::app("ite", vec![nt(Sort::Bool), nt(Sort::Str), nt(Sort::Str)]));
            }
        }
        productions.push(Production { nonterminal: nonterminal_for(sort, ret), sort, alternatives: alts });
    }
    Grammar { productions, params: params.to_vec() }
}
