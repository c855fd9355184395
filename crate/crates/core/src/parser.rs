//! SyGuS-IF v1 commands to [`Problem`], and solver output to [`Candidate`]s.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;

use crate::printer::print_term;
use crate::problem::{
    GTerm, Grammar, InvConstraint, Problem, ProblemKind, Production, SynthFun,
};
use crate::sexpr::{parse_all, Atom, LexError, SExpr, SExprKind, SourceSpan};
use crate::term::{
    is_builtin, substitute, well_sorted, FunDef, Signature, Sort, Term, Value, MAX_BV_WIDTH,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { message: e.message, span: e.span }
    }
}

fn err<T>(e: &SExpr, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { message: message.into(), span: e.span })
}

type Aliases = HashMap<String, Sort>;

fn symbol<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    match e.as_symbol() {
        Some(s) => Ok(s),
        None => err(e, format!("expected {what}, found `{e}`")),
    }
}

fn list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ParseError> {
    match e.as_list() {
        Some(l) => Ok(l),
        None => err(e, format!("expected {what}, found `{e}`")),
    }
}

fn numeral(e: &SExpr) -> Option<&num_bigint::BigUint> {
    match &e.kind {
        SExprKind::Atom(Atom::Numeral(n)) => Some(n),
        _ => None,
    }
}

fn bv_width(e: &SExpr) -> Result<u32, ParseError> {
    match numeral(e).and_then(|n| u32::try_from(n).ok()) {
        Some(w) if (1..=MAX_BV_WIDTH).contains(&w) => Ok(w),
        _ => err(e, format!("bit-vector width must be between 1 and {MAX_BV_WIDTH}")),
    }
}

fn parse_sort(e: &SExpr, aliases: &Aliases) -> Result<Sort, ParseError> {
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) => match s.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "String" => Ok(Sort::Str),
            other => match aliases.get(other) {
                Some(s) => Ok(*s),
                None => err(e, format!("unsupported feature: sort `{other}`")),
            },
        },
        SExprKind::List(items) => {
            let head: Vec<&str> = items.iter().filter_map(|i| i.as_symbol()).collect();
            match head.as_slice() {
                ["BitVec"] if items.len() == 2 => Ok(Sort::BitVec(bv_width(&items[1])?)),
                ["_", "BitVec"] if items.len() == 3 => Ok(Sort::BitVec(bv_width(&items[2])?)),
                _ => err(e, format!("unsupported feature: sort `{e}`")),
            }
        }
        _ => err(e, format!("expected a sort, found `{e}`")),
    }
}

fn parse_params(e: &SExpr, aliases: &Aliases) -> Result<Vec<(String, Sort)>, ParseError> {
    let mut out: Vec<(String, Sort)> = Vec::new();
    for p in list(e, "a parameter list")? {
        let pair = list(p, "a `(name Sort)` pair")?;
        if pair.len() != 2 {
            return err(p, "expected a `(name Sort)` pair");
        }
        let name = symbol(&pair[0], "a parameter name")?;
        if out.iter().any(|(n, _)| n == name) {
            return err(p, format!("duplicate parameter `{name}`"));
        }
        out.push((name.to_string(), parse_sort(&pair[1], aliases)?));
    }
    Ok(out)
}

fn literal(e: &SExpr) -> Option<Value> {
    match &e.kind {
        SExprKind::Atom(Atom::Numeral(n)) => Some(Value::Int(BigInt::from(n.clone()))),
        SExprKind::Atom(Atom::Str(s)) => Some(Value::Str(s.clone())),
        SExprKind::Atom(Atom::BitVec { width, bits }) => Some(Value::bv(*width, *bits)),
        SExprKind::Atom(Atom::Symbol(s)) if s == "true" => Some(Value::Bool(true)),
        SExprKind::Atom(Atom::Symbol(s)) if s == "false" => Some(Value::Bool(false)),
        SExprKind::List(items) => {
            // (_ bvN w)
            let [u, v, w] = items.as_slice() else { return None };
            if u.as_symbol() != Some("_") {
                return None;
            }
            let digits = v.as_symbol()?.strip_prefix("bv")?;
            let value: num_bigint::BigUint = digits.parse().ok()?;
            let width = u32::try_from(numeral(w)?).ok().filter(|w| (1..=MAX_BV_WIDTH).contains(w))?;
            let bits = u128::try_from(value).ok()?;
            Some(Value::bv(width, bits))
        }
        _ => None,
    }
}

/// Let bindings are `(name term)` or the v1 grammar form `(name Sort term)`.
fn let_bindings<'a>(
    e: &'a SExpr,
    aliases: &Aliases,
) -> Result<Vec<(String, &'a SExpr)>, ParseError> {
    let mut out = Vec::new();
    for b in list(e, "let bindings")? {
        let parts = list(b, "a let binding")?;
        let (name, body) = match parts {
            [n, t] => (n, t),
            [n, s, t] => {
                parse_sort(s, aliases)?;
                (n, t)
            }
            _ => return err(b, "malformed let binding"),
        };
        out.push((symbol(name, "a binder name")?.to_string(), body));
    }
    Ok(out)
}

fn parse_term_sexpr(e: &SExpr, aliases: &Aliases) -> Result<Term, ParseError> {
    if let Some(v) = literal(e) {
        return Ok(Term::Lit(v));
    }
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) => Ok(Term::Var(s.clone())),
        SExprKind::Atom(Atom::Keyword(k)) => err(e, format!("unexpected keyword `:{k}`")),
        SExprKind::Atom(_) => unreachable!("literal atoms handled above"),
        SExprKind::List(items) => {
            let Some(head) = items.first() else { return err(e, "empty application") };
            let op = match head.as_symbol() {
                Some(op) => op,
                None => return err(head, format!("unsupported feature: operator `{head}`")),
            };
            if op == "let" {
                if items.len() != 3 {
                    return err(e, "`let` expects bindings and a body");
                }
                let mut bs = Vec::new();
                for (n, b) in let_bindings(&items[1], aliases)? {
                    bs.push((n, parse_term_sexpr(b, aliases)?));
                }
                let body = parse_term_sexpr(&items[2], aliases)?;
                return Ok(Term::Let(bs, Box::new(body)));
            }
            if items.len() == 1 {
                return err(e, format!("application of `{op}` has no arguments"));
            }
            let args = items[1..]
                .iter()
                .map(|a| parse_term_sexpr(a, aliases))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(op.to_string(), args))
        }
    }
}

pub(crate) fn term_of_sexpr(e: &SExpr) -> Result<Term, ParseError> {
    parse_term_sexpr(e, &Aliases::new())
}

/// Parses a single term without sort checking.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let es = parse_all(text)?;
    match es.as_slice() {
        [e] => parse_term_sexpr(e, &Aliases::new()),
        [] => Err(ParseError { message: "empty input".into(), span: SourceSpan::default() }),
        [_, extra, ..] => err(extra, "trailing input after term"),
    }
}

fn parse_gterm(
    e: &SExpr,
    nonterminals: &BTreeSet<String>,
    aliases: &Aliases,
) -> Result<GTerm, ParseError> {
    if let Some(v) = literal(e) {
        return Ok(GTerm::Lit(v));
    }
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) if nonterminals.contains(s) => Ok(GTerm::NonTerminal(s.clone())),
        SExprKind::Atom(Atom::Symbol(s)) => Ok(GTerm::Var(s.clone())),
        SExprKind::List(items) => {
            let Some(head) = items.first() else { return err(e, "empty grammar term") };
            let op = match head.as_symbol() {
                Some(op) => op,
                None => return err(head, format!("unsupported feature: operator `{head}`")),
            };
            match op {
                "Constant" | "Variable" if items.len() == 2 => {
                    let s = parse_sort(&items[1], aliases)?;
                    Ok(if op == "Constant" { GTerm::Constant(s) } else { GTerm::Variable(s) })
                }
                "InputVariable" | "LocalVariable" => {
                    err(e, format!("unsupported feature: `{op}` grammar leaves"))
                }
                "let" => {
                    if items.len() != 3 {
                        return err(e, "`let` expects bindings and a body");
                    }
                    let mut bs = Vec::new();
                    for (n, b) in let_bindings(&items[1], aliases)? {
                        bs.push((n, parse_gterm(b, nonterminals, aliases)?));
                    }
                    Ok(GTerm::Let(bs, Box::new(parse_gterm(&items[2], nonterminals, aliases)?)))
                }
                _ if items.len() == 1 => err(e, format!("application of `{op}` has no arguments")),
                _ => Ok(GTerm::App(
                    op.to_string(),
                    items[1..]
                        .iter()
                        .map(|a| parse_gterm(a, nonterminals, aliases))
                        .collect::<Result<_, _>>()?,
                )),
            }
        }
        _ => err(e, format!("unexpected `{e}` in grammar")),
    }
}

fn parse_grammar(
    e: &SExpr,
    params: &[(String, Sort)],
    aliases: &Aliases,
) -> Result<Grammar, ParseError> {
    let prods = list(e, "a grammar")?;
    let mut names = BTreeSet::new();
    for p in prods {
        let parts = list(p, "a production")?;
        if parts.len() != 3 {
            return err(p, "expected `(Nonterminal Sort (alternatives...))`");
        }
        let n = symbol(&parts[0], "a nonterminal")?;
        if !names.insert(n.to_string()) {
            return err(p, format!("duplicate nonterminal `{n}`"));
        }
    }
    let mut productions = Vec::new();
    for p in prods {
        let parts = p.as_list().expect("checked above");
        let alternatives = list(&parts[2], "a list of alternatives")?
            .iter()
            .map(|a| parse_gterm(a, &names, aliases))
            .collect::<Result<Vec<_>, _>>()?;
        productions.push(Production {
            nonterminal: parts[0].as_symbol().expect("checked above").to_string(),
            sort: parse_sort(&parts[1], aliases)?,
            alternatives,
        });
    }
    // v1 designates `Start` as the start symbol wherever it appears.
    if let Some(i) = productions.iter().position(|p| p.nonterminal == "Start") {
        let start = productions.remove(i);
        productions.insert(0, start);
    }
    let mut g = Grammar { productions, params: params.to_vec() };
    g.dedup_alternatives();
    Ok(g)
}

struct ProblemBuilder {
    problem: Problem,
    aliases: Aliases,
    /// Every name declared so far, for duplicate detection.
    declared: BTreeSet<String>,
    check_synth: Option<SourceSpan>,
}

impl ProblemBuilder {
    fn declare(&mut self, name: &str, at: &SExpr) -> Result<(), ParseError> {
        if is_builtin(name) || matches!(name, "true" | "false" | "let") {
            return err(at, format!("`{name}` is a reserved symbol"));
        }
        if !self.declared.insert(name.to_string()) {
            return err(at, format!("duplicate declaration of `{name}`"));
        }
        Ok(())
    }

    fn command(&mut self, cmd: &SExpr) -> Result<(), ParseError> {
        let items = list(cmd, "a command")?;
        let Some(head) = items.first() else { return err(cmd, "empty command") };
        let name = symbol(head, "a command name")?;
        let args = &items[1..];
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                err(cmd, format!("`{name}` expects {n} arguments, found {}", args.len()))
            }
        };
        match name {
            "set-logic" => {
                arity(1)?;
                self.problem.logic = symbol(&args[0], "a logic name")?.to_string();
            }
            "set-options" => {
                log::warn!("{}: ignoring set-options", cmd.span);
            }
            "define-sort" => {
                arity(3)?;
                let n = symbol(&args[0], "a sort name")?;
                if !list(&args[1], "a sort parameter list")?.is_empty() {
                    return err(&args[1], "unsupported feature: parametric define-sort");
                }
                let s = parse_sort(&args[2], &self.aliases)?;
                if self.aliases.insert(n.to_string(), s).is_some() {
                    return err(cmd, format!("duplicate declaration of sort `{n}`"));
                }
            }
            "declare-var" => {
                arity(2)?;
                let n = symbol(&args[0], "a variable name")?;
                self.declare(n, cmd)?;
                let s = parse_sort(&args[1], &self.aliases)?;
                self.problem.vars.push((n.to_string(), s));
            }
            "declare-primed-var" => {
                arity(2)?;
                let n = symbol(&args[0], "a variable name")?;
                let primed = format!("{n}!");
                self.declare(n, cmd)?;
                self.declare(&primed, cmd)?;
                let s = parse_sort(&args[1], &self.aliases)?;
                self.problem.vars.push((n.to_string(), s));
                self.problem.primed_vars.push((primed, s));
            }
            "define-fun" => {
                arity(4)?;
                let n = symbol(&args[0], "a function name")?;
                self.declare(n, cmd)?;
                let params = parse_params(&args[1], &self.aliases)?;
                let ret = parse_sort(&args[2], &self.aliases)?;
                let body = parse_term_sexpr(&args[3], &self.aliases)?;
                let mut sig = self.problem.defined_signature();
                sig.vars = params.iter().cloned().collect();
                check_sort(&body, &sig, ret, &args[3])?;
                self.problem.defined_funs.push(FunDef { name: n.to_string(), params, ret, body });
            }
            "synth-fun" | "synth-inv" => {
                let fixed = if name == "synth-fun" { 3 } else { 2 };
                if args.len() != fixed && args.len() != fixed + 1 {
                    return err(cmd, format!("malformed `{name}`"));
                }
                let n = symbol(&args[0], "a function name")?;
                self.declare(n, cmd)?;
                let params = parse_params(&args[1], &self.aliases)?;
                let ret = if name == "synth-fun" {
                    parse_sort(&args[2], &self.aliases)?
                } else {
                    self.problem.kind = ProblemKind::Invariant;
                    Sort::Bool
                };
                let grammar = match args.get(fixed) {
                    Some(g) => {
                        let grammar = parse_grammar(g, &params, &self.aliases)?;
                        grammar
                            .validate(ret, &self.problem.defined_signature())
                            .or_else(|e| err(g, e.to_string()))?;
                        Some(grammar)
                    }
                    None => None,
                };
                self.problem.synth_funs.push(SynthFun { name: n.to_string(), params, ret, grammar });
            }
            "constraint" => {
                arity(1)?;
                let t = parse_term_sexpr(&args[0], &self.aliases)?;
                check_sort(&t, &self.problem.signature(), Sort::Bool, &args[0])?;
                self.problem.constraints.push(t);
            }
            "inv-constraint" => {
                arity(4)?;
                let names = args
                    .iter()
                    .map(|a| symbol(a, "a function name").map(str::to_string))
                    .collect::<Result<Vec<_>, _>>()?;
                self.problem.kind = ProblemKind::Invariant;
                self.problem.inv_constraints.push(InvConstraint {
                    inv: names[0].clone(),
                    pre: names[1].clone(),
                    trans: names[2].clone(),
                    post: names[3].clone(),
                });
            }
            "check-synth" => {
                arity(0)?;
                if self.check_synth.is_some() {
                    return err(cmd, "duplicate check-synth");
                }
                self.check_synth = Some(cmd.span);
            }
            other => return err(head, format!("unknown command `{other}`")),
        }
        Ok(())
    }
}

fn check_sort(t: &Term, sig: &Signature, want: Sort, at: &SExpr) -> Result<(), ParseError> {
    match well_sorted(t, sig) {
        Ok(s) if s == want => Ok(()),
        Ok(s) => err(at, format!("`{}` has sort {s}, expected {want}", print_term(t))),
        Err(e) => err(at, e.to_string()),
    }
}

/// Parses a whole benchmark. Exactly one `check-synth` is required; grammars
/// are validated and constraints must be Bool-sorted.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let cmds = parse_all(text)?;
    let mut b = ProblemBuilder {
        problem: Problem {
            logic: String::new(),
            vars: Vec::new(),
            primed_vars: Vec::new(),
            defined_funs: Vec::new(),
            synth_funs: Vec::new(),
            constraints: Vec::new(),
            inv_constraints: Vec::new(),
            kind: ProblemKind::General,
        },
        aliases: Aliases::new(),
        declared: BTreeSet::new(),
        check_synth: None,
    };
    for c in &cmds {
        b.command(c)?;
    }
    if b.check_synth.is_none() {
        let end = cmds.last().map(|c| SourceSpan::point(c.span.end)).unwrap_or_default();
        return Err(ParseError { message: "missing check-synth".into(), span: end });
    }
    if b.problem.synth_funs.is_empty() {
        return Err(ParseError { message: "no synth-fun declared".into(), span: SourceSpan::default() });
    }
    Ok(b.problem)
}

/// Parses solver output: one `define-fun` per synth-fun, in any order.
/// Parameters are renamed to the synth-fun's own parameter names so that
/// grammar leaves refer to the same variables. A leading `unsat` line and a
/// single wrapping list around the definitions are tolerated.
pub fn parse_candidate(text: &str, problem: &Problem) -> Result<Vec<crate::problem::Candidate>, ParseError> {
    let mut es = parse_all(text)?;
    if es.first().and_then(|e| e.as_symbol()) == Some("unsat") {
        es.remove(0);
    }
    if let [only] = es.as_slice() {
        if let Some(items) = only.as_list() {
            if items.first().is_some_and(|i| i.as_list().is_some()) {
                es = items.to_vec();
            }
        }
    }
    if es.is_empty() {
        return Err(ParseError { message: "no define-fun in solver output".into(), span: SourceSpan::default() });
    }
    let aliases = Aliases::new();
    let mut found: BTreeMap<String, crate::problem::Candidate> = BTreeMap::new();
    for e in &es {
        let items = list(e, "a define-fun")?;
        if items.first().and_then(|h| h.as_symbol()) != Some("define-fun") {
            return err(e, format!("expected a define-fun, found `{e}`"));
        }
        if items.len() != 5 {
            return err(e, "malformed define-fun");
        }
        let name = symbol(&items[1], "a function name")?;
        let Some(target) = problem.synth_fun(name) else {
            return err(&items[1], format!("unknown synth-fun {name}"));
        };
        if found.contains_key(name) {
            return err(e, format!("duplicate definition of {name}"));
        }
        let params = parse_params(&items[2], &aliases)?;
        let ret = parse_sort(&items[3], &aliases)?;
        let psorts: Vec<Sort> = params.iter().map(|(_, s)| *s).collect();
        if psorts != target.signature().params || ret != target.ret {
            return err(e, format!("signature of {name} does not match its synth-fun declaration"));
        }
        let body = parse_term_sexpr(&items[4], &aliases)?;
        let mut sig = problem.defined_signature();
        sig.vars = params.iter().cloned().collect();
        check_sort(&body, &sig, ret, &items[4])?;
        let renamed = rename_params(name, &params, ret, body, &target.params);
        found.insert(
            name.to_string(),
            crate::problem::Candidate {
                target: name.to_string(),
                params: target.params.clone(),
                ret,
                body: renamed,
            },
        );
    }
    let mut out = Vec::new();
    for f in &problem.synth_funs {
        match found.remove(&f.name) {
            Some(c) => out.push(c),
            None => {
                return Err(ParseError {
                    message: format!("missing definition of {}", f.name),
                    span: es.last().map(|e| e.span).unwrap_or_default(),
                })
            }
        }
    }
    Ok(out)
}

fn rename_params(
    name: &str,
    params: &[(String, Sort)],
    ret: Sort,
    body: Term,
    to: &[(String, Sort)],
) -> Term {
    if params.iter().zip(to).all(|((a, _), (b, _))| a == b) {
        return body;
    }
    let def = FunDef { name: name.to_string(), params: params.to_vec(), ret, body };
    let call = Term::App(name.to_string(), to.iter().map(|(n, _)| Term::var(n.clone())).collect());
    substitute(&call, &def).expect("arity checked against the signature")
}
