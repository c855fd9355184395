//! Canonical text for terms, grammars and whole problems.

use std::fmt::Write;

use crate::problem::{Candidate, GTerm, Grammar, Problem, SynthFun};
use crate::term::{FunDef, Sort, Term, Value};

fn is_simple_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.as_bytes()[0].is_ascii_digit()
        && s.bytes().all(|c| c.is_ascii_alphanumeric() || b"~!@$%^&*_-+=<>.?/".contains(&c))
}

pub fn print_symbol(s: &str) -> String {
    if is_simple_symbol(s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

/// SMT-LIB string literal. Non-printable characters and backslashes that
/// would start an escape are written as `\u{..}`.
pub fn print_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '"' => out.push_str("\"\""),
            '\\' if chars.get(i + 1) == Some(&'u') => out.push_str("\\u{5c}"),
            ' '..='~' => out.push(c),
            _ => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
        }
    }
    out.push('"');
    out
}

pub fn print_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) if i.sign() == num_bigint::Sign::Minus => format!("(- {})", -i),
        Value::Int(i) => i.to_string(),
        Value::BitVec { width, bits } => format!("#b{:0w$b}", bits, w = *width as usize),
        Value::Str(s) => print_string(s),
    }
}

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t);
    out
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Lit(v) => out.push_str(&print_value(v)),
        Term::Var(v) => out.push_str(&print_symbol(v)),
        Term::App(op, args) => {
            out.push('(');
            out.push_str(&print_symbol(op));
            for a in args {
                out.push(' ');
                write_term(out, a);
            }
            out.push(')');
        }
        Term::Let(bs, body) => {
            out.push_str("(let (");
            for (i, (n, b)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                out.push_str(&print_symbol(n));
                out.push(' ');
                write_term(out, b);
                out.push(')');
            }
            out.push_str(") ");
            write_term(out, body);
            out.push(')');
        }
    }
}

/// Sorts in SyGuS-IF v1 spelling (`(BitVec 8)`).
pub fn print_sort(s: Sort) -> String {
    match s {
        Sort::BitVec(w) => format!("(BitVec {w})"),
        other => other.to_string(),
    }
}

pub fn print_gterm(g: &GTerm) -> String {
    match g {
        GTerm::Lit(v) => print_value(v),
        GTerm::Var(v) | GTerm::NonTerminal(v) => print_symbol(v),
        GTerm::Constant(s) => format!("(Constant {})", print_sort(*s)),
        GTerm::Variable(s) => format!("(Variable {})", print_sort(*s)),
        GTerm::App(op, args) => {
            let mut out = format!("({}", print_symbol(op));
            for a in args {
                out.push(' ');
                out.push_str(&print_gterm(a));
            }
            out.push(')');
            out
        }
        GTerm::Let(bs, body) => {
            let bs: Vec<String> =
                bs.iter().map(|(n, b)| format!("({} {})", print_symbol(n), print_gterm(b))).collect();
            format!("(let ({}) {})", bs.join(" "), print_gterm(body))
        }
    }
}

fn print_params(params: &[(String, Sort)]) -> String {
    let ps: Vec<String> =
        params.iter().map(|(n, s)| format!("({} {})", print_symbol(n), print_sort(*s))).collect();
    format!("({})", ps.join(" "))
}

pub fn print_grammar(g: &Grammar) -> String {
    let prods: Vec<String> = g
        .productions
        .iter()
        .map(|p| {
            let alts: Vec<String> = p.alternatives.iter().map(print_gterm).collect();
            format!("({} {} ({}))", print_symbol(&p.nonterminal), print_sort(p.sort), alts.join(" "))
        })
        .collect();
    format!("({})", prods.join("\n    "))
}

/// `(define-fun name (params) Sort body)`.
pub fn print_define_fun(d: &FunDef) -> String {
    format!(
        "(define-fun {} {} {} {})",
        print_symbol(&d.name),
        print_params(&d.params),
        print_sort(d.ret),
        print_term(&d.body)
    )
}

/// Solver output: one define-fun per line.
pub fn print_candidates(cands: &[Candidate]) -> String {
    cands.iter().map(|c| print_define_fun(&c.to_fun_def()) + "\n").collect()
}

fn print_synth_fun(f: &SynthFun) -> String {
    let mut out =
        format!("(synth-fun {} {} {}", print_symbol(&f.name), print_params(&f.params), print_sort(f.ret));
    if let Some(g) = &f.grammar {
        out.push_str("\n    ");
        out.push_str(&print_grammar(g));
    }
    out.push(')');
    out
}

/// Normalized SyGuS-IF text for a problem. Invariant problems keep their
/// `declare-primed-var`/`inv-constraint` form; synth-inv is written as the
/// equivalent Bool synth-fun.
pub fn print_problem(p: &Problem) -> String {
    let mut out = format!("(set-logic {})\n", print_symbol(&p.logic));
    let state: Vec<String> = p.state_vars().into_iter().map(|(n, _)| n).collect();
    for (n, s) in &p.vars {
        if state.contains(n) {
            let _ = writeln!(out, "(declare-primed-var {} {})", print_symbol(n), print_sort(*s));
        } else {
            let _ = writeln!(out, "(declare-var {} {})", print_symbol(n), print_sort(*s));
        }
    }
    for d in &p.defined_funs {
        let _ = writeln!(out, "{}", print_define_fun(d));
    }
    for f in &p.synth_funs {
        let _ = writeln!(out, "{}", print_synth_fun(f));
    }
    for c in &p.constraints {
        let _ = writeln!(out, "(constraint {})", print_term(c));
    }
    for ic in &p.inv_constraints {
        let _ = writeln!(
            out,
            "(inv-constraint {} {} {} {})",
            print_symbol(&ic.inv),
            print_symbol(&ic.pre),
            print_symbol(&ic.trans),
            print_symbol(&ic.post)
        );
    }
    out.push_str("(check-synth)\n");
    out
}
