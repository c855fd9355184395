//! Concrete evaluation of terms under SMT-LIB semantics, totalised where the
//! standard leaves values open (division by zero).

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::problem::{Candidate, Problem};
use crate::term::{bv_mask, FunDef, Term, Value};

/// A point: values for free variables.
pub type Env = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{op}`: {detail}")]
    Sort { op: String, detail: String },
    #[error(transparent)]
    Desugar(#[from] crate::problem::DesugarError),
}

/// Functions callable during evaluation: defined functions and candidate
/// implementations of synth-funs.
#[derive(Debug, Clone, Default)]
pub struct FunTable<'a> {
    funs: HashMap<&'a str, &'a FunDef>,
}

impl<'a> FunTable<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, def: &'a FunDef) {
        self.funs.insert(def.name.as_str(), def);
    }

    pub fn of_problem(p: &'a Problem) -> Self {
        let mut t = Self::new();
        for d in &p.defined_funs {
            t.insert(d);
        }
        t
    }

    pub fn get(&self, name: &str) -> Option<&'a FunDef> {
        self.funs.get(name).copied()
    }
}

fn sort_err<T>(op: &str, detail: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Sort { op: op.to_string(), detail: detail.into() })
}

static EMPTY: BTreeMap<String, Value> = BTreeMap::new();

/// Evaluates `t` with free variables taken from `env`.
pub fn eval(t: &Term, env: &Env, funs: &FunTable) -> Result<Value, EvalError> {
    Evaluator { funs }.eval(t, env, &mut Vec::new())
}

struct Evaluator<'f, 'a> {
    funs: &'f FunTable<'a>,
}

impl Evaluator<'_, '_> {
    fn eval(&self, t: &Term, env: &Env, locals: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
        match t {
            Term::Lit(v) => Ok(v.clone()),
            Term::Var(v) => locals
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, val)| val.clone())
                .or_else(|| env.get(v).cloned())
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Let(bs, body) => {
                let vals = bs
                    .iter()
                    .map(|(n, b)| Ok((n.clone(), self.eval(b, env, locals)?)))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                let depth = locals.len();
                locals.extend(vals);
                let r = self.eval(body, env, locals);
                locals.truncate(depth);
                r
            }
            Term::App(op, args) => {
                // Short-circuit forms first so untaken branches are not evaluated.
                if op == "ite" && args.len() == 3 {
                    let c = self.eval(&args[0], env, locals)?;
                    return match c {
                        Value::Bool(true) => self.eval(&args[1], env, locals),
                        Value::Bool(false) => self.eval(&args[2], env, locals),
                        _ => sort_err(op, "condition is not Bool"),
                    };
                }
                let vals = args
                    .iter()
                    .map(|a| self.eval(a, env, locals))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(def) = self.funs.get(op) {
                    if def.params.len() != vals.len() {
                        return sort_err(op, format!("expects {} arguments", def.params.len()));
                    }
                    let mut frame: Vec<(String, Value)> =
                        def.params.iter().map(|(n, _)| n.clone()).zip(vals).collect();
                    return self.eval(&def.body, &EMPTY, &mut frame);
                }
                apply_builtin(op, &vals)
            }
        }
    }
}

/// True iff every constraint of `p` (inv-constraints expanded) holds at
/// `point` with the candidates standing in for their synth-funs.
pub fn holds_at(p: &Problem, cands: &[Candidate], point: &Env) -> Result<bool, EvalError> {
    let expanded;
    let p = if p.inv_constraints.is_empty() {
        p
    } else {
        expanded = p.desugar_inv()?;
        &expanded
    };
    let defs: Vec<FunDef> = cands.iter().map(Candidate::to_fun_def).collect();
    let mut funs = FunTable::of_problem(p);
    for d in &defs {
        funs.insert(d);
    }
    for c in &p.constraints {
        match eval(c, point, &funs)? {
            Value::Bool(true) => {}
            Value::Bool(false) => return Ok(false),
            other => return sort_err("constraint", format!("evaluated to non-Bool {other:?}")),
        }
    }
    Ok(true)
}

fn bools(op: &str, vals: &[Value]) -> Result<Vec<bool>, EvalError> {
    vals.iter()
        .map(|v| match v {
            Value::Bool(b) => Ok(*b),
            _ => sort_err(op, "expected Bool arguments"),
        })
        .collect()
}

fn ints<'v>(op: &str, vals: &'v [Value]) -> Result<Vec<&'v BigInt>, EvalError> {
    vals.iter()
        .map(|v| match v {
            Value::Int(i) => Ok(i),
            _ => sort_err(op, "expected Int arguments"),
        })
        .collect()
}

fn strs<'v>(op: &str, vals: &'v [Value]) -> Result<Vec<&'v str>, EvalError> {
    vals.iter()
        .map(|v| match v {
            Value::Str(s) => Ok(s.as_str()),
            _ => sort_err(op, "expected String arguments"),
        })
        .collect()
}

fn bvs(op: &str, vals: &[Value]) -> Result<(u32, Vec<u128>), EvalError> {
    let mut width = None;
    let mut out = Vec::with_capacity(vals.len());
    for v in vals {
        match v {
            Value::BitVec { width: w, bits } if width.is_none() || width == Some(*w) => {
                width = Some(*w);
                out.push(*bits);
            }
            _ => return sort_err(op, "expected bit-vectors of one width"),
        }
    }
    match width {
        Some(w) => Ok((w, out)),
        None => sort_err(op, "missing arguments"),
    }
}

fn chain<T>(xs: &[T], rel: impl Fn(&T, &T) -> bool) -> bool {
    xs.windows(2).all(|w| rel(&w[0], &w[1]))
}

/// Euclidean division: the remainder is always in `[0, |b|)`.
/// Division by zero yields 0 and the remainder the dividend.
pub fn euclid_div_mod(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    if b.is_zero() {
        return (BigInt::zero(), a.clone());
    }
    let r = a.mod_floor(&b.abs());
    let q = (a - &r) / b;
    (q, r)
}

fn to_signed(x: u128, w: u32) -> i128 {
    if w == 128 {
        x as i128
    } else if x >> (w - 1) & 1 == 1 {
        (x | !bv_mask(w)) as i128
    } else {
        x as i128
    }
}

struct Bv {
    w: u32,
    m: u128,
}

impl Bv {
    fn new(w: u32) -> Bv {
        Bv { w, m: bv_mask(w) }
    }
    fn neg(&self, x: u128) -> u128 {
        x.wrapping_neg() & self.m
    }
    fn add(&self, x: u128, y: u128) -> u128 {
        x.wrapping_add(y) & self.m
    }
    fn msb(&self, x: u128) -> bool {
        x >> (self.w - 1) & 1 == 1
    }
    fn udiv(&self, x: u128, y: u128) -> u128 {
        x.checked_div(y).unwrap_or(self.m)
    }
    fn urem(&self, x: u128, y: u128) -> u128 {
        if y == 0 {
            x
        } else {
            x % y
        }
    }
    fn sdiv(&self, s: u128, t: u128) -> u128 {
        match (self.msb(s), self.msb(t)) {
            (false, false) => self.udiv(s, t),
            (true, false) => self.neg(self.udiv(self.neg(s), t)),
            (false, true) => self.neg(self.udiv(s, self.neg(t))),
            (true, true) => self.udiv(self.neg(s), self.neg(t)),
        }
    }
    fn srem(&self, s: u128, t: u128) -> u128 {
        match (self.msb(s), self.msb(t)) {
            (false, false) => self.urem(s, t),
            (true, false) => self.neg(self.urem(self.neg(s), t)),
            (false, true) => self.urem(s, self.neg(t)),
            (true, true) => self.neg(self.urem(self.neg(s), self.neg(t))),
        }
    }
    fn smod(&self, s: u128, t: u128) -> u128 {
        let (ms, mt) = (self.msb(s), self.msb(t));
        let abs_s = if ms { self.neg(s) } else { s };
        let abs_t = if mt { self.neg(t) } else { t };
        let u = self.urem(abs_s, abs_t);
        if u == 0 {
            return u;
        }
        match (ms, mt) {
            (false, false) => u,
            (true, false) => self.add(self.neg(u), t),
            (false, true) => self.add(u, t),
            (true, true) => self.neg(u),
        }
    }
    fn shl(&self, x: u128, y: u128) -> u128 {
        if y >= self.w as u128 {
            0
        } else {
            (x << y) & self.m
        }
    }
    fn lshr(&self, x: u128, y: u128) -> u128 {
        if y >= self.w as u128 {
            0
        } else {
            x >> y
        }
    }
    fn ashr(&self, x: u128, y: u128) -> u128 {
        let fill = if self.msb(x) { self.m } else { 0 };
        if y >= self.w as u128 {
            fill
        } else {
            let shifted = x >> y;
            let kept = if y == 0 { self.m } else { self.m >> y };
            (shifted | (fill & !kept)) & self.m
        }
    }
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// `str.substr s i n`: empty unless `0 <= i < |s|` and `n > 0`.
pub fn str_substr(s: &str, i: &BigInt, n: &BigInt) -> String {
    let cs = chars(s);
    let len = cs.len();
    match (i.to_usize(), n.sign()) {
        (Some(i), Sign::Plus) if i < len => {
            let n = n.to_usize().unwrap_or(usize::MAX);
            cs[i..len.min(i.saturating_add(n))].iter().collect()
        }
        _ => String::new(),
    }
}

/// `str.indexof s t i`: first occurrence of `t` in `s` at or after `i`, or
/// -1; also -1 when `i` is outside `[0, |s|]`.
pub fn str_indexof(s: &str, t: &str, i: &BigInt) -> BigInt {
    let cs = chars(s);
    let ts = chars(t);
    let Some(start) = i.to_usize().filter(|&i| i <= cs.len()) else {
        return BigInt::from(-1);
    };
    if ts.is_empty() {
        return BigInt::from(start);
    }
    (start..=cs.len().saturating_sub(ts.len()))
        .find(|&k| k + ts.len() <= cs.len() && cs[k..k + ts.len()] == ts[..])
        .map(BigInt::from)
        .unwrap_or_else(|| BigInt::from(-1))
}

/// `str.replace s t u`: first occurrence only; an empty `t` prepends `u`.
pub fn str_replace(s: &str, t: &str, u: &str) -> String {
    if t.is_empty() {
        return format!("{u}{s}");
    }
    s.replacen(t, u, 1)
}

pub fn str_to_int(s: &str) -> BigInt {
    if !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) {
        s.parse().expect("digits")
    } else {
        BigInt::from(-1)
    }
}

pub fn int_to_str(i: &BigInt) -> String {
    if i.sign() == Sign::Minus {
        String::new()
    } else {
        i.to_string()
    }
}

fn apply_builtin(op: &str, vals: &[Value]) -> Result<Value, EvalError> {
    let n = vals.len();
    let v = match op {
        "not" if n == 1 => Value::Bool(!bools(op, vals)?[0]),
        "and" => Value::Bool(bools(op, vals)?.iter().all(|b| *b)),
        "or" => Value::Bool(bools(op, vals)?.iter().any(|b| *b)),
        "xor" => Value::Bool(bools(op, vals)?.iter().fold(false, |a, b| a ^ b)),
        "=>" if n >= 2 => {
            let bs = bools(op, vals)?;
            Value::Bool(bs.iter().rev().skip(1).fold(bs[n - 1], |acc, a| !a || acc))
        }
        "=" => Value::Bool(chain(vals, |a, b| a == b)),
        "distinct" => Value::Bool(vals.iter().enumerate().all(|(i, a)| vals[i + 1..].iter().all(|b| a != b))),
        "+" => Value::Int(ints(op, vals)?.into_iter().sum()),
        "*" => Value::Int(ints(op, vals)?.into_iter().product()),
        "-" if n == 1 => Value::Int(-ints(op, vals)?[0]),
        "-" if n >= 2 => {
            let xs = ints(op, vals)?;
            Value::Int(xs[1..].iter().fold(xs[0].clone(), |acc, x| acc - *x))
        }
        "div" | "mod" if n == 2 => {
            let xs = ints(op, vals)?;
            let (q, r) = euclid_div_mod(xs[0], xs[1]);
            Value::Int(if op == "div" { q } else { r })
        }
        "abs" if n == 1 => Value::Int(ints(op, vals)?[0].abs()),
        "<=" => Value::Bool(chain(&ints(op, vals)?, |a, b| a <= b)),
        "<" => Value::Bool(chain(&ints(op, vals)?, |a, b| a < b)),
        ">=" => Value::Bool(chain(&ints(op, vals)?, |a, b| a >= b)),
        ">" => Value::Bool(chain(&ints(op, vals)?, |a, b| a > b)),
        "str.++" => Value::Str(strs(op, vals)?.concat()),
        "str.len" if n == 1 => Value::Int(BigInt::from(strs(op, vals)?[0].chars().count())),
        "str.at" if n == 2 => match (&vals[0], &vals[1]) {
            (Value::Str(s), Value::Int(i)) => Value::Str(str_substr(s, i, &BigInt::from(1))),
            _ => return sort_err(op, "expected (String Int)"),
        },
        "str.substr" if n == 3 => match (&vals[0], &vals[1], &vals[2]) {
            (Value::Str(s), Value::Int(i), Value::Int(k)) => Value::Str(str_substr(s, i, k)),
            _ => return sort_err(op, "expected (String Int Int)"),
        },
        "str.prefixof" if n == 2 => {
            let s = strs(op, vals)?;
            Value::Bool(s[1].starts_with(s[0]))
        }
        "str.suffixof" if n == 2 => {
            let s = strs(op, vals)?;
            Value::Bool(s[1].ends_with(s[0]))
        }
        "str.contains" if n == 2 => {
            let s = strs(op, vals)?;
            Value::Bool(s[0].contains(s[1]))
        }
        "str.indexof" if n == 3 => match (&vals[0], &vals[1], &vals[2]) {
            (Value::Str(s), Value::Str(t), Value::Int(i)) => Value::Int(str_indexof(s, t, i)),
            _ => return sort_err(op, "expected (String String Int)"),
        },
        "str.replace" if n == 3 => {
            let s = strs(op, vals)?;
            Value::Str(str_replace(s[0], s[1], s[2]))
        }
        "str.to.int" | "str.to_int" if n == 1 => Value::Int(str_to_int(strs(op, vals)?[0])),
        "int.to.str" | "str.from_int" if n == 1 => Value::Str(int_to_str(ints(op, vals)?[0])),
        "concat" if n == 2 => match (&vals[0], &vals[1]) {
            (Value::BitVec { width: w1, bits: a }, Value::BitVec { width: w2, bits: b })
                if w1 + w2 <= crate::term::MAX_BV_WIDTH =>
            {
                Value::bv(w1 + w2, (a << w2) | b)
            }
            _ => return sort_err(op, "expected bit-vectors of total width <= 128"),
        },
        _ if op.starts_with("bv") => return apply_bv(op, vals),
        _ => return Err(EvalError::UnknownFunction(op.to_string())),
    };
    Ok(v)
}

fn apply_bv(op: &str, vals: &[Value]) -> Result<Value, EvalError> {
    let (w, xs) = bvs(op, vals)?;
    let bv = Bv::new(w);
    let m = bv.m;
    let n = xs.len();
    let fold = |f: &dyn Fn(u128, u128) -> u128| xs[1..].iter().fold(xs[0], |a, b| f(a, *b));
    let bits = match op {
        "bvnot" if n == 1 => !xs[0] & m,
        "bvneg" if n == 1 => bv.neg(xs[0]),
        "bvand" if n >= 2 => fold(&|a, b| a & b),
        "bvor" if n >= 2 => fold(&|a, b| a | b),
        "bvxor" if n >= 2 => fold(&|a, b| a ^ b),
        "bvadd" if n >= 2 => fold(&|a, b| bv.add(a, b)),
        "bvmul" if n >= 2 => fold(&|a, b| a.wrapping_mul(b) & m),
        _ if n != 2 => return sort_err(op, "wrong number of arguments"),
        "bvnand" => !(xs[0] & xs[1]) & m,
        "bvnor" => !(xs[0] | xs[1]) & m,
        "bvxnor" => !(xs[0] ^ xs[1]) & m,
        "bvsub" => bv.add(xs[0], bv.neg(xs[1])),
        "bvudiv" => bv.udiv(xs[0], xs[1]),
        "bvurem" => bv.urem(xs[0], xs[1]),
        "bvsdiv" => bv.sdiv(xs[0], xs[1]),
        "bvsrem" => bv.srem(xs[0], xs[1]),
        "bvsmod" => bv.smod(xs[0], xs[1]),
        "bvshl" => bv.shl(xs[0], xs[1]),
        "bvlshr" => bv.lshr(xs[0], xs[1]),
        "bvashr" => bv.ashr(xs[0], xs[1]),
        _ => {
            let (a, b) = (xs[0], xs[1]);
            let (sa, sb) = (to_signed(a, w), to_signed(b, w));
            let r = match op {
                "bvult" => a < b,
                "bvule" => a <= b,
                "bvugt" => a > b,
                "bvuge" => a >= b,
                "bvslt" => sa < sb,
                "bvsle" => sa <= sb,
                "bvsgt" => sa > sb,
                "bvsge" => sa >= sb,
                _ => return Err(EvalError::UnknownFunction(op.to_string())),
            };
            return Ok(Value::Bool(r));
        }
    };
    Ok(Value::bv(w, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_problem, parse_term};

    fn ev(s: &str) -> Value {
        eval(&parse_term(s).unwrap(), &Env::new(), &FunTable::new()).unwrap()
    }

    #[test]
    fn arithmetic() {
        assert_eq!(ev("(+ 1 2)"), Value::int(3));
        assert_eq!(ev("(div 7 (- 2))"), Value::int(-3));
        assert_eq!(ev("(mod 7 (- 2))"), Value::int(1));
        assert_eq!(ev("(div (- 7) 2)"), Value::int(-4));
        assert_eq!(ev("(mod (- 7) 2)"), Value::int(1));
        assert_eq!(ev("(div (- 7) (- 2))"), Value::int(4));
        assert_eq!(ev("(div 5 0)"), Value::int(0));
        assert_eq!(ev("(mod 5 0)"), Value::int(5));
        assert_eq!(ev("(- 10 3 2)"), Value::int(5));
        assert_eq!(ev("(<= 1 2 2)"), Value::Bool(true));
        assert_eq!(ev("(< 1 2 2)"), Value::Bool(false));
    }

    #[test]
    fn strings() {
        assert_eq!(ev("(str.++ \"ab\" \"c\")"), Value::str("abc"));
        assert_eq!(ev("(str.at \"abc\" 5)"), Value::str(""));
        assert_eq!(ev("(str.substr \"hello\" 1 3)"), Value::str("ell"));
        assert_eq!(ev("(str.substr \"hello\" 3 10)"), Value::str("lo"));
        assert_eq!(ev("(str.substr \"hello\" (- 1) 2)"), Value::str(""));
        assert_eq!(ev("(str.indexof \"abcabc\" \"c\" 3)"), Value::int(5));
        assert_eq!(ev("(str.indexof \"abc\" \"\" 3)"), Value::int(3));
        assert_eq!(ev("(str.indexof \"abc\" \"\" 4)"), Value::int(-1));
        assert_eq!(ev("(str.replace \"aXbX\" \"X\" \"Y\")"), Value::str("aYbX"));
        assert_eq!(ev("(str.replace \"ab\" \"\" \"Z\")"), Value::str("Zab"));
        assert_eq!(ev("(str.to.int \"012\")"), Value::int(12));
        assert_eq!(ev("(str.to.int \"\")"), Value::int(-1));
        assert_eq!(ev("(str.to.int \"1a\")"), Value::int(-1));
        assert_eq!(ev("(int.to.str (- 3))"), Value::str(""));
        assert_eq!(ev("(str.prefixof \"ab\" \"abc\")"), Value::Bool(true));
        assert_eq!(ev("(str.suffixof \"bc\" \"abc\")"), Value::Bool(true));
    }

    #[test]
    fn bitvectors() {
        assert_eq!(ev("(bvadd #xff #x01)"), Value::bv(8, 0));
        assert_eq!(ev("(bvneg #x01)"), Value::bv(8, 0xff));
        assert_eq!(ev("(bvudiv #x07 #x00)"), Value::bv(8, 0xff));
        assert_eq!(ev("(bvurem #x07 #x00)"), Value::bv(8, 7));
        assert_eq!(ev("(bvsdiv #xf9 #x02)"), Value::bv(8, 0xfd)); // -7 / 2 = -3
        assert_eq!(ev("(bvsrem #xf9 #x02)"), Value::bv(8, 0xff)); // -1
        assert_eq!(ev("(bvsmod #xf9 #x02)"), Value::bv(8, 0x01));
        assert_eq!(ev("(bvashr #x80 #x01)"), Value::bv(8, 0xc0));
        assert_eq!(ev("(bvashr #x80 #x09)"), Value::bv(8, 0xff));
        assert_eq!(ev("(bvshl #x01 #x08)"), Value::bv(8, 0));
        assert_eq!(ev("(bvslt #x80 #x00)"), Value::Bool(true));
        assert_eq!(ev("(bvult #x80 #x00)"), Value::Bool(false));
        assert_eq!(ev("(concat #b1 #b01)"), Value::bv(3, 5));
    }

    #[test]
    fn holds_at_examples() {
        let p = parse_problem(
            "(set-logic LIA)(synth-fun f ((z Int)) Int)(declare-var x Int)
             (constraint (= (f x) (+ x 1)))(constraint (> (f x) x))(check-synth)",
        )
        .unwrap();
        let point: Env = [("x".to_string(), Value::int(5))].into();
        let good = crate::parser::parse_candidate("(define-fun f ((z Int)) Int (+ z 1))", &p).unwrap();
        let bad = crate::parser::parse_candidate("(define-fun f ((z Int)) Int z)", &p).unwrap();
        let half = crate::parser::parse_candidate("(define-fun f ((z Int)) Int (+ z 2))", &p).unwrap();
        assert!(holds_at(&p, &good, &point).unwrap());
        assert!(!holds_at(&p, &bad, &point).unwrap());
        // second constraint holds, first fails
        assert!(!holds_at(&p, &half, &point).unwrap());
    }

    #[test]
    fn defined_functions_and_lets() {
        let p = parse_problem(
            "(set-logic LIA)(define-fun inc ((a Int)) Int (+ a 1))(synth-fun f ((z Int)) Int)
             (declare-var x Int)(constraint (= (f x) (inc x)))(check-synth)",
        )
        .unwrap();
        let funs = FunTable::of_problem(&p);
        let t = parse_term("(let ((a 3) (b 4)) (inc (+ a b)))").unwrap();
        assert_eq!(eval(&t, &Env::new(), &funs).unwrap(), Value::int(8));
        // function bodies do not see the caller's bindings
        let env: Env = [("a".to_string(), Value::int(100))].into();
        assert_eq!(eval(&parse_term("(inc 1)").unwrap(), &env, &funs).unwrap(), Value::int(2));
    }
}
