//! A persistent SMT-LIB2 backend process speaking over stdin/stdout.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use crate::printer::{print_string, print_symbol, print_value};
use crate::sexpr::{parse_all, SExprKind};
use crate::term::{Sort, Term, Value};

pub const SOLVER_ENV: &str = "SYGUS_SMT_SOLVER";
pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(60);
const SENTINEL: &str = "sygus-end-of-response";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtConfig {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Replaces the logic derived from the benchmark.
    pub logic_override: Option<String>,
}

impl Default for SmtConfig {
    fn default() -> Self {
        SmtConfig::resolve(None)
    }
}

impl SmtConfig {
    /// An explicit path wins, then `SYGUS_SMT_SOLVER`, then `z3` on `PATH`.
    /// The path may carry arguments (`"cvc5 --lang smt2 --incremental"`);
    /// without any, `-in` is passed (z3's stdin mode).
    pub fn resolve(explicit: Option<&str>) -> SmtConfig {
        let raw = explicit
            .map(str::to_string)
            .or_else(|| std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty()))
            .unwrap_or_else(|| "z3".to_string());
        let mut words = raw.split_whitespace().map(str::to_string);
        let program = words.next().unwrap_or_else(|| "z3".into());
        let mut args: Vec<String> = words.collect();
        if args.is_empty() {
            args.push("-in".into());
        }
        SmtConfig { program, args, timeout: DEFAULT_QUERY_TIMEOUT, logic_override: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("cannot start SMT backend `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("SMT backend failed: {0}")]
    Backend(String),
    #[error("cannot read model: {0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(BTreeMap<String, Value>),
    Unsat,
    Unknown(String),
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One backend process, reused across queries (each query starts with
/// `(reset)`). Strictly one query at a time.
pub struct SmtSession {
    cfg: SmtConfig,
    proc: Option<Process>,
}

/// Logic to announce to the backend for a benchmark logic.
pub fn backend_logic(logic: &str) -> String {
    let up = logic.to_ascii_uppercase();
    if up.contains("BV") {
        "BV".into()
    } else if up.contains('S') && up != "LIA" {
        // SLIA and string tracks; z3 only knows the quantifier-free name.
        "QF_SLIA".into()
    } else if up.contains("NIA") {
        "NIA".into()
    } else if up.contains("LIA") || up.contains("INV") || up.is_empty() {
        "LIA".into()
    } else {
        "ALL".into()
    }
}

/// Term text for the backend: canonical printing with the SMT-LIB 2.6
/// names of the legacy string conversions.
pub fn smt_term(t: &Term) -> String {
    let mut out = String::new();
    write_smt(&mut out, t);
    out
}

fn write_smt(out: &mut String, t: &Term) {
    match t {
        Term::Lit(Value::Str(s)) => out.push_str(&print_string(s)),
        Term::Lit(v) => out.push_str(&print_value(v)),
        Term::Var(v) => out.push_str(&print_symbol(v)),
        Term::App(op, args) => {
            let op = match op.as_str() {
                "str.to.int" => "str.to_int",
                "int.to.str" => "str.from_int",
                o => o,
            };
            out.push('(');
            out.push_str(&print_symbol(op));
            for a in args {
                out.push(' ');
                write_smt(out, a);
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
                write_smt(out, b);
                out.push(')');
            }
            out.push_str(") ");
            write_smt(out, body);
            out.push(')');
        }
    }
}

impl SmtSession {
    pub fn new(cfg: SmtConfig) -> SmtSession {
        SmtSession { cfg, proc: None }
    }

    pub fn config(&self) -> &SmtConfig {
        &self.cfg
    }

    fn start(&mut self) -> Result<&mut Process, SmtError> {
        if self.proc.is_none() {
            let mut child = Command::new(&self.cfg.program)
                .args(&self.cfg.args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|source| SmtError::Spawn { program: self.cfg.program.clone(), source })?;
            let stdin = child.stdin.take().expect("piped");
            let stdout = child.stdout.take().expect("piped");
            let (tx, rx) = mpsc::channel();
            std::thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    match line {
                        Ok(l) => {
                            if tx.send(l).is_err() {
                                break;
                            }
                        }
                        Err(_) => break,
                    }
                }
            });
            self.proc = Some(Process { child, stdin, lines: rx });
        }
        Ok(self.proc.as_mut().expect("started"))
    }

    /// Sends `script` followed by a sentinel echo and collects the response
    /// lines. `Ok(None)` means the deadline passed (the process is killed).
    fn exchange(&mut self, script: &str, deadline: Instant) -> Result<Option<Vec<String>>, SmtError> {
        let proc = self.start()?;
        let full = format!("{script}\n(echo \"{SENTINEL}\")\n");
        if let Err(e) = proc.stdin.write_all(full.as_bytes()).and_then(|_| proc.stdin.flush()) {
            self.proc = None;
            return Err(SmtError::Backend(format!("write failed: {e}")));
        }
        let mut lines = Vec::new();
        loop {
            let now = Instant::now();
            let wait = deadline.saturating_duration_since(now);
            match proc.lines.recv_timeout(wait) {
                Ok(l) => {
                    if l.trim() == SENTINEL {
                        return Ok(Some(lines));
                    }
                    lines.push(l);
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.proc = None;
                    return Ok(None);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.proc = None;
                    return Err(SmtError::Backend("backend process exited".into()));
                }
            }
        }
    }

    /// Checks satisfiability of the conjunction of `assertions` over the
    /// declared constants. On `sat` the model is read back; constants the
    /// backend leaves out get the default value of their sort.
    pub fn check_sat(
        &mut self,
        logic: &str,
        decls: &[(String, Sort)],
        assertions: &[Term],
    ) -> Result<SatResult, SmtError> {
        let logic = self.cfg.logic_override.clone().unwrap_or_else(|| backend_logic(logic));
        let mut script = format!("(reset)\n(set-option :print-success false)\n(set-logic {logic})\n");
        for (n, s) in decls {
            script.push_str(&format!("(declare-const {} {s})\n", print_symbol(n)));
        }
        for a in assertions {
            script.push_str(&format!("(assert {})\n", smt_term(a)));
        }
        script.push_str("(check-sat)");
        log::trace!("smt query:\n{script}");
        let deadline = Instant::now() + self.cfg.timeout;
        let Some(lines) = self.exchange(&script, deadline)? else {
            return Ok(SatResult::Unknown("timeout".into()));
        };
        if let Some(e) = lines.iter().find(|l| l.trim_start().starts_with("(error")) {
            return Err(SmtError::Backend(e.trim().to_string()));
        }
        match lines.iter().map(|l| l.trim()).find(|l| !l.is_empty()) {
            Some("unsat") => Ok(SatResult::Unsat),
            Some("unknown") => {
                let reason = match self.exchange("(get-info :reason-unknown)", deadline)? {
                    Some(r) => r.join(" ").trim().to_string(),
                    None => "timeout".into(),
                };
                Ok(SatResult::Unknown(if reason.is_empty() { "unknown".into() } else { reason }))
            }
            Some("sat") => {
                let Some(model) = self.exchange("(get-model)", deadline)? else {
                    return Ok(SatResult::Unknown("timeout".into()));
                };
                let mut values = parse_model(&model.join("\n"))?;
                for (n, s) in decls {
                    values.entry(n.clone()).or_insert_with(|| Value::default_of(*s));
                }
                values.retain(|n, _| decls.iter().any(|(d, _)| d == n));
                Ok(SatResult::Sat(values))
            }
            other => Err(SmtError::Backend(format!("unexpected response {other:?}"))),
        }
    }
}

/// Reads `(model? (define-fun x () S v)*)`; entries with parameters (backend
/// helper functions) are skipped.
pub fn parse_model(text: &str) -> Result<BTreeMap<String, Value>, SmtError> {
    let es = parse_all(text).map_err(|e| SmtError::Model(e.to_string()))?;
    let mut out = BTreeMap::new();
    let top = match es.as_slice() {
        [e] => e,
        _ => return Err(SmtError::Model(format!("expected one s-expression, got {}", es.len()))),
    };
    let SExprKind::List(items) = &top.kind else {
        return Err(SmtError::Model(format!("not a model: {top}")));
    };
    for item in items {
        let Some(parts) = item.as_list() else { continue };
        if parts.first().and_then(|p| p.as_symbol()) != Some("define-fun") || parts.len() != 5 {
            continue;
        }
        if parts[2].as_list().is_none_or(|ps| !ps.is_empty()) {
            continue;
        }
        let name = parts[1].as_symbol().ok_or_else(|| SmtError::Model(format!("bad name in {item}")))?;
        let term = crate::parser::term_of_sexpr(&parts[4]).map_err(|e| SmtError::Model(e.to_string()))?;
        let v = crate::semantics::eval(&term, &Default::default(), &Default::default())
            .map_err(|e| SmtError::Model(format!("value of {name}: {e}")))?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logic_mapping() {
        assert_eq!(backend_logic("LIA"), "LIA");
        assert_eq!(backend_logic("CLIA"), "LIA");
        assert_eq!(backend_logic("Inv"), "LIA");
        assert_eq!(backend_logic("BV"), "BV");
        assert_eq!(backend_logic("SLIA"), "QF_SLIA");
        assert_eq!(backend_logic("NIA"), "NIA");
    }

    #[test]
    fn model_parsing() {
        let m = parse_model(
            "(\n (define-fun x () Int\n (- 3))\n (define-fun s () String \"a\"\"b\")\n (define-fun div0 ((a Int)) Int 0)\n (define-fun u () (_ BitVec 8) #x11))",
        )
        .unwrap();
        assert_eq!(m["x"], Value::int(-3));
        assert_eq!(m["s"], Value::str("a\"b"));
        assert_eq!(m["u"], Value::bv(8, 0x11));
        assert!(!m.contains_key("div0"));
    }

    #[test]
    fn config_resolution() {
        let c = SmtConfig::resolve(Some("cvc5 --lang smt2"));
        assert_eq!(c.program, "cvc5");
        assert_eq!(c.args, ["--lang", "smt2"]);
        assert_eq!(SmtConfig::resolve(Some("/opt/z3")).args, ["-in"]);
    }
}
