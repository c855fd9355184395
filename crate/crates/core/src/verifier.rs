//! Two-stage solution checking: grammar membership, then validity of the
//! substituted constraints through the SMT backend.

use crate::grammar::{derives, explain_reject};
use crate::parser::parse_candidate;
use crate::printer::print_term;
use crate::problem::{Candidate, DesugarError, Problem};
use crate::semantics::{holds_at, Env, EvalError};
use crate::smt::{SatResult, SmtError, SmtSession};
use crate::term::{substitute, SubstError, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// A point where the candidates violate some constraint.
    Invalid(Env),
    Unknown(String),
    SyntacticReject(String),
    IllFormed(String),
}

impl Verdict {
    /// The word `check` prints first.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Invalid(_) => "invalid",
            Verdict::Unknown(_) => "unknown",
            Verdict::SyntacticReject(_) => "syntactic-reject",
            Verdict::IllFormed(_) => "ill-formed",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
    #[error(transparent)]
    Subst(#[from] SubstError),
    #[error("cannot evaluate counterexample: {0}")]
    Eval(#[from] EvalError),
    #[error("backend counterexample {point:?} does not falsify the constraints")]
    Disagreement { point: Env },
    #[error("expected one candidate per synth-fun, missing `{0}`")]
    MissingCandidate(String),
}

/// Expands inv-constraints into plain constraints; see
/// [`Problem::desugar_inv`].
pub fn desugar_inv(p: &Problem) -> Result<Problem, DesugarError> {
    p.desugar_inv()
}

/// The conjunction of all constraints with candidates and defined functions
/// inlined, so that only declared variables remain free.
pub fn inlined_spec(p: &Problem, cands: &[Candidate]) -> Result<Term, VerifyError> {
    let mut phi = match p.constraints.as_slice() {
        [one] => one.clone(),
        many => Term::app("and", many.to_vec()),
    };
    if p.constraints.is_empty() {
        phi = Term::bool(true);
    }
    for f in &p.synth_funs {
        let c = cands
            .iter()
            .find(|c| c.target == f.name)
            .ok_or_else(|| VerifyError::MissingCandidate(f.name.clone()))?;
        phi = substitute(&phi, &c.to_fun_def())?;
    }
    for d in p.defined_funs.iter().rev() {
        phi = substitute(&phi, d)?;
    }
    Ok(phi)
}

/// Asks the backend for a point falsifying the constraints. Every
/// counterexample is re-checked with the evaluator before it is reported.
pub fn verify(p: &Problem, cands: &[Candidate], session: &mut SmtSession) -> Result<Verdict, VerifyError> {
    let expanded;
    let p = if p.inv_constraints.is_empty() {
        p
    } else {
        expanded = p.desugar_inv()?;
        &expanded
    };
    let phi = inlined_spec(p, cands)?;
    let decls: Vec<_> = p.all_vars().cloned().collect();
    match session.check_sat(&p.logic, &decls, &[Term::app("not", vec![phi])])? {
        SatResult::Unsat => Ok(Verdict::Valid),
        SatResult::Unknown(reason) => Ok(Verdict::Unknown(reason)),
        SatResult::Sat(model) => {
            let point: Env = model;
            if holds_at(p, cands, &point)? {
                return Err(VerifyError::Disagreement { point });
            }
            Ok(Verdict::Invalid(point))
        }
    }
}

/// Grammar check for already-parsed candidates.
pub fn syntactic_check(p: &Problem, cands: &[Candidate]) -> Option<String> {
    for c in cands {
        let f = p.synth_fun(&c.target)?;
        let g = f.effective_grammar(&p.logic);
        if !derives(&g, &c.body) {
            return Some(format!("{}: {}", c.target, explain_reject(&g, &c.body)));
        }
    }
    None
}

/// Full pipeline on raw solver output: parse, grammar membership, then
/// semantic verification. The first failing stage decides the verdict.
pub fn check_solution(p: &Problem, solver_output: &str, session: &mut SmtSession) -> Result<Verdict, VerifyError> {
    let cands = match parse_candidate(solver_output, p) {
        Ok(c) => c,
        Err(e) => return Ok(Verdict::IllFormed(e.to_string())),
    };
    if let Some(detail) = syntactic_check(p, &cands) {
        return Ok(Verdict::SyntacticReject(detail));
    }
    log::debug!(
        "checking {}",
        cands.iter().map(|c| format!("{} = {}", c.target, print_term(&c.body))).collect::<Vec<_>>().join(", ")
    );
    verify(p, &cands, session)
}
