//! Syntax-guided synthesis toolkit: SyGuS-IF parsing, grammar membership and
//! enumeration, SMT-backed verification, a divide-and-conquer CEGIS solver,
//! a benchmark harness and competition scoring.

pub mod grammar;
pub mod harness;
pub mod parser;
pub mod printer;
pub mod problem;
pub mod report;
pub mod scoring;
pub mod semantics;
pub mod sexpr;
pub mod smt;
pub mod solver;
pub mod term;
pub mod verifier;
