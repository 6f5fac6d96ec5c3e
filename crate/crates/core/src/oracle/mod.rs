//! Symbolic oracle: a parser for simple rule-base English and an open-world
//! forward-chaining engine over the parsed clauses.

mod ast;
mod kb;
mod parse;

use thiserror::Error;

pub use ast::{base_form, render, restore_case, third_person, unparse, Atom, Clause, Rule, Term};
pub use kb::{
    check_entailment, derive_step, forward_chain, match_antecedent, query, Closure, Derivation, Inference,
    KnowledgeBase, Proof,
};
pub use parse::parse_statement;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("cannot parse {text:?} at token {position}: {message}")]
    Parse { text: String, position: usize, message: String },

    #[error("inconsistent knowledge base: {left} contradicts {right}")]
    Inconsistent { left: String, right: String },

    #[error("not a ground fact: {0}")]
    NotAFact(String),
}
