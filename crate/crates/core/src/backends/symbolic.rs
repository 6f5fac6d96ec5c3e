//! Offline backend answering every stage it can with the symbolic oracle,
//! in the same labeled-field form a chat model is asked for.

use std::collections::BTreeSet;

use super::{positions, Backend, BackendError, BackendKind, Payload, Stage, StageRequest};
use crate::domain::{normalize, PremiseKind, Target, Truth};
use crate::explore::deterministic_usefulness;
use crate::identify::classify_premise;
use crate::oracle::{check_entailment, derive_step, parse_statement, query, render, Atom, Clause, KnowledgeBase};

pub struct SymbolicBackend {
    depth: usize,
}

impl Default for SymbolicBackend {
    fn default() -> Self {
        Self { depth: 10 }
    }
}

fn judgement(question: &str, verdict: &str) -> String {
    format!("\"Judgement\": \"{question}? {verdict}\"")
}

fn yes_no(b: bool) -> &'static str {
    if b { "True" } else { "False" }
}

fn hypothesis_atom(text: &str) -> Result<Atom, BackendError> {
    match parse_statement(text)? {
        Clause::Fact(a) if !a.has_var() => Ok(a),
        other => Err(BackendError::Oracle(crate::oracle::OracleError::NotAFact(other.to_string()))),
    }
}

/// Clauses for the statements that parse; the rest are out of the oracle's language.
fn parse_all(statements: &[String]) -> Vec<Clause> {
    statements.iter().filter_map(|s| parse_statement(s).ok()).collect()
}

impl SymbolicBackend {
    pub fn new(depth: usize) -> Self {
        Self { depth }
    }

    fn explore(&self, p: &Payload) -> Result<String, BackendError> {
        let Some((first, rest)) = p.statements.split_first() else {
            return Ok("\"Proposition\": \"None\"".into());
        };
        let Ok(primary) = parse_statement(first) else {
            return Ok("\"Proposition\": \"None\"".into());
        };
        let supplements = parse_all(rest);
        let known: BTreeSet<Atom> =
            parse_all(&p.known).into_iter().filter_map(|c| c.as_fact().cloned()).collect();
        let sources: Vec<&str> = p.statements.iter().map(String::as_str).collect();
        Ok(match derive_step(&primary, &supplements, &known) {
            Some(d) => format!("\"Proposition\": \"{}\"", render(&d.conclusion, &sources)),
            None => "\"Proposition\": \"None\"".into(),
        })
    }

    fn validity(&self, p: &Payload) -> String {
        let candidate = p.candidate.as_deref().unwrap_or_default();
        match check_entailment(&p.statements, candidate) {
            Ok(valid) => judgement("Is this deduction valid", yes_no(valid)),
            Err(e) => format!("{}\n\"Explanation\": \"{e}\"", judgement("Is this deduction valid", "False")),
        }
    }

    fn novelty(&self, p: &Payload) -> String {
        let candidate = p.candidate.as_deref().and_then(|c| normalize(c).ok());
        let duplicate = candidate.is_none_or(|c| p.known.iter().any(|k| normalize(k).is_ok_and(|n| n == c)));
        judgement("Is this proposition new", if duplicate { "Duplicated" } else { "Valid" })
    }

    fn sufficiency(&self, p: &Payload) -> Result<String, BackendError> {
        let Ok(hypothesis) = hypothesis_atom(&p.hypothesis) else {
            return Ok(judgement("Can the hypothesis be determined", "No"));
        };
        let kb = KnowledgeBase::from_clauses(&parse_all(&p.statements))?;
        let settled = query(&kb, &hypothesis, 1)? != Truth::Unknown;
        Ok(judgement("Can the hypothesis be determined", if settled { "Yes" } else { "No" }))
    }

    fn conclude(&self, p: &Payload) -> Result<String, BackendError> {
        let target = Target {
            hypothesis: p.hypothesis.clone(),
            question: String::new(),
            options: p.options.clone(),
            answer_key: None,
        };
        if !target.is_true_false_unknown() {
            return Err(BackendError::Unsupported { stage: Stage::Conclude, backend: BackendKind::Symbolic });
        }
        let hypothesis = hypothesis_atom(&p.hypothesis)?;
        let kb = KnowledgeBase::from_clauses(&parse_all(&p.statements))?;
        let truth = query(&kb, &hypothesis, self.depth)?;
        let label = target.label_for_truth(truth).expect("checked above");
        let text = &p.options.iter().find(|o| o.label == label).expect("label from options").text;
        Ok(format!("So the answer is {label}) {text}.\n{}", judgement("What is the answer", label)))
    }

    fn boundary(&self, p: &Payload) -> String {
        let total = p.boundary.iter().find_map(|b| positions::parse_roster(b)).map(|r| r.count);
        let ok = match (total, &p.candidate) {
            (Some(total), Some(c)) => {
                let mut all: Vec<&str> = p.statements.iter().map(String::as_str).collect();
                all.push(c);
                positions::consistent(&all, total)
            }
            _ => false,
        };
        judgement("Does it still meet the boundary conditions", yes_no(ok))
    }
}

impl Backend for SymbolicBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Symbolic
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        let p = &request.payload;
        match request.stage {
            Stage::Identify => {
                let candidate = p.candidate.as_deref().unwrap_or_default();
                let verdict = match classify_premise(candidate, &p.hypothesis) {
                    PremiseKind::Determinate => "Determinate",
                    PremiseKind::Indeterminate => "Not determinate",
                };
                Ok(judgement("Is this premise a determinate premise or not", verdict))
            }
            Stage::Explore => self.explore(p),
            Stage::Validity => Ok(self.validity(p)),
            Stage::Usefulness => {
                let candidate = p.candidate.as_deref().unwrap_or_default();
                let useful = deterministic_usefulness(candidate, &p.hypothesis, &p.statements);
                Ok(judgement("Is this proposition useful", yes_no(useful)))
            }
            Stage::Novelty => Ok(self.novelty(p)),
            Stage::Sufficiency => self.sufficiency(p),
            Stage::Conclude => self.conclude(p),
            Stage::Boundary => Ok(self.boundary(p)),
            Stage::Transform => Ok("\"new premise\": \"None.\"".into()),
            Stage::Extract | Stage::Prioritize => {
                Err(BackendError::Unsupported { stage: request.stage, backend: BackendKind::Symbolic })
            }
        }
    }
}
