//! Proposition generation from the selected premises, and the validity,
//! usefulness and novelty checks a proposition must pass before admission.

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::backends::parse::{parse_judgement, parse_labeled_field};
use crate::backends::{Backend, BackendError, Payload, Stage, StageRequest};
use crate::domain::{normalize, Premise, PremiseId, Target, Verdict};
use crate::error::{Error, Result};
use crate::prioritize::term_profile;

/// Outcome of one exploration attempt, ready to be stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub iteration: u32,
    /// Primary first, then supplements.
    pub sources: Vec<PremiseId>,
    pub proposition: String,
    pub verdict: Verdict,
}

/// Backend plumbing shared by every call made during one case.
pub struct StageContext<'a> {
    pub backend: &'a dyn Backend,
    pub session: &'a str,
    pub temperature: f64,
}

impl StageContext<'_> {
    fn request(&self, stage: Stage) -> StageRequest {
        StageRequest::new(self.session, stage, self.temperature)
    }
}

/// Statement the reasoning is aimed at: the hypothesis, or for
/// multiple-choice tasks without one, the question and its options.
pub fn goal_text(target: &Target) -> String {
    if target.hypothesis.trim().is_empty() {
        target.question_with_options()
    } else {
        target.hypothesis.clone()
    }
}

pub fn join_statements<S: AsRef<str>>(statements: &[S]) -> String {
    statements.iter().map(|s| s.as_ref().trim()).collect::<Vec<_>>().join(" ")
}

fn or_none(text: String) -> String {
    if text.trim().is_empty() { "None".to_string() } else { text }
}

fn is_none_reply(value: &str) -> bool {
    let v = value.trim().trim_matches(['"', '\'', '`']).trim().trim_end_matches('.').to_ascii_lowercase();
    v.is_empty() || v == "none" || v == "n/a"
}

/// Asks the backend for one new proposition from the primary and supplements.
pub fn explore(
    primary: &Premise,
    supplements: &[Premise],
    target: &Target,
    boundary: &[String],
    known: &[String],
    ctx: &StageContext<'_>,
) -> Result<String> {
    let statements: Vec<String> =
        std::iter::once(primary).chain(supplements).map(|p| p.text.clone()).collect();
    let request = ctx
        .request(Stage::Explore)
        .bind("premises", join_statements(&statements))
        .bind("hypothesis", goal_text(target))
        .bind("boundary_condition", or_none(join_statements(boundary)))
        .payload(Payload {
            statements,
            hypothesis: target.hypothesis.clone(),
            known: known.to_vec(),
            options: target.options.clone(),
            boundary: boundary.to_vec(),
            ..Payload::default()
        });
    let reply = ctx.backend.complete(&request)?;
    let value = parse_labeled_field(&reply, "proposition")
        .map_err(|_| Error::ExplorationFailed(format!("no proposition field in {:?}", truncate(&reply))))?;
    if is_none_reply(&value) {
        return Err(Error::ExplorationFailed("backend found nothing to deduce".into()));
    }
    Ok(value)
}

fn truncate(text: &str) -> String {
    text.chars().take(80).collect()
}

fn judged(ctx: &StageContext<'_>, request: StageRequest, what: &str, notes: &mut Vec<String>) -> std::result::Result<bool, BackendError> {
    let reply = ctx.backend.complete(&request)?;
    Ok(parse_judgement(&reply).unwrap_or_else(|| {
        warn!(check = what, "unreadable judgement; treating as false");
        notes.push(format!("unreadable {what} judgement: {:?}", truncate(&reply)));
        false
    }))
}

pub fn verify_validity(
    sources: &[String],
    proposition: &str,
    ctx: &StageContext<'_>,
    notes: &mut Vec<String>,
) -> std::result::Result<bool, BackendError> {
    let request = ctx
        .request(Stage::Validity)
        .bind("premises", join_statements(sources))
        .bind("proposition", proposition)
        .payload(Payload {
            statements: sources.to_vec(),
            candidate: Some(proposition.to_string()),
            ..Payload::default()
        });
    judged(ctx, request, "validity", notes)
}

/// True when the proposition shares a term with the hypothesis, or meets the
/// antecedent of a rule whose consequent does.
pub fn deterministic_usefulness<S: AsRef<str>>(proposition: &str, hypothesis: &str, rules: &[S]) -> bool {
    let prop = term_profile(proposition);
    let goal = term_profile(hypothesis);
    if prop.shares_any(&goal) {
        return true;
    }
    rules.iter().any(|rule| {
        let Ok(n) = normalize(rule.as_ref()) else { return false };
        let Some((antecedent, consequent)) = n.split_once(" then ") else { return false };
        let antecedent = antecedent.strip_prefix("if ").unwrap_or(antecedent);
        term_profile(consequent).shares_any(&goal) && prop.shares_any(&term_profile(antecedent))
    })
}

pub fn verify_usefulness(
    proposition: &str,
    target: &Target,
    rules: &[String],
    ctx: &StageContext<'_>,
    notes: &mut Vec<String>,
) -> std::result::Result<bool, BackendError> {
    let request = ctx
        .request(Stage::Usefulness)
        .bind("proposition", proposition)
        .bind("hypothesis", goal_text(target))
        .payload(Payload {
            statements: rules.to_vec(),
            candidate: Some(proposition.to_string()),
            hypothesis: target.hypothesis.clone(),
            ..Payload::default()
        });
    judged(ctx, request, "usefulness", notes)
}

/// Exact match after normalization against every known statement.
pub fn is_novel_text<S: AsRef<str>>(proposition: &str, known: &[S]) -> bool {
    let Ok(p) = normalize(proposition) else { return false };
    known.iter().all(|k| normalize(k.as_ref()).map_or(true, |n| n != p))
}

/// Text check first; the backend is only asked about paraphrases when the
/// text is new.
pub fn verify_novelty(
    proposition: &str,
    known: &[String],
    ctx: &StageContext<'_>,
    notes: &mut Vec<String>,
) -> std::result::Result<bool, BackendError> {
    if !is_novel_text(proposition, known) {
        notes.push("duplicate of a premise in memory".into());
        return Ok(false);
    }
    let request = ctx
        .request(Stage::Novelty)
        .bind("premises", join_statements(known))
        .bind("proposition", proposition)
        .payload(Payload {
            candidate: Some(proposition.to_string()),
            known: known.to_vec(),
            ..Payload::default()
        });
    judged(ctx, request, "novelty", notes)
}

pub fn check_boundary(
    existing: &[String],
    proposition: &str,
    boundary: &[String],
    ctx: &StageContext<'_>,
    notes: &mut Vec<String>,
) -> std::result::Result<bool, BackendError> {
    let request = ctx
        .request(Stage::Boundary)
        .bind("premises", join_statements(existing))
        .bind("proposition", proposition)
        .bind("boundary_condition", or_none(join_statements(boundary)))
        .payload(Payload {
            statements: existing.to_vec(),
            candidate: Some(proposition.to_string()),
            boundary: boundary.to_vec(),
            ..Payload::default()
        });
    judged(ctx, request, "boundary", notes)
}

/// Everything `verify` needs besides the proposition.
pub struct VerifyInput<'a> {
    pub sources: &'a [String],
    pub target: &'a Target,
    /// Statements currently in memory.
    pub known: &'a [String],
    /// Indeterminate rules, for one-hop usefulness.
    pub rules: &'a [String],
    /// Boundary conditions, when the task has them.
    pub boundary: Option<&'a [String]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub verdict: Verdict,
    /// Outcome of the boundary check when one ran; it is folded into validity.
    pub boundary_ok: Option<bool>,
    pub notes: Vec<String>,
}

/// Validity, then boundary, usefulness and novelty, stopping at the first failure.
pub fn verify(
    proposition: &str,
    input: &VerifyInput<'_>,
    ctx: &StageContext<'_>,
) -> std::result::Result<Verification, BackendError> {
    let mut notes = Vec::new();
    let rejected = |boundary_ok, notes| Verification { verdict: Verdict::rejected(), boundary_ok, notes };
    if !verify_validity(input.sources, proposition, ctx, &mut notes)? {
        return Ok(rejected(None, notes));
    }
    let mut boundary_ok = None;
    if let Some(boundary) = input.boundary {
        let ok = check_boundary(input.known, proposition, boundary, ctx, &mut notes)?;
        boundary_ok = Some(ok);
        if !ok {
            return Ok(rejected(boundary_ok, notes));
        }
    }
    if !verify_usefulness(proposition, input.target, input.rules, ctx, &mut notes)? {
        return Ok(Verification { verdict: Verdict::new(true, false, false), boundary_ok, notes });
    }
    let novel = verify_novelty(proposition, input.known, ctx, &mut notes)?;
    Ok(Verification { verdict: Verdict::new(true, true, novel), boundary_ok, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::SymbolicBackend;

    fn ctx(b: &SymbolicBackend) -> StageContext<'_> {
        StageContext { backend: b, session: "t", temperature: 0.1 }
    }

    fn target(h: &str) -> Target {
        Target { hypothesis: h.into(), question: String::new(), options: Target::true_false_unknown(), answer_key: None }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn explore_texts(texts: &[&str]) -> Result<String> {
        let b = SymbolicBackend::default();
        let ps: Vec<Premise> = texts.iter().enumerate().map(|(i, t)| Premise::input(i, t).unwrap()).collect();
        explore(&ps[0], &ps[1..], &target("B is true."), &[], &[], &ctx(&b))
    }

    #[test]
    fn exploration_examples() {
        assert_eq!(
            explore_texts(&["The bald eagle chases the cat.", "If something chases the cat then the cat chases the dog."]).unwrap(),
            "The cat chases the dog."
        );
        assert_eq!(explore_texts(&["If A, then B.", "A is true."]).unwrap(), "B is true.");
        assert_eq!(explore_texts(&["A is either C or D.", "A is not C."]).unwrap(), "A is D.");
        assert!(matches!(explore_texts(&["The cat is red.", "The dog is blue."]), Err(Error::ExplorationFailed(_))));
    }

    #[test]
    fn validity_examples() {
        let b = SymbolicBackend::default();
        let c = ctx(&b);
        let mut notes = Vec::new();
        assert!(verify_validity(&strings(&["If A, then B.", "A is true."]), "B is true.", &c, &mut notes).unwrap());
        assert!(!verify_validity(&strings(&["If A, then B.", "B is true."]), "A is true.", &c, &mut notes).unwrap());
        assert!(verify_validity(&strings(&["If A, then B.", "B is not true."]), "A is not true.", &c, &mut notes).unwrap());
    }

    #[test]
    fn usefulness_examples() {
        let hyp = "The cat eats the bald eagle.";
        let rules = ["If something chases the dog then it eats the bald eagle."];
        assert!(deterministic_usefulness("The cat chases the dog.", hyp, &rules));
        assert!(deterministic_usefulness("The cat eats the bald eagle.", hyp, &rules));
        assert!(!deterministic_usefulness("The lion is green.", hyp, &rules));
        assert!(deterministic_usefulness("The lion chases the dog.", hyp, &rules));
        assert!(!deterministic_usefulness("The lion chases the dog.", hyp, &[] as &[&str]));
    }

    #[test]
    fn novelty_examples() {
        let b = SymbolicBackend::default();
        let c = ctx(&b);
        let known = strings(&["The cat is rough.", "The cat chases the dog."]);
        let mut notes = Vec::new();
        assert!(!verify_novelty("the cat is ROUGH", &known, &c, &mut notes).unwrap());
        assert!(!verify_novelty("The cat chases the dog.", &known, &c, &mut notes).unwrap());
        assert!(verify_novelty("The dog chases the cat.", &known, &c, &mut notes).unwrap());
    }

    #[test]
    fn verify_short_circuits() {
        let b = SymbolicBackend::default();
        let c = ctx(&b);
        let sources = strings(&["If A, then B.", "A is true."]);
        let t = target("B is true.");
        let known = sources.clone();
        let input = VerifyInput { sources: &sources, target: &t, known: &known, rules: &[], boundary: None };
        let ok = verify("B is true.", &input, &c).unwrap();
        assert!(ok.verdict.overall());
        let bad = verify("C is true.", &input, &c).unwrap();
        assert!(!bad.verdict.valid() && !bad.verdict.useful() && !bad.verdict.novel());
        let dup = verify("A is true.", &input, &c).unwrap();
        assert!(dup.verdict.valid() && !dup.verdict.overall());
    }
}
