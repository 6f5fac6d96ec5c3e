//! Partition of the input premises into determinate and indeterminate sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::backends::parse::parse_determinacy;
use crate::backends::{Backend, BackendError, Payload, Stage, StageRequest};
use crate::domain::{normalize, Premise, PremiseId, PremiseKind, Target};
use crate::prioritize::{relevance, term_profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentifyMode {
    RuleBased,
    BackendDelegated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub determinate: Vec<Premise>,
    pub indeterminate: Vec<Premise>,
    /// Set when nothing classified as determinate and the most relevant
    /// premise was moved over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promoted: Option<PremiseId>,
}

impl IdentificationResult {
    /// Every premise in one determinate pool, as when identification is disabled.
    pub fn undifferentiated(premises: &[Premise]) -> Self {
        Self {
            determinate: premises.iter().cloned().map(|p| p.with_kind(PremiseKind::Determinate)).collect(),
            indeterminate: Vec::new(),
            promoted: None,
        }
    }

    pub fn len(&self) -> usize {
        self.determinate.len() + self.indeterminate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Error)]
#[error("identification stopped after {} premises: {source}", partial.len())]
pub struct IdentifyFailure {
    #[source]
    pub source: BackendError,
    /// Premises classified before the failure, in input order.
    pub partial: Vec<Premise>,
}

/// Surface test for rules and disjunctions on normalized text.
pub fn is_compound(normalized: &str) -> bool {
    normalized.starts_with("if ")
        || normalized.starts_with("either ")
        || normalized.contains(" then ")
        || normalized.contains(" or ")
        || normalized.contains(" either ")
}

/// Determinate iff the premise shares a noun or adjective with the
/// hypothesis and is neither a conditional nor a disjunction.
pub fn classify_premise(premise: &str, hypothesis: &str) -> PremiseKind {
    let Ok(normalized) = normalize(premise) else {
        return PremiseKind::Indeterminate;
    };
    if !is_compound(&normalized) && term_profile(premise).shares_any(&term_profile(hypothesis)) {
        PremiseKind::Determinate
    } else {
        PremiseKind::Indeterminate
    }
}

fn assemble(classified: Vec<Premise>, hypothesis: &str) -> IdentificationResult {
    let (mut determinate, mut indeterminate): (Vec<Premise>, Vec<Premise>) =
        classified.into_iter().partition(Premise::is_determinate);
    let mut promoted = None;
    if determinate.is_empty() && !indeterminate.is_empty() {
        // a rule is promoted only when every premise is one
        let rules_only = indeterminate.iter().all(|p| p.normalized.starts_with("if "));
        let mut best: Option<usize> = None;
        for (i, p) in indeterminate.iter().enumerate() {
            if !rules_only && p.normalized.starts_with("if ") {
                continue;
            }
            if best.is_none_or(|b| relevance(&p.text, hypothesis) > relevance(&indeterminate[b].text, hypothesis)) {
                best = Some(i);
            }
        }
        let p = indeterminate.remove(best.expect("non-empty candidates")).with_kind(PremiseKind::Determinate);
        promoted = Some(p.id.clone());
        determinate.push(p);
    }
    IdentificationResult { determinate, indeterminate, promoted }
}

pub struct IdentifyContext<'a> {
    pub backend: &'a dyn Backend,
    pub session: &'a str,
    pub temperature: f64,
}

pub fn identify_all(
    premises: &[Premise],
    target: &Target,
    mode: IdentifyMode,
    ctx: &IdentifyContext<'_>,
) -> Result<IdentificationResult, IdentifyFailure> {
    let mut classified = Vec::with_capacity(premises.len());
    for premise in premises {
        let kind = match mode {
            IdentifyMode::RuleBased => classify_premise(&premise.text, &target.hypothesis),
            IdentifyMode::BackendDelegated => {
                let request = StageRequest::new(ctx.session, Stage::Identify, ctx.temperature)
                    .bind("premise", premise.text.as_str())
                    .bind("hypothesis", target.hypothesis.as_str())
                    .payload(Payload {
                        candidate: Some(premise.text.clone()),
                        hypothesis: target.hypothesis.clone(),
                        ..Payload::default()
                    });
                let reply = match ctx.backend.complete(&request) {
                    Ok(r) => r,
                    Err(source) => return Err(IdentifyFailure { source, partial: classified }),
                };
                parse_determinacy(&reply).unwrap_or_else(|| {
                    warn!(premise = %premise.id, "unreadable identification reply; treating as indeterminate");
                    PremiseKind::Indeterminate
                })
            }
        };
        classified.push(premise.clone().with_kind(kind));
    }
    Ok(assemble(classified, &target.hypothesis))
}
