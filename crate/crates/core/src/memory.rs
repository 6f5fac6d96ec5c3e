//! Per-case reasoning memory: the premise store plus every exploration
//! attempt, positive or negative, in iteration order.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::domain::{Polarity, Premise, PremiseId, ReasoningPath};
use crate::error::{Error, Result};
use crate::explore::ExplorationResult;
use crate::identify::IdentificationResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningMemory {
    premises: IndexMap<PremiseId, Premise>,
    paths: Vec<ReasoningPath>,
    iteration: u32,
    /// History views are blanked when memory is ablated.
    history_enabled: bool,
}

impl ReasoningMemory {
    pub fn init(identification: &IdentificationResult, history_enabled: bool) -> Self {
        let mut inputs: Vec<&Premise> =
            identification.determinate.iter().chain(&identification.indeterminate).collect();
        inputs.sort_by_key(|p| p.order_key());
        Self {
            premises: inputs.into_iter().map(|p| (p.id.clone(), p.clone())).collect(),
            paths: Vec::new(),
            iteration: 0,
            history_enabled,
        }
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn premises(&self) -> impl Iterator<Item = &Premise> {
        self.premises.values()
    }

    pub fn premise(&self, id: &PremiseId) -> Option<&Premise> {
        self.premises.get(id)
    }

    pub fn len(&self) -> usize {
        self.premises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premises.is_empty()
    }

    pub fn paths(&self) -> &[ReasoningPath] {
        &self.paths
    }

    pub fn derived_count(&self) -> usize {
        self.premises.values().filter(|p| p.is_derived()).count()
    }

    pub fn texts(&self) -> Vec<String> {
        self.premises.values().map(|p| p.text.clone()).collect()
    }

    /// Appends the attempt as iteration `t + 1`; admitted propositions join
    /// the premises as `x{t}`.
    pub fn store(&mut self, result: ExplorationResult) -> Result<&ReasoningPath> {
        let t = self.iteration + 1;
        if result.iteration != t {
            return Err(Error::InternalInvariantViolation(format!(
                "stored iteration {} but memory is at {}",
                result.iteration, self.iteration
            )));
        }
        if let Some(missing) = result.sources.iter().find(|id| !self.premises.contains_key(*id)) {
            return Err(Error::InternalInvariantViolation(format!("source {missing} is not in memory")));
        }
        if result.sources.is_empty() {
            return Err(Error::InternalInvariantViolation("exploration without a primary premise".into()));
        }
        let (polarity, proposition_id) = if result.verdict.overall() {
            let premise = Premise::derived(t, &result.proposition)?;
            if self.premises.contains_key(&premise.id) {
                return Err(Error::InternalInvariantViolation(format!("duplicate derived premise {}", premise.id)));
            }
            let id = premise.id.clone();
            self.premises.insert(id.clone(), premise);
            (Polarity::Positive, Some(id))
        } else {
            (Polarity::Negative, None)
        };
        self.paths.push(ReasoningPath {
            sources: result.sources,
            proposition_text: result.proposition,
            proposition_id,
            polarity,
            iteration: t,
        });
        self.iteration = t;
        Ok(self.paths.last().expect("just pushed"))
    }

    pub fn extract_history(&self) -> &[ReasoningPath] {
        if self.history_enabled { &self.paths } else { &[] }
    }

    pub fn failed_primaries(&self) -> BTreeSet<PremiseId> {
        self.extract_history()
            .iter()
            .filter(|p| p.polarity == Polarity::Negative)
            .map(|p| p.primary().clone())
            .collect()
    }

    /// Determinate premises, inputs first, then derived in iteration order.
    pub fn determinate_view(&self) -> Vec<&Premise> {
        let mut view: Vec<&Premise> = self.premises.values().filter(|p| p.is_determinate()).collect();
        view.sort_by_key(|p| p.order_key());
        view
    }

    pub fn indeterminate_view(&self) -> Vec<&Premise> {
        self.premises.values().filter(|p| !p.is_determinate()).collect()
    }

    /// Rendering of the history for prompts, one line per attempt.
    pub fn history_text(&self, negative_only: bool) -> String {
        let lines: Vec<String> = self
            .extract_history()
            .iter()
            .filter(|p| !negative_only || p.polarity == Polarity::Negative)
            .map(|p| {
                let ids: Vec<&str> = p.sources.iter().map(PremiseId::as_str).collect();
                let label = match p.polarity {
                    Polarity::Positive => "true Proposition",
                    Polarity::Negative => "false Proposition",
                };
                format!("round {}: Most relevant premise {} with {}; {}: {}", p.iteration, ids[0], ids[1..].join(", "), label, p.proposition_text)
            })
            .collect();
        if lines.is_empty() { "None".to_string() } else { lines.join("\n") }
    }
}
