//! Domain types shared across the pipeline.
//!
//! Everything here is an immutable value once built; the reasoning loop only
//! ever creates new premises, it never edits existing ones.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical form of a statement used for duplicate detection and fixture keys.
///
/// Lowercases, trims, collapses whitespace runs and drops terminal periods.
/// Interior punctuation is kept as-is.
pub fn normalize(text: &str) -> Result<String> {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped = collapsed.trim_end_matches(|c: char| c == '.' || c.is_whitespace());
    if stripped.is_empty() {
        return Err(Error::EmptyStatement);
    }
    Ok(stripped.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PremiseId(String);

impl PremiseId {
    pub fn input(position: usize) -> Self {
        Self(format!("p{}", position + 1))
    }

    pub fn derived(iteration: u32) -> Self {
        Self(format!("x{iteration}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PremiseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PremiseId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PremiseKind {
    Determinate,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Origin {
    /// A premise given with the problem, at its position in the input list.
    Input { index: usize },
    /// A proposition admitted at the given iteration.
    Derived { iteration: u32 },
}

/// One known statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    pub id: PremiseId,
    pub text: String,
    /// `None` until identification has run.
    pub kind: Option<PremiseKind>,
    pub origin: Origin,
    pub normalized: String,
}

impl Premise {
    pub fn input(index: usize, text: &str) -> Result<Self> {
        let normalized = normalize(text)?;
        Ok(Self {
            id: PremiseId::input(index),
            text: text.trim().to_string(),
            kind: None,
            origin: Origin::Input { index },
            normalized,
        })
    }

    /// Derived premises are always determinate.
    pub fn derived(iteration: u32, text: &str) -> Result<Self> {
        let normalized = normalize(text)?;
        Ok(Self {
            id: PremiseId::derived(iteration),
            text: text.trim().to_string(),
            kind: Some(PremiseKind::Determinate),
            origin: Origin::Derived { iteration },
            normalized,
        })
    }

    pub fn with_kind(mut self, kind: PremiseKind) -> Self {
        if matches!(self.origin, Origin::Input { .. }) {
            self.kind = Some(kind);
        }
        self
    }

    pub fn is_determinate(&self) -> bool {
        self.kind == Some(PremiseKind::Determinate)
    }

    pub fn is_derived(&self) -> bool {
        matches!(self.origin, Origin::Derived { .. })
    }

    /// Inputs in input order, then derived premises in iteration order.
    pub fn order_key(&self) -> (u8, usize) {
        match self.origin {
            Origin::Input { index } => (0, index),
            Origin::Derived { iteration } => (1, iteration as usize),
        }
    }

    /// Duplicate check: exact match on normalized text.
    pub fn same_statement(&self, other: &Premise) -> bool {
        self.normalized == other.normalized
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

impl AnswerOption {
    pub fn new(label: &str, text: &str) -> Self {
        Self { label: label.to_string(), text: text.to_string() }
    }
}

/// Three-valued outcome under the open-world assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn matches_option_text(self, text: &str) -> bool {
        let t = text.trim().trim_end_matches('.').to_ascii_lowercase();
        match self {
            Truth::True => t == "true" || t == "yes",
            Truth::False => t == "false" || t == "no",
            Truth::Unknown => t == "unknown" || t == "uncertain",
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truth::True => f.write_str("True"),
            Truth::False => f.write_str("False"),
            Truth::Unknown => f.write_str("Unknown"),
        }
    }
}

/// What the problem asks for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub hypothesis: String,
    pub question: String,
    pub options: Vec<AnswerOption>,
    pub answer_key: Option<String>,
}

impl Target {
    pub fn true_false_unknown() -> Vec<AnswerOption> {
        vec![
            AnswerOption::new("A", "True"),
            AnswerOption::new("B", "False"),
            AnswerOption::new("C", "Uncertain"),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for option in &self.options {
            if !seen.insert(option.label.as_str()) {
                return Err(Error::Config(format!("duplicate option label {:?}", option.label)));
            }
        }
        if let Some(key) = &self.answer_key {
            let ok = self.options.iter().any(|o| o.label.eq_ignore_ascii_case(key))
                || ["true", "false", "unknown"].contains(&key.to_ascii_lowercase().as_str());
            if !ok {
                return Err(Error::Config(format!("answer key {key:?} is not an option label")));
            }
        }
        Ok(())
    }

    /// Label of the option standing for a truth value, if the task is phrased that way.
    pub fn label_for_truth(&self, truth: Truth) -> Option<&str> {
        self.options
            .iter()
            .find(|o| truth.matches_option_text(&o.text))
            .map(|o| o.label.as_str())
    }

    pub fn is_true_false_unknown(&self) -> bool {
        [Truth::True, Truth::False, Truth::Unknown]
            .iter()
            .all(|t| self.label_for_truth(*t).is_some())
    }

    /// Question followed by its options, one per line.
    pub fn question_with_options(&self) -> String {
        let mut out = self.question.trim().to_string();
        for option in &self.options {
            out.push('\n');
            out.push_str(&format!("{}) {}", option.label, option.text));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    LogiQA,
    ProofWriter,
    #[serde(rename = "FOLIO")]
    Folio,
    PrOntoQA,
    LogicalDeduction,
    Custom,
}

impl Dataset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dataset::LogiQA => "LogiQA",
            Dataset::ProofWriter => "ProofWriter",
            Dataset::Folio => "FOLIO",
            Dataset::PrOntoQA => "PrOntoQA",
            Dataset::LogicalDeduction => "LogicalDeduction",
            Dataset::Custom => "Custom",
        }
    }

}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.to_ascii_lowercase().as_str() {
            "logiqa" => Ok(Dataset::LogiQA),
            "proofwriter" | "pw" => Ok(Dataset::ProofWriter),
            "folio" => Ok(Dataset::Folio),
            "prontoqa" => Ok(Dataset::PrOntoQA),
            "logicaldeduction" | "ld" => Ok(Dataset::LogicalDeduction),
            "custom" => Ok(Dataset::Custom),
            _ => Err(Error::Config(format!("unknown dataset {s:?}"))),
        }
    }
}

/// A loaded problem in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub case_id: String,
    pub dataset: Dataset,
    pub context: String,
    pub premises: Vec<Premise>,
    pub target: Target,
    #[serde(default)]
    pub boundary_conditions: Vec<String>,
}

impl ProblemInstance {
    /// Premises may only be empty for LogicalDeduction, where they are
    /// extracted from the context at run time.
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if self.premises.is_empty() && self.dataset != Dataset::LogicalDeduction {
            return Err(Error::Config(format!("case {} has no premises", self.case_id)));
        }
        if !self.boundary_conditions.is_empty() && self.dataset != Dataset::LogicalDeduction {
            return Err(Error::Config(format!(
                "case {} has boundary conditions but is not a LogicalDeduction case",
                self.case_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Link from the premises used in one attempt to the proposition it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningPath {
    /// Primary premise first, then the supplements.
    pub sources: Vec<PremiseId>,
    pub proposition_text: String,
    /// Set exactly when the path is positive.
    pub proposition_id: Option<PremiseId>,
    pub polarity: Polarity,
    pub iteration: u32,
}

impl ReasoningPath {
    pub fn primary(&self) -> &PremiseId {
        &self.sources[0]
    }
}

/// Outcome of the three verification checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VerdictRepr")]
pub struct Verdict {
    valid: bool,
    useful: bool,
    novel: bool,
    overall: bool,
}

#[derive(Deserialize)]
struct VerdictRepr {
    valid: bool,
    useful: bool,
    novel: bool,
    overall: bool,
}

impl TryFrom<VerdictRepr> for Verdict {
    type Error = String;

    fn try_from(r: VerdictRepr) -> std::result::Result<Self, Self::Error> {
        let v = Verdict::new(r.valid, r.useful, r.novel);
        if v.overall != r.overall {
            return Err("verdict overall flag disagrees with its components".into());
        }
        Ok(v)
    }
}

impl Verdict {
    pub fn new(valid: bool, useful: bool, novel: bool) -> Self {
        Self { valid, useful, novel, overall: valid && useful && novel }
    }

    pub fn rejected() -> Self {
        Self::new(false, false, false)
    }

    pub fn valid(&self) -> bool {
        self.valid
    }

    pub fn useful(&self) -> bool {
        self.useful
    }

    pub fn novel(&self) -> bool {
        self.novel
    }

    pub fn overall(&self) -> bool {
        self.overall
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    NoIdentify,
    NoPriority,
    NoMemory,
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "no-identify" => Ok(Ablation::NoIdentify),
            "no-priority" => Ok(Ablation::NoPriority),
            "no-memory" => Ok(Ablation::NoMemory),
            _ => Err(Error::Config(format!("unknown ablation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Llm,
    Symbolic,
    Replay,
}

impl FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "llm" => Ok(BackendChoice::Llm),
            "symbolic" => Ok(BackendChoice::Symbolic),
            "replay" => Ok(BackendChoice::Replay),
            _ => Err(Error::Config(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub n_required_determinate: usize,
    pub max_iterations: usize,
    pub theta: f64,
    pub temperature_default: f64,
    pub temperature_conclude: f64,
    pub ablation: BTreeSet<Ablation>,
    pub backend_choice: BackendChoice,
    /// Seeds every stochastic choice (random primary selection under `no-priority`).
    pub seed: u64,
    /// Round cutoff for the symbolic forward chainer.
    pub oracle_depth: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            n_required_determinate: 4,
            max_iterations: 25,
            theta: 0.25,
            temperature_default: 0.1,
            temperature_conclude: 0.7,
            ablation: BTreeSet::new(),
            backend_choice: BackendChoice::Symbolic,
            seed: 0,
            oracle_depth: 10,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} outside [0, 1]", self.theta)));
        }
        if self.n_required_determinate == 0 {
            return Err(Error::Config("n_required_determinate must be positive".into()));
        }
        // max_iterations = 0 is allowed and degenerates to a single-shot conclusion.
        if self.max_iterations > 0 && self.n_required_determinate > self.max_iterations {
            return Err(Error::Config(format!(
                "n_required_determinate {} exceeds max_iterations {}",
                self.n_required_determinate, self.max_iterations
            )));
        }
        Ok(())
    }

    pub fn has(&self, ablation: Ablation) -> bool {
        self.ablation.contains(&ablation)
    }
}

/// Final answer of a case.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Answer {
    Label(String),
    Abstain,
}

impl Answer {
    pub fn label(&self) -> Option<&str> {
        match self {
            Answer::Label(l) => Some(l),
            Answer::Abstain => None,
        }
    }

    /// Case-insensitive comparison on the option label; abstaining is never correct.
    pub fn matches(&self, gold: &str) -> bool {
        self.label().is_some_and(|l| l.eq_ignore_ascii_case(gold.trim()))
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Label(l) => f.write_str(l),
            Answer::Abstain => f.write_str("Abstain"),
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == "Abstain" { Answer::Abstain } else { Answer::Label(s) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("The cat chases the dog.").unwrap(), "the cat chases the dog");
        assert_eq!(normalize("the cat chases the dog").unwrap(), "the cat chases the dog");
        assert_eq!(normalize("  If A,then B.  ").unwrap(), "if a,then b");
    }

    #[test]
    fn normalize_rejects_empty() {
        assert!(matches!(normalize(""), Err(Error::EmptyStatement)));
        assert!(matches!(normalize("  . "), Err(Error::EmptyStatement)));
    }

    #[test]
    fn derived_premises_are_determinate() {
        let p = Premise::derived(3, "The cat chases the dog.").unwrap();
        assert_eq!(p.id.as_str(), "x3");
        assert!(p.is_determinate());
        // kind of a derived premise cannot be overwritten
        assert!(p.with_kind(PremiseKind::Indeterminate).is_determinate());
    }

    #[test]
    fn verdict_rejects_inconsistent_json() {
        let bad = r#"{"valid":true,"useful":false,"novel":true,"overall":true}"#;
        assert!(serde_json::from_str::<Verdict>(bad).is_err());
        let good = serde_json::to_string(&Verdict::new(true, true, true)).unwrap();
        assert!(serde_json::from_str::<Verdict>(&good).unwrap().overall());
    }

    #[test]
    fn target_label_mapping() {
        let t = Target {
            hypothesis: "The cat eats the bald eagle.".into(),
            question: "Is it true?".into(),
            options: Target::true_false_unknown(),
            answer_key: Some("A".into()),
        };
        t.validate().unwrap();
        assert_eq!(t.label_for_truth(Truth::True), Some("A"));
        assert_eq!(t.label_for_truth(Truth::Unknown), Some("C"));
        assert!(t.is_true_false_unknown());
    }

    #[test]
    fn target_rejects_duplicate_labels() {
        let t = Target {
            hypothesis: "h".into(),
            question: "q".into(),
            options: vec![AnswerOption::new("A", "x"), AnswerOption::new("A", "y")],
            answer_key: None,
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn config_defaults_validate() {
        let c = EngineConfig::default();
        assert_eq!(c.n_required_determinate, 4);
        assert_eq!(c.theta, 0.25);
        c.validate().unwrap();
        let bad = EngineConfig { theta: 1.5, ..EngineConfig::default() };
        assert!(bad.validate().is_err());
        let zero = EngineConfig { max_iterations: 0, ..EngineConfig::default() };
        zero.validate().unwrap();
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            if let Ok(once) = normalize(&s) {
                prop_assert_eq!(normalize(&once).unwrap(), once);
            }
        }

        #[test]
        fn verdict_overall_is_conjunction(v: bool, u: bool, n: bool) {
            prop_assert_eq!(Verdict::new(v, u, n).overall(), v && u && n);
        }
    }
}
