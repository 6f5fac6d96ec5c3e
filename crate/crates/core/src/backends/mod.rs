//! Inference backends: the port every reasoning stage goes through, and its
//! chat-endpoint, replay and symbolic implementations.

pub mod chat;
pub mod parse;
pub mod positions;
pub mod replay;
pub mod symbolic;
pub mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::AnswerOption;
use crate::oracle::OracleError;

pub use chat::{ChatClient, ChatRequest, LlmBackend, Message, ResponseCache, RetryPolicy, Role};
pub use parse::{parse_answer, parse_judgement, parse_labeled_field, split_sentences};
pub use replay::{Fixture, FixtureEntry, ReplayBackend};
pub use symbolic::SymbolicBackend;
pub use template::{PromptTemplate, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Identify,
    Prioritize,
    Explore,
    Validity,
    Usefulness,
    Novelty,
    Sufficiency,
    Conclude,
    Extract,
    Transform,
    Boundary,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Identify,
        Stage::Prioritize,
        Stage::Explore,
        Stage::Validity,
        Stage::Usefulness,
        Stage::Novelty,
        Stage::Sufficiency,
        Stage::Conclude,
        Stage::Extract,
        Stage::Transform,
        Stage::Boundary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Identify => "identify",
            Stage::Prioritize => "prioritize",
            Stage::Explore => "explore",
            Stage::Validity => "validity",
            Stage::Usefulness => "usefulness",
            Stage::Novelty => "novelty",
            Stage::Sufficiency => "sufficiency",
            Stage::Conclude => "conclude",
            Stage::Extract => "extract",
            Stage::Transform => "transform",
            Stage::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, BackendError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| BackendError::InvalidResponse(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Llm,
    Symbolic,
    Replay,
}

/// Structured view of a request for backends that do not read prompts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Payload {
    /// Premises the stage works on; for exploration the primary comes first.
    pub statements: Vec<String>,
    /// The statement under judgement, when there is one.
    pub candidate: Option<String>,
    pub hypothesis: String,
    /// Every statement currently in memory.
    pub known: Vec<String>,
    pub options: Vec<AnswerOption>,
    pub boundary: Vec<String>,
}

/// One call into a backend.
#[derive(Debug, Clone)]
pub struct StageRequest {
    pub session: String,
    pub stage: Stage,
    /// Template name; usually the stage name.
    pub template: String,
    pub bindings: BTreeMap<String, String>,
    pub temperature: f64,
    pub payload: Payload,
}

impl StageRequest {
    pub fn new(session: &str, stage: Stage, temperature: f64) -> Self {
        Self {
            session: session.to_string(),
            stage,
            template: stage.as_str().to_string(),
            bindings: BTreeMap::new(),
            temperature,
            payload: Payload::default(),
        }
    }

    pub fn template(mut self, name: &str) -> Self {
        self.template = name.to_string();
        self
    }

    pub fn bind(mut self, key: &str, value: impl Into<String>) -> Self {
        self.bindings.insert(key.to_string(), value.into());
        self
    }

    pub fn payload(mut self, payload: Payload) -> Self {
        self.payload = payload;
        self
    }

    /// SHA-256 over the stage name and bindings, used to key replay fixtures.
    pub fn digest(&self) -> String {
        let canonical = serde_json::json!({ "stage": self.stage, "bindings": self.bindings });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),

    #[error("authentication rejected with status {0}")]
    Auth(u16),

    #[error("unbound placeholder {{{0}}}")]
    UnboundPlaceholder(String),

    #[error("unknown template {0:?}")]
    UnknownTemplate(String),

    #[error("malformed template: {0}")]
    Template(String),

    #[error("field {0:?} not found in reply")]
    FieldNotFound(String),

    #[error("replay fixture exhausted for stage {0}")]
    ReplayExhausted(Stage),

    #[error("replay digest mismatch for stage {stage}: fixture has {expected}, request has {actual}")]
    ReplayMismatch { stage: Stage, expected: String, actual: String },

    #[error("{backend:?} backend does not support stage {stage}")]
    Unsupported { stage: Stage, backend: BackendKind },

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn kind(&self) -> BackendKind {
        (**self).kind()
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn kind(&self) -> BackendKind {
        (**self).kind()
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_bindings_only() {
        let a = StageRequest::new("s1", Stage::Explore, 0.1).bind("premises", "x");
        let mut b = StageRequest::new("s2", Stage::Explore, 0.7).bind("premises", "x");
        b.payload.hypothesis = "ignored".into();
        assert_eq!(a.digest(), b.digest());
        let c = StageRequest::new("s1", Stage::Explore, 0.1).bind("premises", "y");
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn stage_names_round_trip() {
        for st in Stage::ALL {
            assert_eq!(st.as_str().parse::<Stage>().unwrap(), st);
            let json = serde_json::to_string(&st).unwrap();
            assert_eq!(json, format!("\"{}\"", st.as_str()));
        }
    }
}
