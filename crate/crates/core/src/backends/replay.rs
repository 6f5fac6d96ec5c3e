//! Scripted backend serving recorded responses in order, per session and stage.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{Backend, BackendError, BackendKind, Stage, StageRequest};
use crate::domain::EngineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs_digest: Option<String>,
    pub response: String,
}

/// A recorded transcript. On disk either a bare list of entries or an
/// object that also carries the case record and config overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<EngineConfig>,
    pub entries: Vec<FixtureEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    Entries(Vec<FixtureEntry>),
    Full(Fixture),
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let file: FixtureFile =
            serde_json::from_str(text).map_err(|e| BackendError::InvalidResponse(format!("bad fixture: {e}")))?;
        Ok(match file {
            FixtureFile::Entries(entries) => Fixture { entries, ..Fixture::default() },
            FixtureFile::Full(f) => f,
        })
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.entries.iter().filter(|e| e.stage == stage).count()
    }
}

pub struct ReplayBackend {
    by_stage: BTreeMap<Stage, Vec<FixtureEntry>>,
    cursors: Mutex<HashMap<(String, Stage), usize>>,
    strict: bool,
}

impl ReplayBackend {
    pub fn new(fixture: &Fixture) -> Self {
        let mut by_stage: BTreeMap<Stage, Vec<FixtureEntry>> = BTreeMap::new();
        for e in &fixture.entries {
            by_stage.entry(e.stage).or_default().push(e.clone());
        }
        Self { by_stage, cursors: Mutex::new(HashMap::new()), strict: false }
    }

    /// In strict mode an ordered entry whose recorded digest differs from the
    /// request's is an error rather than a warning.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn reset(&self) {
        self.cursors.lock().expect("cursor lock").clear();
    }

    /// Entry recorded for exactly this digest, else the next unread entry for
    /// the stage in this session.
    pub fn replay_next(&self, session: &str, stage: Stage, digest: &str) -> Result<String, BackendError> {
        let entries = self.by_stage.get(&stage).map(Vec::as_slice).unwrap_or_default();
        if let Some(e) = entries.iter().find(|e| e.inputs_digest.as_deref() == Some(digest)) {
            return Ok(e.response.clone());
        }
        let mut cursors = self.cursors.lock().expect("cursor lock");
        let cursor = cursors.entry((session.to_string(), stage)).or_insert(0);
        let entry = entries.get(*cursor).ok_or(BackendError::ReplayExhausted(stage))?;
        if let Some(expected) = &entry.inputs_digest {
            if self.strict {
                return Err(BackendError::ReplayMismatch {
                    stage,
                    expected: expected.clone(),
                    actual: digest.to_string(),
                });
            }
            warn!(%stage, "replay digest differs from recorded request");
        }
        *cursor += 1;
        Ok(entry.response.clone())
    }
}

impl Backend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        self.replay_next(&request.session, request.stage, &request.digest())
    }
}
