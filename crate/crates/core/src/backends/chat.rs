//! Chat-completions client with retry, on-disk response cache, and the
//! template-driven LLM backend built on it.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{debug, warn};

use super::template::TemplateSet;
use super::{Backend, BackendError, BackendKind, StageRequest};

pub const API_KEY_ENV: &str = "DETERMLR_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(model: &str, messages: Vec<Message>, temperature: f64, max_tokens: u32) -> Result<Self, BackendError> {
        match messages.first() {
            None => return Err(BackendError::Template("chat request has no messages".into())),
            Some(m) if m.role != Role::System => {
                return Err(BackendError::Template("first chat message must be the system message".into()))
            }
            _ => {}
        }
        Ok(Self { model: model.to_string(), messages, temperature, max_tokens })
    }

    /// Cache key over model, messages and temperature.
    pub fn digest(&self) -> String {
        let canonical = serde_json::json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { base: Duration::from_secs(1), factor: 2, max_attempts: 5 }
    }
}

impl RetryPolicy {
    /// Delay after the `attempt`-th failure (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    response: String,
    timestamp: u64,
}

/// Append-only JSONL store of responses with an in-memory index.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    inner: Mutex<(HashMap<String, String>, Option<File>)>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self { path: None, inner: Mutex::new((HashMap::new(), None)) }
    }

    /// Opens `dir/responses.jsonl`, loading existing entries. A torn last
    /// line from an interrupted write is skipped.
    pub fn open(dir: &Path) -> Result<Self, BackendError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("responses.jsonl");
        let mut index = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(e) => {
                        index.insert(e.key, e.response);
                    }
                    Err(e) => warn!(path = %path.display(), "skipping unreadable cache line: {e}"),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path: Some(path), inner: Mutex::new((index, Some(file))) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner.lock().expect("cache lock").0.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, key: &str, response: &str) -> Result<(), BackendError> {
        let mut guard = self.inner.lock().expect("cache lock");
        let (index, file) = &mut *guard;
        if let Some(file) = file {
            let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let entry = CacheEntry { key: key.to_string(), response: response.to_string(), timestamp };
            let mut line = serde_json::to_string(&entry).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
            line.push('\n');
            // one write per line keeps concurrent appends from interleaving
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        index.insert(key.to_string(), response.to_string());
        Ok(())
    }
}

pub struct ChatClient {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    retry: RetryPolicy,
    cache: ResponseCache,
    network_calls: AtomicUsize,
}

enum Failure {
    Retry(String),
    Fatal(BackendError),
}

impl ChatClient {
    pub fn new(endpoint: &str, cache: ResponseCache) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            endpoint: endpoint.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            agent,
            retry: RetryPolicy::default(),
            cache,
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, Failure> {
        self.network_calls.fetch_add(1, Ordering::Relaxed);
        let mut builder = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            builder = builder.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = builder.send_json(request).map_err(|e| Failure::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| Failure::Retry(e.to_string()))?;
        match status {
            200..=299 => extract_content(&body).map_err(Failure::Fatal),
            401 | 403 => Err(Failure::Fatal(BackendError::Auth(status))),
            429 | 500..=599 => Err(Failure::Retry(format!("status {status}"))),
            _ => Err(Failure::Fatal(BackendError::InvalidResponse(format!("status {status}: {body}")))),
        }
    }

    pub fn chat(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = request.digest();
        if let Some(hit) = self.cache.get(&key) {
            debug!(key = %&key[..12], "cache hit");
            return Ok(hit);
        }
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            match self.attempt(request) {
                Ok(text) => {
                    self.cache.insert(&key, &text)?;
                    return Ok(text);
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(reason)) => {
                    warn!(attempt, "chat request failed: {reason}");
                    last = reason;
                    if attempt < self.retry.max_attempts {
                        std::thread::sleep(self.retry.delay(attempt));
                    }
                }
            }
        }
        Err(BackendError::Unavailable(format!("{} attempts failed, last: {last}", self.retry.max_attempts)))
    }
}

fn extract_content(body: &str) -> Result<String, BackendError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| BackendError::InvalidResponse(format!("reply is not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::InvalidResponse("reply has no choices[0].message.content".into()))
}

/// Renders each stage request through its template and sends it to a chat endpoint.
pub struct LlmBackend {
    client: ChatClient,
    templates: TemplateSet,
    model: String,
    max_tokens: u32,
}

impl LlmBackend {
    pub fn new(client: ChatClient, templates: TemplateSet, model: &str) -> Self {
        Self { client, templates, model: model.to_string(), max_tokens: 512 }
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn client(&self) -> &ChatClient {
        &self.client
    }
}

impl Backend for LlmBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Llm
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        let chat = self.templates.render_request(request, &self.model, self.max_tokens)?;
        self.client.chat(&chat)
    }
}
