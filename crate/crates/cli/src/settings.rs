//! Engine and backend settings: defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use determlr::backends::{Backend, ChatClient, Fixture, LlmBackend, ReplayBackend, ResponseCache, SymbolicBackend, TemplateSet};
use determlr::{BackendChoice, EngineConfig};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::{BackendArgs, EngineArgs, Failure};

const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BackendFile {
    model: Option<String>,
    endpoint: Option<String>,
    cache_dir: Option<PathBuf>,
    fixture: Option<PathBuf>,
    /// Directory of prompt template overrides.
    templates: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Settings {
    pub engine: EngineConfig,
    pub model: String,
    pub endpoint: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        serde_json::to_value(table).map_err(|e| Failure::Usage(e.to_string()))?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(Failure::Usage(format!("{}: expected a table of settings", path.display()))),
    }
}

/// Layers `base`, the config file and the flags, then validates the result.
pub fn resolve(base: EngineConfig, engine: &EngineArgs, backend: &BackendArgs) -> Result<Settings, Failure> {
    let mut file_backend = BackendFile::default();
    let mut config = base;
    if let Some(path) = &engine.config {
        let mut map = read_file(path)?;
        if let Some(b) = map.remove("backend") {
            file_backend = serde_json::from_value(b).map_err(|e| Failure::Usage(format!("[backend]: {e}")))?;
        }
        let Value::Object(mut merged) = serde_json::to_value(&config).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        for (key, value) in map {
            if !merged.contains_key(&key) {
                return Err(Failure::Usage(format!("{}: unknown setting {key:?}", path.display())));
            }
            merged.insert(key, value);
        }
        config = serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(theta) = engine.theta {
        config.theta = theta;
    }
    if let Some(n) = engine.n_determinate {
        config.n_required_determinate = n;
    }
    if let Some(m) = engine.max_iters {
        config.max_iterations = m;
    }
    config.ablation.extend(engine.ablation.iter().copied());
    if let Some(seed) = engine.seed {
        config.seed = seed;
    }
    if let Some(choice) = backend.backend {
        config.backend_choice = choice;
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let settings = Settings {
        engine: config,
        model: backend.model.clone().or(file_backend.model).unwrap_or_else(|| DEFAULT_MODEL.into()),
        endpoint: backend.endpoint.clone().or(file_backend.endpoint),
        cache_dir: backend.cache_dir.clone().or(file_backend.cache_dir),
        fixture: backend.fixture.clone().or(file_backend.fixture),
        templates: file_backend.templates,
    };
    match settings.engine.backend_choice {
        BackendChoice::Llm if settings.endpoint.is_none() => {
            Err(Failure::Usage("the llm backend needs --endpoint".into()))
        }
        BackendChoice::Replay if settings.fixture.is_none() => {
            Err(Failure::Usage("the replay backend needs --fixture".into()))
        }
        _ => Ok(settings),
    }
}

pub fn load_fixture(path: &Path) -> Result<Fixture, Failure> {
    Fixture::load(path).map_err(|e| Failure::Execution(format!("{}: {e}", path.display())))
}

pub fn build_backend(settings: &Settings) -> Result<Box<dyn Backend>, Failure> {
    let exec = |e: determlr::backends::BackendError| Failure::Execution(e.to_string());
    Ok(match settings.engine.backend_choice {
        BackendChoice::Symbolic => Box::new(SymbolicBackend::new(settings.engine.oracle_depth)),
        BackendChoice::Replay => {
            let path = settings.fixture.as_deref().expect("checked in resolve");
            Box::new(ReplayBackend::new(&load_fixture(path)?))
        }
        BackendChoice::Llm => {
            let cache = match &settings.cache_dir {
                Some(dir) => ResponseCache::open(dir).map_err(exec)?,
                None => ResponseCache::in_memory(),
            };
            let templates = match &settings.templates {
                Some(dir) => TemplateSet::from_dir(dir).map_err(exec)?,
                None => TemplateSet::builtin(),
            };
            let endpoint = settings.endpoint.as_deref().expect("checked in resolve");
            Box::new(LlmBackend::new(ChatClient::new(endpoint, cache), templates, &settings.model))
        }
    })
}
