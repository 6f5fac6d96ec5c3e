//! Prompt templates: plain-text files with `[system]`, `[user]` and optional
//! `[assistant]` sections and `{name}` placeholders, plus a JSON list of
//! few-shot bindings rendered as prior user/assistant turns.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::chat::{ChatRequest, Message, Role};
use super::{BackendError, StageRequest};

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
    pub assistant: Option<String>,
    pub examples: Vec<Bindings>,
}

/// Substitutes `{name}` placeholders; `{{` and `}}` are literal braces.
pub fn fill(text: &str, bindings: &Bindings) -> Result<String, BackendError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
        } else if tail.starts_with('}') {
            return Err(BackendError::Template(format!("stray '}}' in {:?}", truncate(text))));
        } else {
            let end = tail
                .find('}')
                .ok_or_else(|| BackendError::Template(format!("unclosed '{{' in {:?}", truncate(text))))?;
            let name = &tail[1..end];
            let value = bindings.get(name).ok_or_else(|| BackendError::UnboundPlaceholder(name.to_string()))?;
            out.push_str(value);
            rest = &tail[end + 1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn truncate(text: &str) -> String {
    text.chars().take(40).collect()
}

/// Placeholder names in `text`, in sorted order.
pub fn placeholders(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = text;
    while let Some(i) = rest.find('{') {
        let tail = &rest[i..];
        if let Some(after) = tail.strip_prefix("{{") {
            rest = after;
            continue;
        }
        match tail.find('}') {
            Some(end) => {
                out.insert(tail[1..end].to_string());
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    out
}

impl PromptTemplate {
    pub fn parse(name: &str, text: &str, examples: Option<&str>) -> Result<Self, BackendError> {
        let mut sections: BTreeMap<&str, String> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for line in text.lines() {
            let header = match line.trim() {
                "[system]" => Some("system"),
                "[user]" => Some("user"),
                "[assistant]" => Some("assistant"),
                _ => None,
            };
            if let Some(h) = header {
                if sections.contains_key(h) {
                    return Err(BackendError::Template(format!("{name}: duplicate [{h}] section")));
                }
                sections.insert(h, String::new());
                current = Some(h);
                continue;
            }
            match current {
                Some(h) => {
                    let body = sections.get_mut(h).expect("section exists");
                    body.push_str(line);
                    body.push('\n');
                }
                None if line.trim().is_empty() => {}
                None => return Err(BackendError::Template(format!("{name}: text before the first section"))),
            }
        }
        let mut take = |key: &str| sections.remove(key).map(|s| s.trim_end().to_string());
        let system = take("system").ok_or_else(|| BackendError::Template(format!("{name}: missing [system]")))?;
        let user = take("user").ok_or_else(|| BackendError::Template(format!("{name}: missing [user]")))?;
        let assistant = take("assistant");
        let examples: Vec<Bindings> = match examples {
            Some(json) => serde_json::from_str(json)
                .map_err(|e| BackendError::Template(format!("{name}: bad examples: {e}")))?,
            None => Vec::new(),
        };
        if !examples.is_empty() && assistant.is_none() {
            return Err(BackendError::Template(format!("{name}: examples given without an [assistant] section")));
        }
        let template = Self { name: name.to_string(), system, user, assistant, examples };
        for (i, example) in template.examples.iter().enumerate() {
            template.example_turns(example).map_err(|e| {
                BackendError::Template(format!("{name}: example {i} does not bind the template: {e}"))
            })?;
        }
        Ok(template)
    }

    /// Placeholders the caller has to bind.
    pub fn placeholders(&self) -> BTreeSet<String> {
        let mut out = placeholders(&self.system);
        out.extend(placeholders(&self.user));
        out
    }

    fn example_turns(&self, example: &Bindings) -> Result<[Message; 2], BackendError> {
        let assistant = self.assistant.as_deref().unwrap_or_default();
        Ok([
            Message::new(Role::User, fill(&self.user, example)?),
            Message::new(Role::Assistant, fill(assistant, example)?),
        ])
    }

    pub fn render(&self, bindings: &Bindings) -> Result<Vec<Message>, BackendError> {
        let mut messages = vec![Message::new(Role::System, fill(&self.system, bindings)?)];
        for example in &self.examples {
            messages.extend(self.example_turns(example)?);
        }
        messages.push(Message::new(Role::User, fill(&self.user, bindings)?));
        Ok(messages)
    }
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        [$(($name, include_str!(concat!("../../prompts/", $name, ".txt")),
            include_str!(concat!("../../prompts/", $name, ".examples.json")))),*]
    };
}

const BUILTIN: [(&str, &str, &str); 12] = builtin!(
    "identify",
    "prioritize",
    "prioritize_ld",
    "explore",
    "validity",
    "usefulness",
    "novelty",
    "sufficiency",
    "boundary",
    "transform",
    "extract",
    "conclude",
);

#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let mut set = Self::default();
        for (name, text, examples) in BUILTIN {
            let t = PromptTemplate::parse(name, text, Some(examples)).expect("built-in templates are well formed");
            set.insert(t);
        }
        set
    }

    /// Built-in templates overridden by every `<name>.txt` found in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, BackendError> {
        let mut set = Self::builtin();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = std::fs::read_to_string(&path)?;
            let examples_path = dir.join(format!("{name}.examples.json"));
            let examples = examples_path.exists().then(|| std::fs::read_to_string(&examples_path)).transpose()?;
            set.insert(PromptTemplate::parse(&name, &text, examples.as_deref())?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.name.clone(), template);
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, BackendError> {
        self.templates.get(name).ok_or_else(|| BackendError::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render_request(&self, request: &StageRequest, model: &str, max_tokens: u32) -> Result<ChatRequest, BackendError> {
        let messages = self.get(&request.template)?.render(&request.bindings)?;
        ChatRequest::new(model, messages, request.temperature, max_tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::Stage;

    fn bind(pairs: &[(&str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn fill_and_escapes() {
        let b = bind(&[("x", "cat")]);
        assert_eq!(fill("a {x} and {{x}}", &b).unwrap(), "a cat and {x}");
        assert!(matches!(fill("{y}", &b), Err(BackendError::UnboundPlaceholder(n)) if n == "y"));
        assert!(matches!(fill("{x", &b), Err(BackendError::Template(_))));
    }

    #[test]
    fn builtins_cover_every_stage() {
        let set = TemplateSet::builtin();
        for stage in Stage::ALL {
            assert!(set.get(stage.as_str()).is_ok(), "{stage}");
        }
        assert!(set.get("prioritize_ld").is_ok());
        assert!(matches!(set.get("nope"), Err(BackendError::UnknownTemplate(_))));
    }

    #[test]
    fn identification_request_quotes_both_fields() {
        let set = TemplateSet::builtin();
        let req = StageRequest::new("s", Stage::Identify, 0.1)
            .bind("premise", "The bald eagle is kind.")
            .bind("hypothesis", "The cat eats the bald eagle.");
        let chat = set.render_request(&req, "m", 256).unwrap();
        assert_eq!(chat.messages[0].role, Role::System);
        let last = &chat.messages.last().unwrap().content;
        assert!(last.contains("\"Premise\": \"The bald eagle is kind.\""));
        assert!(last.contains("\"Hypothesis\": \"The cat eats the bald eagle.\""));
        // two few-shot examples, each a user/assistant pair
        assert_eq!(chat.messages.len(), 1 + 4 + 1);
        assert_eq!(chat.digest(), set.render_request(&req, "m", 256).unwrap().digest());
    }

    #[test]
    fn missing_binding_fails() {
        let set = TemplateSet::builtin();
        let req = StageRequest::new("s", Stage::Identify, 0.1).bind("premise", "x");
        assert!(matches!(set.render_request(&req, "m", 256), Err(BackendError::UnboundPlaceholder(n)) if n == "hypothesis"));
    }

    #[test]
    fn placeholders_listed() {
        let set = TemplateSet::builtin();
        let names: Vec<String> = set.get("explore").unwrap().placeholders().into_iter().collect();
        assert_eq!(names, vec!["boundary_condition", "hypothesis", "premises"]);
    }

    #[test]
    fn directory_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("validity.txt"), "[system]\nJudge.\n[user]\n{premises} => {proposition}\n").unwrap();
        let set = TemplateSet::from_dir(dir.path()).unwrap();
        let t = set.get("validity").unwrap();
        assert!(t.examples.is_empty());
        let msgs = t.render(&bind(&[("premises", "p"), ("proposition", "q")])).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[1].content, "p => q");
    }

    #[test]
    fn malformed_templates_rejected() {
        assert!(PromptTemplate::parse("t", "[user]\nx", None).is_err());
        assert!(PromptTemplate::parse("t", "junk\n[system]\na\n[user]\nb", None).is_err());
        assert!(PromptTemplate::parse("t", "[system]\na\n[user]\n{x}\n[assistant]\n{y}", Some("[{\"x\": \"1\"}]")).is_err());
    }
}
