//! Native dataset records to `ProblemInstance`.
//!
//! Accepts a JSON array or JSON lines. Each record is either already in
//! canonical form or a flat object whose fields are looked up under the
//! usual names of the public releases.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::backends::split_sentences;
use crate::domain::{AnswerOption, Dataset, Premise, ProblemInstance, Target, Truth};
use crate::error::{Error, Result};

const ID: &[&str] = &["case_id", "id", "example_id", "idx", "uid"];
const CONTEXT: &[&str] = &["context", "theory", "passage", "story", "text", "input", "inputs"];
const PREMISES: &[&str] = &["premises", "premise"];
const QUESTION: &[&str] = &["question", "query"];
const HYPOTHESIS: &[&str] = &["hypothesis", "conclusion", "statement"];
const OPTIONS: &[&str] = &["options", "choices", "multiple_choice_targets"];
const ANSWER: &[&str] = &["answer", "label", "gold", "answer_key", "correct_answer", "target"];
const BOUNDARY: &[&str] = &["boundary_conditions", "boundary_condition", "boundary"];

const LD_QUESTION: &str = "Which of the following is true?";

fn schema(index: usize, message: impl Into<String>) -> Error {
    Error::Schema { index, message: message.into() }
}

fn lookup<'v>(record: &'v Map<String, Value>, names: &[&'static str]) -> Option<(&'static str, &'v Value)> {
    names.iter().find_map(|n| record.get(*n).filter(|v| !v.is_null()).map(|v| (*n, v)))
}

fn text_of(index: usize, field: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(if *b { "True".into() } else { "False".into() }),
        Value::Array(items) => {
            let parts: Result<Vec<String>> = items.iter().map(|i| text_of(index, field, i)).collect();
            Ok(parts?.join(" "))
        }
        _ => Err(schema(index, format!("field `{field}` must be text"))),
    }
}

fn statements_of(index: usize, field: &str, v: &Value) -> Result<Vec<String>> {
    match v {
        Value::Array(items) => items
            .iter()
            .map(|i| text_of(index, field, i))
            .filter(|s| s.as_ref().map_or(true, |s| !s.is_empty()))
            .collect(),
        Value::String(s) => Ok(s.lines().flat_map(split_sentences).collect()),
        _ => Err(schema(index, format!("field `{field}` must be a list of statements or text"))),
    }
}

fn label(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

/// Splits "A) text", "(A) text", "A. text" and "A: text".
fn split_labeled(s: &str) -> Option<(String, String)> {
    let s = s.trim();
    let rest = s.strip_prefix('(').unwrap_or(s);
    let mut chars = rest.chars();
    let l = chars.next()?;
    let after = chars.as_str();
    if !l.is_ascii_uppercase() {
        return None;
    }
    let text = after.strip_prefix([')', '.', ':'])?;
    Some((l.to_string(), text.trim().to_string()))
}

fn options_of(index: usize, v: &Value) -> Result<Vec<AnswerOption>> {
    let bad = || schema(index, "field `options` must be a list or a label map");
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| match item {
                Value::String(s) => Ok(match split_labeled(s) {
                    Some((l, t)) => AnswerOption::new(&l, &t),
                    None => AnswerOption::new(&label(i), s.trim()),
                }),
                Value::Object(o) => {
                    let text = o.get("text").and_then(Value::as_str).ok_or_else(bad)?;
                    let l = o.get("label").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| label(i));
                    Ok(AnswerOption::new(&l, text))
                }
                _ => Err(bad()),
            })
            .collect(),
        Value::Object(map) => map
            .iter()
            .map(|(k, t)| Ok(AnswerOption::new(k, t.as_str().ok_or_else(bad)?)))
            .collect(),
        _ => Err(bad()),
    }
}

/// Answer key as an option label, mapping truth words, indices and option texts.
fn answer_label(index: usize, v: &Value, options: &[AnswerOption]) -> Result<String> {
    let target = Target { hypothesis: String::new(), question: String::new(), options: options.to_vec(), answer_key: None };
    let truth = |t| target.label_for_truth(t).map(str::to_string);
    let found = match v {
        Value::Bool(true) => truth(Truth::True),
        Value::Bool(false) => truth(Truth::False),
        Value::Number(n) => n.as_u64().and_then(|i| options.get(i as usize)).map(|o| o.label.clone()),
        Value::String(s) => {
            let s = s.trim();
            let key = s.trim_start_matches('(').trim_end_matches([')', '.']);
            if let Some(o) = options.iter().find(|o| o.label.eq_ignore_ascii_case(key)) {
                Some(o.label.clone())
            } else {
                match key.to_ascii_lowercase().as_str() {
                    "true" | "yes" => truth(Truth::True),
                    "false" | "no" => truth(Truth::False),
                    "unknown" | "uncertain" => truth(Truth::Unknown),
                    _ => options.iter().find(|o| o.text.trim_end_matches('.') == s.trim_end_matches('.')).map(|o| o.label.clone()),
                }
            }
        }
        _ => None,
    };
    found.ok_or_else(|| schema(index, format!("field `answer` value {v} matches no option")))
}

fn truth_valued(dataset: Dataset) -> bool {
    matches!(dataset, Dataset::ProofWriter | Dataset::Folio | Dataset::PrOntoQA)
}

/// Statement after the last question mark, as in "...true, false, or unknown? The cat is big."
fn hypothesis_from_question(question: &str) -> Option<String> {
    let q = question.trim();
    match q.rfind('?') {
        Some(i) if !q[i + 1..].trim().is_empty() => Some(q[i + 1..].trim().to_string()),
        Some(_) => None,
        None => Some(q.to_string()),
    }
}

fn premises_from(index: usize, statements: &[String]) -> Result<Vec<Premise>> {
    statements
        .iter()
        .enumerate()
        .map(|(i, s)| Premise::input(i, s).map_err(|e| schema(index, format!("premise {}: {e}", i + 1))))
        .collect()
}

fn convert(dataset: Dataset, index: usize, record: &Map<String, Value>) -> Result<ProblemInstance> {
    let case_id = match lookup(record, ID) {
        Some((f, v)) => text_of(index, f, v)?,
        None => format!("{}-{index:04}", dataset.as_str().to_ascii_lowercase()),
    };
    let context = match lookup(record, CONTEXT) {
        Some((f, v)) => text_of(index, f, v)?,
        None => String::new(),
    };

    let (options, answer) = if let Some(Value::Object(scores)) = record.get("target_scores") {
        // BIG-bench style: option text -> 0/1
        let options: Vec<AnswerOption> =
            scores.keys().enumerate().map(|(i, k)| AnswerOption::new(&label(i), k)).collect();
        let gold = scores.iter().position(|(_, s)| s.as_f64() == Some(1.0)).map(label);
        (options, gold)
    } else {
        let options = match lookup(record, OPTIONS) {
            Some((_, v)) => options_of(index, v)?,
            None if truth_valued(dataset) => Target::true_false_unknown(),
            None => return Err(schema(index, "missing field `options`")),
        };
        let answer = match lookup(record, ANSWER) {
            Some((_, v)) => Some(answer_label(index, v, &options)?),
            None => None,
        };
        (options, answer)
    };
    if options.is_empty() {
        return Err(schema(index, "field `options` is empty"));
    }

    let question = match lookup(record, QUESTION) {
        Some((f, v)) => text_of(index, f, v)?,
        None if dataset == Dataset::LogicalDeduction => LD_QUESTION.to_string(),
        None => String::new(),
    };
    let hypothesis = match lookup(record, HYPOTHESIS) {
        Some((f, v)) => text_of(index, f, v)?,
        None if truth_valued(dataset) => hypothesis_from_question(&question)
            .ok_or_else(|| schema(index, "missing field `hypothesis` and the question states none"))?,
        None => String::new(),
    };
    if question.is_empty() && hypothesis.is_empty() {
        return Err(schema(index, "missing field `question`"));
    }

    let statements = match lookup(record, PREMISES) {
        Some((f, v)) => statements_of(index, f, v)?,
        None if dataset == Dataset::LogicalDeduction => Vec::new(),
        None => split_sentences(&context),
    };
    if statements.is_empty() && dataset != Dataset::LogicalDeduction {
        return Err(schema(index, "missing field `premises` and `context` is empty"));
    }
    let boundary_conditions = match lookup(record, BOUNDARY) {
        Some((f, v)) if dataset == Dataset::LogicalDeduction => statements_of(index, f, v)?,
        Some(_) => return Err(schema(index, "field `boundary_conditions` only applies to LogicalDeduction")),
        None => Vec::new(),
    };

    let problem = ProblemInstance {
        case_id,
        dataset,
        context,
        premises: premises_from(index, &statements)?,
        target: Target { hypothesis, question, options, answer_key: answer },
        boundary_conditions,
    };
    problem.validate().map_err(|e| schema(index, e.to_string()))?;
    Ok(problem)
}

/// ProofWriter meta records carry a theory and several questions.
fn expand_proofwriter(index: usize, record: &Map<String, Value>) -> Result<Vec<Map<String, Value>>> {
    let id = record.get("id").and_then(Value::as_str).unwrap_or("pw");
    let mut statements: Vec<Value> = Vec::new();
    for key in ["triples", "rules"] {
        if let Some(Value::Object(items)) = record.get(key) {
            for item in items.values() {
                let text = item
                    .get("text")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(index, format!("field `{key}` entries need `text`")))?;
                statements.push(Value::String(text.to_string()));
            }
        }
    }
    let Some(Value::Object(questions)) = record.get("questions") else {
        return Err(schema(index, "field `questions` must be an object"));
    };
    questions
        .iter()
        .map(|(qid, q)| {
            let q = q.as_object().ok_or_else(|| schema(index, format!("question {qid} must be an object")))?;
            let mut flat = Map::new();
            flat.insert("id".into(), Value::String(format!("{id}-{qid}")));
            if let Some(theory) = record.get("theory") {
                flat.insert("context".into(), theory.clone());
            }
            flat.insert("premises".into(), Value::Array(statements.clone()));
            for field in ["question", "answer"] {
                let v = q.get(field).ok_or_else(|| schema(index, format!("question {qid} is missing `{field}`")))?;
                flat.insert(field.into(), v.clone());
            }
            flat.insert("hypothesis".into(), q["question"].clone());
            Ok(flat)
        })
        .collect()
}

fn records(text: &str) -> Result<Vec<Value>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| schema(i, format!("invalid JSON: {e}"))))
        .collect()
}

fn canonical(index: usize, value: Value) -> Result<ProblemInstance> {
    let problem: ProblemInstance = serde_json::from_value(value).map_err(|e| schema(index, e.to_string()))?;
    problem.validate().map_err(|e| schema(index, e.to_string()))?;
    Ok(problem)
}

fn is_canonical(value: &Value) -> bool {
    value.get("target").is_some_and(Value::is_object)
}

pub fn parse_dataset(dataset: Dataset, text: &str) -> Result<Vec<ProblemInstance>> {
    let mut out = Vec::new();
    for (index, value) in records(text)?.into_iter().enumerate() {
        if is_canonical(&value) {
            out.push(canonical(index, value)?);
            continue;
        }
        let Value::Object(record) = value else {
            return Err(schema(index, "record must be an object"));
        };
        if record.contains_key("questions") && record.contains_key("triples") {
            for flat in expand_proofwriter(index, &record)? {
                out.push(convert(dataset, index, &flat)?);
            }
        } else {
            out.push(convert(dataset, index, &record)?);
        }
    }
    Ok(out)
}

/// A single record naming its own dataset, as stored in replay fixtures.
pub fn parse_record(value: &Value) -> Result<ProblemInstance> {
    if is_canonical(value) {
        return canonical(0, value.clone());
    }
    let Value::Object(record) = value else {
        return Err(schema(0, "record must be an object"));
    };
    let dataset: Dataset = record
        .get("dataset")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(0, "missing field `dataset`"))?
        .parse()?;
    convert(dataset, 0, record)
}

pub fn load_dataset(dataset: Dataset, path: &Path) -> Result<Vec<ProblemInstance>> {
    parse_dataset(dataset, &fs::read_to_string(path)?)
}
