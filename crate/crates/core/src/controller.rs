//! The per-case reasoning loop: identify, then select, explore, verify and
//! store until enough new determinate premises exist or the target is
//! decidable, then conclude.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{debug, info_span};

use crate::backends::parse::{parse_answer, parse_judgement, parse_labeled_field, split_sentences};
use crate::backends::{Backend, BackendError, BackendKind, Payload, Stage, StageRequest};
use crate::domain::{
    normalize, Ablation, Answer, Dataset, EngineConfig, Polarity, Premise, PremiseId, ProblemInstance, Target, Truth,
    Verdict,
};
use crate::error::{Error, Result};
use crate::explore::{
    check_boundary, explore, goal_text, is_novel_text, join_statements, verify, ExplorationResult, StageContext,
    VerifyInput,
};
use crate::identify::{identify_all, IdentificationResult, IdentifyContext, IdentifyMode};
use crate::memory::ReasoningMemory;
use crate::prioritize::{
    select_primary, select_primary_random, select_supplements, select_supplements_random, Score,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationKind {
    Explore,
    Transform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplementRecord {
    pub id: PremiseId,
    /// Absent when the supplement was chosen by the backend or at random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u32,
    pub kind: IterationKind,
    pub primary: PremiseId,
    pub supplements: Vec<SupplementRecord>,
    /// Empty when exploration produced nothing.
    pub proposition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposition_id: Option<PremiseId>,
    pub verdict: Verdict,
    pub polarity: Polarity,
    /// Reasoning history visible to the selection step.
    pub history: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficient: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Time spent inside backend calls.
    pub backend_seconds: f64,
    pub wall_seconds: f64,
    pub backend_calls: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTrace {
    pub case_id: String,
    pub dataset: Dataset,
    pub backend: BackendKind,
    pub ablation: BTreeSet<Ablation>,
    pub premises: Vec<Premise>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary_conditions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationResult>,
    pub iterations: Vec<IterationRecord>,
    pub final_answer: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    pub correct: bool,
    pub step_count: u32,
    pub derived_count: usize,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl CaseTrace {
    /// Propositions admitted to memory, in iteration order.
    pub fn derived_premises(&self) -> Vec<&str> {
        self.iterations
            .iter()
            .filter(|r| r.polarity == Polarity::Positive)
            .map(|r| r.proposition.as_str())
            .collect()
    }
}

/// Rebuilds the memory a trace was produced from.
pub fn memory_from_trace(trace: &CaseTrace) -> Result<ReasoningMemory> {
    let identification = trace
        .identification
        .as_ref()
        .ok_or_else(|| Error::InternalInvariantViolation("trace has no identification".into()))?;
    let mut memory = ReasoningMemory::init(identification, !trace.ablation.contains(&Ablation::NoMemory));
    for r in &trace.iterations {
        let mut sources = vec![r.primary.clone()];
        sources.extend(r.supplements.iter().map(|s| s.id.clone()));
        memory.store(ExplorationResult {
            iteration: r.t,
            sources,
            proposition: r.proposition.clone(),
            verdict: r.verdict,
        })?;
    }
    Ok(memory)
}

/// Backend wrapper that accounts time spent in calls.
struct Meter<'a> {
    inner: &'a dyn Backend,
    clocked: bool,
    spent: Mutex<Duration>,
    calls: AtomicU32,
}

impl Backend for Meter<'_> {
    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }

    fn complete(&self, request: &StageRequest) -> std::result::Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if !self.clocked {
            return self.inner.complete(request);
        }
        let start = Instant::now();
        let out = self.inner.complete(request);
        *self.spent.lock().expect("meter lock") += start.elapsed();
        out
    }
}

type Supplements = Vec<(Premise, Option<Score>)>;

struct Selection {
    primary: Premise,
    supplements: Supplements,
    history: String,
}

struct Run<'a> {
    problem: &'a ProblemInstance,
    config: &'a EngineConfig,
    meter: Meter<'a>,
    rng: ChaCha8Rng,
    steps: u32,
    premises: Vec<Premise>,
    boundary: Vec<String>,
    topic: Option<String>,
    identification: Option<IdentificationResult>,
    memory: Option<ReasoningMemory>,
    iterations: Vec<IterationRecord>,
    answer: Answer,
}

fn case_seed(seed: u64, case_id: &str) -> u64 {
    let digest = Sha256::digest(case_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed.wrapping_add(u64::from_le_bytes(bytes))
}

/// Gold option label, mapping truth-word keys onto the options.
pub fn gold_label(target: &Target) -> Option<String> {
    let key = target.answer_key.as_deref()?.trim();
    if let Some(o) = target.options.iter().find(|o| o.label.eq_ignore_ascii_case(key)) {
        return Some(o.label.clone());
    }
    let truth = match key.to_ascii_lowercase().as_str() {
        "true" => Truth::True,
        "false" => Truth::False,
        "unknown" | "uncertain" => Truth::Unknown,
        _ => return Some(key.to_string()),
    };
    target.label_for_truth(truth).map(str::to_string).or_else(|| Some(key.to_string()))
}

fn find_premise<'m>(candidates: &[&'m Premise], mention: &str) -> Option<&'m Premise> {
    let mention = mention.trim().trim_matches(['"', '\'', '`']);
    // drop a trailing "(0.5)" style score
    let mention = match mention.rfind('(') {
        Some(i) if mention.ends_with(')') && mention[i + 1..mention.len() - 1].trim().parse::<f64>().is_ok() => {
            mention[..i].trim()
        }
        _ => mention,
    };
    if let Some(p) = candidates.iter().find(|p| p.id.as_str().eq_ignore_ascii_case(mention)) {
        return Some(p);
    }
    let n = normalize(mention).ok()?;
    candidates.iter().find(|p| p.normalized == n).copied()
}

impl<'a> Run<'a> {
    fn new(problem: &'a ProblemInstance, config: &'a EngineConfig, backend: &'a dyn Backend) -> Self {
        let clocked = backend.kind() == BackendKind::Llm;
        Self {
            problem,
            config,
            meter: Meter { inner: backend, clocked, spent: Mutex::new(Duration::ZERO), calls: AtomicU32::new(0) },
            rng: ChaCha8Rng::seed_from_u64(case_seed(config.seed, &problem.case_id)),
            steps: 0,
            premises: problem.premises.clone(),
            boundary: problem.boundary_conditions.clone(),
            topic: None,
            identification: None,
            memory: None,
            iterations: Vec::new(),
            answer: Answer::Abstain,
        }
    }

    fn ctx(&self) -> StageContext<'_> {
        StageContext { backend: &self.meter, session: &self.problem.case_id, temperature: self.config.temperature_default }
    }

    fn request(&self, stage: Stage) -> StageRequest {
        StageRequest::new(&self.problem.case_id, stage, self.config.temperature_default)
    }

    fn is_ordering_task(&self) -> bool {
        self.problem.dataset == Dataset::LogicalDeduction
    }

    fn delegated(&self) -> bool {
        self.meter.kind() != BackendKind::Symbolic
    }

    fn boundary_text(&self) -> String {
        let b = join_statements(&self.boundary);
        if b.is_empty() { "None".into() } else { b }
    }

    fn execute(&mut self) -> Result<()> {
        self.config.validate()?;
        self.problem.validate()?;
        if self.premises.is_empty() && self.is_ordering_task() {
            self.extract()?;
        }
        if self.premises.is_empty() {
            return Err(Error::Config(format!("case {} has no premises", self.problem.case_id)));
        }
        self.identify()?;
        let ident = self.identification.as_ref().expect("identified");
        let mut memory = ReasoningMemory::init(ident, !self.config.has(Ablation::NoMemory));
        let result = self.reason(&mut memory);
        self.memory = Some(memory);
        result?;
        self.conclude()
    }

    fn extract(&mut self) -> Result<()> {
        self.steps += 1;
        let request = self
            .request(Stage::Extract)
            .bind("context", self.problem.context.as_str())
            .payload(Payload { statements: vec![self.problem.context.clone()], ..Payload::default() });
        let reply = self.meter.complete(&request)?;
        let premise = parse_labeled_field(&reply, "premise")?;
        let boundary = parse_labeled_field(&reply, "boundary condition")?;
        self.topic = parse_labeled_field(&reply, "topic").ok();
        self.premises = split_sentences(&premise)
            .iter()
            .enumerate()
            .map(|(i, s)| Premise::input(i, s))
            .collect::<Result<_>>()?;
        self.boundary = split_sentences(&boundary);
        Ok(())
    }

    fn identify(&mut self) -> Result<()> {
        if self.config.has(Ablation::NoIdentify) {
            self.identification = Some(IdentificationResult::undifferentiated(&self.premises));
            return Ok(());
        }
        self.steps += 1;
        let mode = if self.delegated() { IdentifyMode::BackendDelegated } else { IdentifyMode::RuleBased };
        let ctx = IdentifyContext {
            backend: &self.meter,
            session: &self.problem.case_id,
            temperature: self.config.temperature_default,
        };
        let mut target = self.problem.target.clone();
        target.hypothesis = goal_text(&self.problem.target);
        match identify_all(&self.premises, &target, mode, &ctx) {
            Ok(r) => {
                self.identification = Some(r);
                Ok(())
            }
            Err(failure) => Err(Error::Backend(failure.source)),
        }
    }

    fn reason(&mut self, memory: &mut ReasoningMemory) -> Result<()> {
        let n = self.config.n_required_determinate;
        let max = self.config.max_iterations;
        while memory.derived_count() < n && (memory.iteration() as usize) < max {
            let selection = self.select(memory)?;
            if self.is_ordering_task() {
                self.transform(memory, &selection)?;
                if memory.derived_count() >= n || memory.iteration() as usize >= max {
                    break;
                }
            }
            if self.explore_once(memory, selection)? {
                break;
            }
        }
        Ok(())
    }

    fn select(&mut self, memory: &ReasoningMemory) -> Result<Selection> {
        self.steps += 1;
        let determinate = memory.determinate_view();
        let pool: Vec<&Premise> = memory.premises().collect();
        let history = if memory.extract_history().is_empty() { String::new() } else { memory.history_text(false) };
        let goal = goal_text(&self.problem.target);
        if self.config.has(Ablation::NoPriority) {
            let primary = select_primary_random(&determinate, &mut self.rng)?.clone();
            let supplements = select_supplements_random(&primary, &pool, &mut self.rng)
                .into_iter()
                .map(|p| (p.clone(), None))
                .collect();
            return Ok(Selection { primary, supplements, history });
        }
        let failed = memory.failed_primaries();
        let deterministic = |theta: f64| -> Result<(Premise, Supplements)> {
            let (primary, _) = select_primary(&determinate, &goal, &failed)?;
            let supplements = select_supplements(primary, &pool, theta)
                .into_iter()
                .map(|(p, s)| (p.clone(), Some(s)))
                .collect();
            Ok((primary.clone(), supplements))
        };
        if !self.delegated() {
            let (primary, supplements) = deterministic(self.config.theta)?;
            return Ok(Selection { primary, supplements, history });
        }

        let indeterminate: Vec<String> = memory.indeterminate_view().iter().map(|p| p.text.clone()).collect();
        let d_texts: Vec<&str> = determinate.iter().map(|p| p.text.as_str()).collect();
        let mut request = if self.is_ordering_task() {
            self.request(Stage::Prioritize)
                .template("prioritize_ld")
                .bind("topic", self.topic.clone().unwrap_or_else(|| "None".into()))
                .bind("boundary_condition", self.boundary_text())
                .bind("last_false_history", memory.history_text(true))
        } else {
            self.request(Stage::Prioritize)
                .bind("hypothesis", goal.as_str())
                .bind("last_history", memory.history_text(false))
        };
        request = request
            .bind("determinate_premises", join_statements(&d_texts))
            .bind("indeterminate_premises", if indeterminate.is_empty() { "None".into() } else { join_statements(&indeterminate) })
            .payload(Payload {
                statements: d_texts.iter().map(|s| s.to_string()).collect(),
                hypothesis: self.problem.target.hypothesis.clone(),
                known: memory.texts(),
                ..Payload::default()
            });
        let reply = self.meter.complete(&request)?;
        let results: Vec<String> = parse_labeled_field(&reply, "results").map(|r| split_sentences(&r)).unwrap_or_default();
        let named = parse_labeled_field(&reply, "most relevant premise")
            .ok()
            .and_then(|m| find_premise(&determinate, &m))
            .or_else(|| results.iter().find_map(|r| find_premise(&determinate, r)));
        let Some(primary) = named.cloned() else {
            debug!("prioritization reply named no known premise; using the scorer");
            let (primary, supplements) = deterministic(self.config.theta)?;
            return Ok(Selection { primary, supplements, history });
        };
        let mut seen = BTreeSet::from([primary.id.clone()]);
        let supplements: Vec<(Premise, Option<Score>)> = results
            .iter()
            .filter_map(|r| find_premise(&pool, r))
            .filter(|p| seen.insert(p.id.clone()))
            .map(|p| (p.clone(), None))
            .collect();
        Ok(Selection { primary, supplements, history })
    }

    fn transform(&mut self, memory: &mut ReasoningMemory, selection: &Selection) -> Result<()> {
        self.steps += 1;
        let known = memory.texts();
        let request = self
            .request(Stage::Transform)
            .bind("premises", join_statements(&known))
            .bind("question", self.problem.target.question_with_options())
            .bind("premise", selection.primary.text.as_str())
            .bind("boundary_condition", self.boundary_text())
            .payload(Payload {
                statements: vec![selection.primary.text.clone()],
                known: known.clone(),
                boundary: self.boundary.clone(),
                ..Payload::default()
            });
        let reply = self.meter.complete(&request)?;
        let mut notes = Vec::new();
        let value = match parse_labeled_field(&reply, "new premise") {
            Ok(v) => v,
            Err(_) => {
                debug!("transformation reply has no new premise field");
                return Ok(());
            }
        };
        let trimmed = value.trim().trim_end_matches('.').trim();
        if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("none") {
            return Ok(());
        }
        let t = memory.iteration() + 1;
        let (verdict, boundary_ok) = if is_novel_text(&value, &known) {
            self.steps += 1;
            let ok = check_boundary(&known, &value, &self.boundary, &self.ctx(), &mut notes)?;
            (Verdict::new(ok, true, true), Some(ok))
        } else {
            notes.push("duplicate of a premise in memory".into());
            (Verdict::new(true, true, false), None)
        };
        let path = memory.store(ExplorationResult {
            iteration: t,
            sources: vec![selection.primary.id.clone()],
            proposition: value.clone(),
            verdict,
        })?;
        self.iterations.push(IterationRecord {
            t,
            kind: IterationKind::Transform,
            primary: selection.primary.id.clone(),
            supplements: Vec::new(),
            proposition: value,
            proposition_id: path.proposition_id.clone(),
            verdict,
            polarity: path.polarity,
            history: selection.history.clone(),
            boundary_ok,
            sufficient: None,
            notes,
        });
        Ok(())
    }

    /// One exploration attempt; returns true when the target became decidable.
    fn explore_once(&mut self, memory: &mut ReasoningMemory, selection: Selection) -> Result<bool> {
        self.steps += 1;
        let t = memory.iteration() + 1;
        let known = memory.texts();
        let supplements: Vec<Premise> = selection.supplements.iter().map(|(p, _)| p.clone()).collect();
        let explored = explore(&selection.primary, &supplements, &self.problem.target, &self.boundary, &known, &self.ctx());
        let mut notes = Vec::new();
        let (proposition, verdict, boundary_ok) = match explored {
            Ok(proposition) => {
                self.steps += 1;
                let sources: Vec<String> =
                    std::iter::once(&selection.primary).chain(&supplements).map(|p| p.text.clone()).collect();
                let rules: Vec<String> = memory.indeterminate_view().iter().map(|p| p.text.clone()).collect();
                let boundary = self.is_ordering_task().then_some(self.boundary.as_slice());
                let input = VerifyInput { sources: &sources, target: &self.problem.target, known: &known, rules: &rules, boundary };
                let v = verify(&proposition, &input, &self.ctx())?;
                if v.boundary_ok.is_some() {
                    self.steps += 1;
                }
                notes.extend(v.notes);
                (proposition, v.verdict, v.boundary_ok)
            }
            Err(Error::ExplorationFailed(reason)) => {
                notes.push(reason);
                (String::new(), Verdict::rejected(), None)
            }
            Err(e) => return Err(e),
        };
        let mut sources = vec![selection.primary.id.clone()];
        sources.extend(supplements.iter().map(|p| p.id.clone()));
        let path = memory.store(ExplorationResult { iteration: t, sources, proposition: proposition.clone(), verdict })?;
        let (polarity, proposition_id) = (path.polarity, path.proposition_id.clone());
        let sufficient = if verdict.overall() { Some(self.sufficient(memory)?) } else { None };
        self.iterations.push(IterationRecord {
            t,
            kind: IterationKind::Explore,
            primary: selection.primary.id.clone(),
            supplements: selection
                .supplements
                .into_iter()
                .map(|(p, score)| SupplementRecord { id: p.id, score })
                .collect(),
            proposition,
            proposition_id,
            verdict,
            polarity,
            history: selection.history,
            boundary_ok,
            sufficient,
            notes,
        });
        Ok(sufficient == Some(true))
    }

    fn sufficient(&mut self, memory: &ReasoningMemory) -> Result<bool> {
        self.steps += 1;
        let statements: Vec<String> = memory
            .determinate_view()
            .into_iter()
            .chain(memory.indeterminate_view())
            .map(|p| p.text.clone())
            .collect();
        let request = self
            .request(Stage::Sufficiency)
            .bind("premises", join_statements(&statements))
            .bind("hypothesis", goal_text(&self.problem.target))
            .payload(Payload {
                statements,
                hypothesis: self.problem.target.hypothesis.clone(),
                options: self.problem.target.options.clone(),
                ..Payload::default()
            });
        let reply = self.meter.complete(&request)?;
        Ok(parse_judgement(&reply).unwrap_or(false))
    }

    fn conclude(&mut self) -> Result<()> {
        self.steps += 1;
        let memory = self.memory.as_ref().expect("memory initialized before conclusion");
        let target = &self.problem.target;
        let inputs: Vec<&str> = self.premises.iter().map(|p| p.text.as_str()).collect();
        let derived: Vec<&str> = memory.premises().filter(|p| p.is_derived()).map(|p| p.text.as_str()).collect();
        let context = if self.problem.context.trim().is_empty() { join_statements(&inputs) } else { self.problem.context.clone() };
        let history = memory.history_text(false);
        let request = StageRequest::new(&self.problem.case_id, Stage::Conclude, self.config.temperature_conclude)
            .bind("context", context)
            .bind("question", target.question_with_options())
            .bind("premises", join_statements(&inputs))
            .bind("boundary_condition", self.boundary_text())
            .bind("propositions", if derived.is_empty() { "None".into() } else { join_statements(&derived) })
            .bind("history", history)
            .payload(Payload {
                statements: memory.texts(),
                hypothesis: target.hypothesis.clone(),
                options: target.options.clone(),
                boundary: self.boundary.clone(),
                ..Payload::default()
            });
        let reply = self.meter.complete(&request)?;
        self.answer = parse_answer(&reply, target);
        Ok(())
    }

    fn finish(self, result: Result<()>, started: Instant) -> (CaseTrace, Option<ReasoningMemory>) {
        let mut errors = Vec::new();
        let mut answer = self.answer;
        if let Err(e) = result {
            errors.push(e.to_string());
            answer = Answer::Abstain;
        }
        let gold = gold_label(&self.problem.target);
        let correct = gold.as_deref().is_some_and(|g| answer.matches(g));
        let clocked = self.meter.clocked;
        let timings = Timings {
            backend_seconds: if clocked { self.meter.spent.lock().expect("meter lock").as_secs_f64() } else { 0.0 },
            wall_seconds: if clocked { started.elapsed().as_secs_f64() } else { 0.0 },
            backend_calls: self.meter.calls.load(Ordering::Relaxed),
        };
        let trace = CaseTrace {
            case_id: self.problem.case_id.clone(),
            dataset: self.problem.dataset,
            backend: self.meter.kind(),
            ablation: self.config.ablation.clone(),
            premises: self.premises,
            boundary_conditions: self.boundary,
            topic: self.topic,
            identification: self.identification,
            iterations: self.iterations,
            final_answer: answer,
            gold,
            correct,
            step_count: self.steps,
            derived_count: self.memory.as_ref().map_or(0, ReasoningMemory::derived_count),
            timings,
            errors,
        };
        (trace, self.memory)
    }
}

/// Runs one case; backend failures end the case with an abstention.
pub fn run_case(problem: &ProblemInstance, config: &EngineConfig, backend: &dyn Backend) -> CaseTrace {
    run_case_with_memory(problem, config, backend).0
}

/// Like `run_case`, also returning the final reasoning memory when one was built.
pub fn run_case_with_memory(
    problem: &ProblemInstance,
    config: &EngineConfig,
    backend: &dyn Backend,
) -> (CaseTrace, Option<ReasoningMemory>) {
    let span = info_span!("case", id = %problem.case_id);
    let _guard = span.enter();
    let started = Instant::now();
    let mut run = Run::new(problem, config, backend);
    let result = run.execute();
    run.finish(result, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Fixture, ReplayBackend, SymbolicBackend};
    use crate::domain::AnswerOption;

    fn problem(premises: &[&str], hypothesis: &str, gold: &str) -> ProblemInstance {
        ProblemInstance {
            case_id: "c1".into(),
            dataset: Dataset::ProofWriter,
            context: String::new(),
            premises: premises.iter().enumerate().map(|(i, t)| Premise::input(i, t).unwrap()).collect(),
            target: Target {
                hypothesis: hypothesis.into(),
                question: format!("Is the following true, false or unknown? {hypothesis}"),
                options: vec![
                    AnswerOption::new("A", "True"),
                    AnswerOption::new("B", "False"),
                    AnswerOption::new("C", "Unknown"),
                ],
                answer_key: Some(gold.into()),
            },
            boundary_conditions: Vec::new(),
        }
    }

    fn small() -> ProblemInstance {
        problem(
            &[
                "The cat is rough.",
                "If something is rough then it is big.",
                "If something is big then it is kind.",
                "If the cat is kind then the cat eats the dog.",
            ],
            "The cat eats the dog.",
            "A",
        )
    }

    #[test]
    fn symbolic_run_answers_and_counts_steps() {
        let trace = run_case(&small(), &EngineConfig::default(), &SymbolicBackend::default());
        assert!(trace.errors.is_empty(), "{:?}", trace.errors);
        assert_eq!(trace.final_answer, Answer::Label("A".into()));
        assert!(trace.correct);
        assert_eq!(trace.derived_premises(), vec!["The cat is big.", "The cat is kind."]);
        // p1 is picked again in round 2 and yields nothing new, so round 3 moves to x1.
        assert_eq!(trace.iterations[1].polarity, Polarity::Negative);
        assert_eq!(trace.iterations[2].primary.as_str(), "x1");
        // identify, 2 x (select, explore, verify, sufficiency), select and explore, conclude
        assert_eq!(trace.step_count, 1 + 2 * 4 + 2 + 1);
        assert_eq!(trace.iterations[2].sufficient, Some(true));
    }

    #[test]
    fn zero_iterations_concludes_directly() {
        let config = EngineConfig { max_iterations: 0, ..EngineConfig::default() };
        let trace = run_case(&small(), &config, &SymbolicBackend::default());
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.step_count, 2);
        assert_eq!(trace.final_answer, Answer::Label("A".into()));
    }

    #[test]
    fn backend_failure_abstains() {
        let backend = ReplayBackend::new(&Fixture::default());
        let trace = run_case(&small(), &EngineConfig::default(), &backend);
        assert_eq!(trace.final_answer, Answer::Abstain);
        assert!(!trace.correct);
        assert_eq!(trace.errors.len(), 1);
        assert!(trace.errors[0].contains("exhausted"));
    }

    #[test]
    fn memory_round_trips_through_trace() {
        for ablation in [None, Some(Ablation::NoMemory), Some(Ablation::NoPriority), Some(Ablation::NoIdentify)] {
            let config = EngineConfig { ablation: ablation.into_iter().collect(), ..EngineConfig::default() };
            let (trace, memory) = run_case_with_memory(&small(), &config, &SymbolicBackend::default());
            let rebuilt = memory_from_trace(&trace).unwrap();
            assert_eq!(Some(rebuilt), memory, "{ablation:?}");
            let json = serde_json::to_string(&trace).unwrap();
            let back: CaseTrace = serde_json::from_str(&json).unwrap();
            assert_eq!(back, trace);
        }
    }

    #[test]
    fn no_memory_traces_have_empty_history() {
        let p = problem(
            &["The cat is rough.", "The dog is big.", "If the dog is kind then the cat is big."],
            "The cat is big.",
            "C",
        );
        let config = EngineConfig {
            ablation: [Ablation::NoMemory].into(),
            max_iterations: 4,
            ..EngineConfig::default()
        };
        let trace = run_case(&p, &config, &SymbolicBackend::default());
        assert_eq!(trace.iterations.len(), 4);
        assert!(trace.iterations.iter().all(|r| r.history.is_empty()));
        assert_eq!(trace.final_answer, Answer::Label("C".into()));
    }

    #[test]
    fn random_selection_is_seeded() {
        let config = EngineConfig { ablation: [Ablation::NoPriority].into(), seed: 7, ..EngineConfig::default() };
        let a = run_case(&small(), &config, &SymbolicBackend::default());
        let b = run_case(&small(), &config, &SymbolicBackend::default());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.iterations.iter().all(|r| r.supplements.iter().all(|s| s.score.is_none())));
    }

    #[test]
    fn gold_labels_from_truth_words() {
        let mut t = small().target;
        t.answer_key = Some("false".into());
        assert_eq!(gold_label(&t).as_deref(), Some("B"));
        t.answer_key = Some("c".into());
        assert_eq!(gold_label(&t).as_deref(), Some("C"));
    }
}
