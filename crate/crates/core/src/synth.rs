//! Random rule-base theories in ProofWriter style, with gold labels from a
//! brute-force closure that shares no code with the oracle.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{Dataset, Premise, ProblemInstance, Target, Truth};
use crate::error::Result;
use crate::oracle::{parse_statement, query, Clause, KnowledgeBase};

const ENTITIES: [&str; 8] = ["cat", "dog", "lion", "mouse", "tiger", "bear", "rabbit", "squirrel"];
const ATTRIBUTES: [&str; 10] = ["big", "kind", "red", "rough", "young", "cold", "nice", "round", "green", "blue"];
const RELATIONS: [(&str, &str); 6] =
    [("chase", "chases"), ("see", "sees"), ("like", "likes"), ("eat", "eats"), ("visit", "visits"), ("need", "needs")];

/// Upper bound on propagation rounds a generated theory may need.
pub const MAX_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pred {
    Attr(usize),
    /// Relation index and object entity.
    Rel(usize, usize),
}

/// A ground literal: entity, predicate, polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Lit {
    pub entity: usize,
    pub pred: Pred,
    pub positive: bool,
}

impl Lit {
    fn flip(self) -> Lit {
        Lit { positive: !self.positive, ..self }
    }
}

/// A literal whose subject is either the rule variable or a fixed entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub subject: Option<usize>,
    pub pred: Pred,
    pub positive: bool,
}

impl Pattern {
    fn bind(self, x: usize) -> Lit {
        Lit { entity: self.subject.unwrap_or(x), pred: self.pred, positive: self.positive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthRule {
    pub body: Vec<Pattern>,
    pub head: Pattern,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theory {
    pub entities: Vec<usize>,
    pub attributes: Vec<usize>,
    pub relations: Vec<usize>,
    pub facts: Vec<Lit>,
    pub rules: Vec<SynthRule>,
    /// `entity is either a or b`, over two attributes.
    pub disjunction: Option<(usize, usize, usize)>,
}

fn entity_name(e: usize) -> String {
    format!("the {}", ENTITIES[e])
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn predicate_text(pred: Pred, positive: bool) -> String {
    match (pred, positive) {
        (Pred::Attr(a), true) => format!("is {}", ATTRIBUTES[a]),
        (Pred::Attr(a), false) => format!("is not {}", ATTRIBUTES[a]),
        (Pred::Rel(r, o), true) => format!("{} {}", RELATIONS[r].1, entity_name(o)),
        (Pred::Rel(r, o), false) => format!("does not {} {}", RELATIONS[r].0, entity_name(o)),
    }
}

pub fn lit_sentence(l: Lit) -> String {
    capitalize(&format!("{} {}.", entity_name(l.entity), predicate_text(l.pred, l.positive)))
}

fn pattern_text(p: Pattern, first: bool) -> String {
    let subject = match p.subject {
        Some(e) => entity_name(e),
        None if first => "something".into(),
        None => "it".into(),
    };
    format!("{subject} {}", predicate_text(p.pred, p.positive))
}

impl SynthRule {
    pub fn sentence(&self) -> String {
        let body: Vec<String> =
            self.body.iter().enumerate().map(|(i, p)| pattern_text(*p, i == 0 || self.body[..i].iter().all(|q| q.subject.is_some()))).collect();
        let mentions_var = self.body.iter().any(|p| p.subject.is_none());
        let head = pattern_text(self.head, !mentions_var);
        format!("If {} then {head}.", body.join(" and "))
    }

    fn is_ground(&self) -> bool {
        self.body.iter().chain([&self.head]).all(|p| p.subject.is_some())
    }
}

impl Theory {
    pub fn statements(&self) -> Vec<String> {
        let mut out: Vec<String> = self.facts.iter().map(|l| lit_sentence(*l)).collect();
        out.extend(self.rules.iter().map(SynthRule::sentence));
        if let Some((e, a, b)) = self.disjunction {
            out.push(capitalize(&format!("{} is either {} or {}.", entity_name(e), ATTRIBUTES[a], ATTRIBUTES[b])));
        }
        out
    }

    /// Every literal the theory can talk about, positive polarity.
    pub fn vocabulary(&self) -> Vec<Lit> {
        let mut preds: Vec<Pred> = self.attributes.iter().map(|a| Pred::Attr(*a)).collect();
        for r in &self.relations {
            for o in &self.entities {
                preds.push(Pred::Rel(*r, *o));
            }
        }
        let mut out = Vec::new();
        for e in &self.entities {
            for p in &preds {
                if !matches!(p, Pred::Rel(_, o) if o == e) {
                    out.push(Lit { entity: *e, pred: *p, positive: true });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Inconsistent,
    TooDeep(usize),
}

/// Jacobi unit propagation: each round applies modus ponens, modus tollens
/// and disjunctive syllogism to the facts known at its start.
pub fn closure(theory: &Theory) -> std::result::Result<(BTreeSet<Lit>, usize), Rejection> {
    let mut known: BTreeSet<Lit> = BTreeSet::new();
    for f in &theory.facts {
        if known.contains(&f.flip()) {
            return Err(Rejection::Inconsistent);
        }
        known.insert(*f);
    }
    let mut ground: Vec<(Vec<Lit>, Lit)> = Vec::new();
    for rule in &theory.rules {
        let bindings: Vec<usize> = if rule.is_ground() { vec![0] } else { theory.entities.clone() };
        for x in bindings {
            ground.push((rule.body.iter().map(|p| p.bind(x)).collect(), rule.head.bind(x)));
        }
    }
    let mut rounds = 0;
    loop {
        let mut fresh = BTreeSet::new();
        for (body, head) in &ground {
            if body.iter().all(|l| known.contains(l)) {
                fresh.insert(*head);
            }
            if known.contains(&head.flip()) {
                for k in 0..body.len() {
                    if body.iter().enumerate().all(|(i, l)| i == k || known.contains(l)) {
                        fresh.insert(body[k].flip());
                    }
                }
            }
        }
        if let Some((e, a, b)) = theory.disjunction {
            let la = Lit { entity: e, pred: Pred::Attr(a), positive: true };
            let lb = Lit { entity: e, pred: Pred::Attr(b), positive: true };
            if known.contains(&la.flip()) {
                fresh.insert(lb);
            }
            if known.contains(&lb.flip()) {
                fresh.insert(la);
            }
        }
        fresh.retain(|l| !known.contains(l));
        if fresh.is_empty() {
            return Ok((known, rounds));
        }
        rounds += 1;
        if fresh.iter().any(|l| known.contains(&l.flip()) || fresh.contains(&l.flip())) {
            return Err(Rejection::Inconsistent);
        }
        if rounds > MAX_ROUNDS {
            return Err(Rejection::TooDeep(rounds));
        }
        known.extend(fresh);
    }
}

pub fn truth_in(closure: &BTreeSet<Lit>, l: Lit) -> Truth {
    if closure.contains(&l) {
        Truth::True
    } else if closure.contains(&l.flip()) {
        Truth::False
    } else {
        Truth::Unknown
    }
}

fn random_pred<R: Rng>(t: &Theory, rng: &mut R, subject: Option<usize>) -> Pred {
    if !t.relations.is_empty() && rng.random_bool(0.3) {
        let r = *t.relations.choose(rng).expect("non-empty");
        let objects: Vec<usize> = t.entities.iter().copied().filter(|o| Some(*o) != subject).collect();
        Pred::Rel(r, *objects.choose(rng).expect("at least two entities"))
    } else {
        Pred::Attr(*t.attributes.choose(rng).expect("non-empty"))
    }
}

fn random_pattern<R: Rng>(t: &Theory, rng: &mut R, subject: Option<usize>, negative: f64) -> Pattern {
    Pattern { subject, pred: random_pred(t, rng, subject), positive: !rng.random_bool(negative) }
}

pub fn random_theory<R: Rng>(rng: &mut R) -> Theory {
    let pick = |pool: usize, lo: usize, hi: usize, rng: &mut R| {
        let mut all: Vec<usize> = (0..pool).collect();
        all.shuffle(rng);
        all.truncate(rng.random_range(lo..=hi));
        all.sort_unstable();
        all
    };
    let entities = pick(ENTITIES.len(), 3, 8, rng);
    let attributes = pick(ATTRIBUTES.len(), 4, 6, rng);
    let relations = pick(RELATIONS.len(), 1, 2, rng);
    let mut t = Theory { entities, attributes, relations, facts: vec![], rules: vec![], disjunction: None };

    let n_facts = rng.random_range(3..=8);
    while t.facts.len() < n_facts {
        let e = *t.entities.choose(rng).expect("non-empty");
        let p = random_pattern(&t, rng, Some(e), 0.2);
        let l = p.bind(e);
        if !t.facts.contains(&l) && !t.facts.contains(&l.flip()) {
            t.facts.push(l);
        }
    }
    let n_rules = rng.random_range(1..=6);
    for _ in 0..n_rules {
        let ground = rng.random_bool(0.2).then(|| *t.entities.choose(rng).expect("non-empty"));
        let body_len = rng.random_range(1..=2);
        let body: Vec<Pattern> = (0..body_len)
            .map(|i| {
                // a second conjunct may mention a fixed entity
                let subject = if i > 0 && ground.is_none() && rng.random_bool(0.2) {
                    Some(*t.entities.choose(rng).expect("non-empty"))
                } else {
                    ground
                };
                random_pattern(&t, rng, subject, 0.15)
            })
            .collect();
        let head = random_pattern(&t, rng, ground, 0.3);
        if body.iter().any(|b| b.pred == head.pred && b.subject == head.subject) {
            continue;
        }
        t.rules.push(SynthRule { body, head });
    }
    if rng.random_bool(0.25) {
        let e = *t.entities.choose(rng).expect("non-empty");
        let two: Vec<&usize> = t.attributes.choose_multiple(rng, 2).collect();
        t.disjunction = Some((e, *two[0], *two[1]));
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthCase {
    pub theory: Theory,
    pub hypothesis: Lit,
    pub gold: Truth,
    pub rounds: usize,
    pub problem: ProblemInstance,
}

fn problem_for(case_id: String, statements: &[String], hypothesis: &str, gold: Truth) -> Result<ProblemInstance> {
    let mut target = Target {
        hypothesis: hypothesis.to_string(),
        question: format!("Based on the above information, is the following statement true, false, or uncertain? {hypothesis}"),
        options: Target::true_false_unknown(),
        answer_key: None,
    };
    target.answer_key = target.label_for_truth(gold).map(str::to_string);
    Ok(ProblemInstance {
        case_id,
        dataset: Dataset::ProofWriter,
        context: statements.join(" "),
        premises: statements.iter().enumerate().map(|(i, s)| Premise::input(i, s)).collect::<Result<_>>()?,
        target,
        boundary_conditions: Vec::new(),
    })
}

/// `count` accepted cases, gold labels cycling through True, False, Unknown.
pub fn generate_suite(count: usize, seed: u64) -> Result<Vec<SynthCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wanted = [Truth::True, Truth::False, Truth::Unknown];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theory = random_theory(&mut rng);
        let Ok((closed, rounds)) = closure(&theory) else { continue };
        let goal = wanted[out.len() % 3];
        let given: BTreeSet<Lit> = theory.facts.iter().copied().collect();
        let candidates: Vec<Lit> = theory
            .vocabulary()
            .into_iter()
            .flat_map(|l| [l, l.flip()])
            .filter(|l| truth_in(&closed, *l) == goal && !given.contains(l) && !given.contains(&l.flip()))
            .collect();
        let Some(&hypothesis) = candidates.choose(&mut rng) else { continue };
        let problem = problem_for(
            format!("synth-{:04}", out.len()),
            &theory.statements(),
            &lit_sentence(hypothesis),
            goal,
        )?;
        out.push(SynthCase { theory, hypothesis, gold: goal, rounds, problem });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub statement: String,
    pub expected: Truth,
    pub oracle: String,
}

/// Compares the oracle with the closure on every literal of the theory.
pub fn cross_check(theory: &Theory, depth: usize) -> Vec<Mismatch> {
    let expected = closure(theory).map(|(c, _)| c);
    let clauses: std::result::Result<Vec<Clause>, _> =
        theory.statements().iter().map(|s| parse_statement(s)).collect();
    let kb = clauses.and_then(|c| KnowledgeBase::from_clauses(&c));
    let mut out = Vec::new();
    let Ok(closed) = expected else {
        if kb.as_ref().is_ok_and(|kb| kb.saturate(depth, false).is_ok()) && closure(theory) == Err(Rejection::Inconsistent) {
            out.push(Mismatch { statement: "<theory>".into(), expected: Truth::Unknown, oracle: "consistent".into() });
        }
        return out;
    };
    let kb = match kb {
        Ok(kb) => kb,
        Err(e) => {
            out.push(Mismatch { statement: "<theory>".into(), expected: Truth::Unknown, oracle: e.to_string() });
            return out;
        }
    };
    for l in theory.vocabulary() {
        let sentence = lit_sentence(l);
        let expected = truth_in(&closed, l);
        let got = match parse_statement(&sentence) {
            Ok(Clause::Fact(atom)) => query(&kb, &atom, depth).map(|t| t.to_string()).unwrap_or_else(|e| e.to_string()),
            Ok(other) => format!("not a fact: {other}"),
            Err(e) => e.to_string(),
        };
        if got != expected.to_string() {
            out.push(Mismatch { statement: sentence, expected, oracle: got });
        }
    }
    out
}

/// Summary of a batch cross-check.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CrossCheck {
    pub theories: usize,
    pub rejected: usize,
    pub literals: usize,
    pub mismatches: BTreeMap<usize, Vec<Mismatch>>,
}

pub fn cross_check_random(instances: usize, seed: u64, depth: usize) -> CrossCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CrossCheck::default();
    for i in 0..instances {
        let theory = random_theory(&mut rng);
        report.theories += 1;
        if closure(&theory).is_err() {
            report.rejected += 1;
        } else {
            report.literals += theory.vocabulary().len();
        }
        let bad = cross_check(&theory, depth);
        if !bad.is_empty() {
            report.mismatches.insert(i, bad);
        }
    }
    report
}
