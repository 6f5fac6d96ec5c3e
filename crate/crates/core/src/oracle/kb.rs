use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::domain::Truth;

use super::ast::{Atom, Clause, Rule, Term};
use super::{parse_statement, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Inference {
    Given,
    ModusPonens,
    ModusTollens,
    DisjunctiveSyllogism,
    HypotheticalSyllogism,
}

/// How a fact entered the closure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Proof {
    pub inference: Inference,
    /// Index of the rule (into `Closure::rules`) or disjunction used.
    pub clause: Option<usize>,
    /// Ground instance of the rule or disjunction that fired.
    pub instance: Option<Clause>,
    pub premises: Vec<Atom>,
    pub round: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    facts: BTreeSet<Atom>,
    rules: Vec<Rule>,
    disjunctions: Vec<(Atom, Atom)>,
    entities: Vec<String>,
}

fn contradiction(a: &Atom) -> OracleError {
    OracleError::Inconsistent { left: a.to_string(), right: a.negated().to_string() }
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_clauses<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> Result<Self, OracleError> {
        let mut kb = Self::new();
        for c in clauses {
            kb.insert(c.clone())?;
        }
        Ok(kb)
    }

    /// Parses and inserts every statement.
    pub fn from_statements<S: AsRef<str>>(statements: &[S]) -> Result<Self, OracleError> {
        let mut kb = Self::new();
        for s in statements {
            kb.insert(parse_statement(s.as_ref())?)?;
        }
        Ok(kb)
    }

    pub fn insert(&mut self, clause: Clause) -> Result<(), OracleError> {
        for atom in clause.atoms() {
            for e in atom.entities() {
                self.add_entity(e);
            }
        }
        match clause {
            Clause::Fact(atom) => {
                if atom.has_var() {
                    return Err(OracleError::NotAFact(atom.to_string()));
                }
                if self.facts.contains(&atom.negated()) {
                    return Err(contradiction(&atom));
                }
                self.facts.insert(atom);
            }
            Clause::Rule(rule) => {
                if !self.rules.contains(&rule) {
                    self.rules.push(rule);
                }
            }
            Clause::Disjunction(a, b) => {
                if !self.disjunctions.contains(&(a.clone(), b.clone())) {
                    self.disjunctions.push((a, b));
                }
            }
        }
        Ok(())
    }

    pub fn add_entity(&mut self, name: &str) {
        if !self.entities.iter().any(|e| e == name) {
            self.entities.push(name.to_string());
        }
    }

    pub fn facts(&self) -> &BTreeSet<Atom> {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    /// Saturates for at most `max_depth` rounds. Each round reads only the
    /// facts present at its start. Rule composition is optional because it
    /// never changes the derivable facts, only how fast they appear.
    pub fn saturate(&self, max_depth: usize, compose: bool) -> Result<Closure, OracleError> {
        let mut facts = self.facts.clone();
        let mut proofs: BTreeMap<Atom, Proof> = facts
            .iter()
            .map(|a| {
                let proof =
                    Proof { inference: Inference::Given, clause: None, instance: None, premises: vec![], round: 0 };
                (a.clone(), proof)
            })
            .collect();
        let mut rules = self.rules.clone();
        let mut rounds = 0;

        for round in 1..=max_depth {
            let mut fresh: BTreeMap<Atom, Proof> = BTreeMap::new();
            let mut offer = |atom: Atom, proof: Proof, facts: &BTreeSet<Atom>| {
                if !facts.contains(&atom) {
                    fresh.entry(atom).or_insert(proof);
                }
            };

            for (ri, rule) in rules.iter().enumerate() {
                for g in instances(rule, &self.entities) {
                    let proof = |inference, premises| Proof {
                        inference,
                        clause: Some(ri),
                        instance: Some(Clause::Rule(g.clone())),
                        premises,
                        round,
                    };
                    if g.antecedents.iter().all(|a| facts.contains(a)) {
                        offer(g.consequent.clone(), proof(Inference::ModusPonens, g.antecedents.clone()), &facts);
                    }
                    let denied = g.consequent.negated();
                    if facts.contains(&denied) {
                        for k in 0..g.antecedents.len() {
                            let others: Vec<&Atom> =
                                g.antecedents.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, a)| a).collect();
                            if others.iter().all(|a| facts.contains(*a)) {
                                let premises =
                                    std::iter::once(denied.clone()).chain(others.into_iter().cloned()).collect();
                                offer(g.antecedents[k].negated(), proof(Inference::ModusTollens, premises), &facts);
                            }
                        }
                    }
                }
            }

            for (di, (a, b)) in self.disjunctions.iter().enumerate() {
                let proof = |premise: Atom| Proof {
                    inference: Inference::DisjunctiveSyllogism,
                    clause: Some(di),
                    instance: Some(Clause::Disjunction(a.clone(), b.clone())),
                    premises: vec![premise],
                    round,
                };
                if facts.contains(&a.negated()) {
                    offer(b.clone(), proof(a.negated()), &facts);
                }
                if facts.contains(&b.negated()) {
                    offer(a.clone(), proof(b.negated()), &facts);
                }
            }

            let mut composed = Vec::new();
            if compose {
                for (i, r1) in rules.iter().enumerate() {
                    for (j, r2) in rules.iter().enumerate() {
                        if i == j || r2.antecedents.len() != 1 {
                            continue;
                        }
                        if let Some(r) = compose_rules(r1, r2) {
                            if !r.is_tautology() && !rules.contains(&r) && !composed.contains(&r) {
                                composed.push(r);
                            }
                        }
                    }
                }
            }

            if fresh.is_empty() && composed.is_empty() {
                break;
            }
            rounds = round;
            for atom in fresh.keys() {
                if facts.contains(&atom.negated()) || fresh.contains_key(&atom.negated()) {
                    return Err(contradiction(atom));
                }
            }
            for (atom, proof) in fresh {
                facts.insert(atom.clone());
                proofs.insert(atom, proof);
            }
            rules.extend(composed);
        }

        Ok(Closure { facts, rules, proofs, rounds })
    }
}

fn instances(rule: &Rule, entities: &[String]) -> Vec<Rule> {
    if rule.has_var() {
        entities.iter().map(|e| rule.ground(e)).collect()
    } else {
        vec![rule.clone()]
    }
}

/// Result of saturating a knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub facts: BTreeSet<Atom>,
    /// Given rules followed by composed ones.
    pub rules: Vec<Rule>,
    pub proofs: BTreeMap<Atom, Proof>,
    /// Rounds that added something.
    pub rounds: usize,
}

impl Closure {
    pub fn truth(&self, atom: &Atom) -> Truth {
        if self.facts.contains(atom) {
            Truth::True
        } else if self.facts.contains(&atom.negated()) {
            Truth::False
        } else {
            Truth::Unknown
        }
    }

    pub fn entails(&self, clause: &Clause) -> bool {
        match clause {
            Clause::Fact(a) => self.facts.contains(a),
            Clause::Rule(r) => self.rules.contains(r),
            Clause::Disjunction(a, b) => self.facts.contains(a) || self.facts.contains(b),
        }
    }
}

/// Saturation with rule composition.
pub fn forward_chain(kb: &KnowledgeBase, max_depth: usize) -> Result<Closure, OracleError> {
    kb.saturate(max_depth, true)
}

/// Open-world evaluation of a ground hypothesis.
pub fn query(kb: &KnowledgeBase, hypothesis: &Atom, max_depth: usize) -> Result<Truth, OracleError> {
    if hypothesis.has_var() {
        return Err(OracleError::NotAFact(hypothesis.to_string()));
    }
    let mut kb = kb.clone();
    for e in hypothesis.entities() {
        kb.add_entity(e);
    }
    Ok(kb.saturate(max_depth, false)?.truth(hypothesis))
}

/// Variable bindings for unifying an atom from one scope against another.
#[derive(Default)]
struct Unifier {
    left: Option<String>,
    right: Option<String>,
    linked: bool,
}

impl Unifier {
    fn bind(slot: &mut Option<String>, value: &str) -> bool {
        match slot {
            Some(v) => v == value,
            None => {
                *slot = Some(value.to_string());
                true
            }
        }
    }

    fn bind_left(&mut self, value: &str) -> bool {
        Self::bind(&mut self.left, value) && (!self.linked || Self::bind(&mut self.right, value))
    }

    fn bind_right(&mut self, value: &str) -> bool {
        Self::bind(&mut self.right, value) && (!self.linked || Self::bind(&mut self.left, value))
    }

    fn link(&mut self) -> bool {
        self.linked = true;
        match (self.left.clone(), self.right.clone()) {
            (Some(l), Some(r)) => l == r,
            (Some(l), None) => Self::bind(&mut self.right, &l),
            (None, Some(r)) => Self::bind(&mut self.left, &r),
            (None, None) => true,
        }
    }

    fn terms(&mut self, l: &Term, r: &Term) -> bool {
        match (l, r) {
            (Term::Const(a), Term::Const(b)) => a == b,
            (Term::Var, Term::Const(b)) => self.bind_left(b),
            (Term::Const(a), Term::Var) => self.bind_right(a),
            (Term::Var, Term::Var) => self.link(),
        }
    }

    fn atoms(&mut self, l: &Atom, r: &Atom) -> bool {
        if l.relation != r.relation || l.positive != r.positive || !self.terms(&l.subject, &r.subject) {
            return false;
        }
        match (&l.object, &r.object) {
            (None, None) => true,
            (Some(a), Some(b)) => self.terms(a, b),
            _ => false,
        }
    }

    fn apply(value: &Option<String>, atom: &Atom) -> Atom {
        match value {
            Some(v) => atom.ground(v),
            None => atom.clone(),
        }
    }
}

/// `r1: A -> B` and `r2: B -> C` give `A -> C`.
fn compose_rules(r1: &Rule, r2: &Rule) -> Option<Rule> {
    let mut u = Unifier::default();
    if !u.atoms(&r1.consequent, &r2.antecedents[0]) {
        return None;
    }
    let antecedents: Vec<Atom> = r1.antecedents.iter().map(|a| Unifier::apply(&u.left, a)).collect();
    let consequent = Unifier::apply(&u.right, &r2.consequent);
    let left_free = antecedents.iter().any(Atom::has_var);
    let right_free = consequent.has_var();
    if right_free && !(left_free && u.linked) {
        // The composed rule would need two independent variables.
        return None;
    }
    Some(Rule { antecedents, consequent })
}

/// True iff some antecedent of `rule` matches the ground `fact`.
pub fn match_antecedent(fact: &Atom, rule: &Rule) -> bool {
    rule.antecedents.iter().any(|a| Unifier::default().atoms(a, fact))
}

/// One deduction step over a small premise set.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub conclusion: Clause,
    pub inference: Inference,
    /// Indices into the clause list with the primary at 0.
    pub sources: Vec<usize>,
}

/// First applicable single-step deduction, trying modus ponens, modus
/// tollens, disjunctive syllogism and hypothetical syllogism in that order,
/// with clauses visited primary first. Conclusions already in `known` or
/// among the inputs are skipped.
pub fn derive_step(primary: &Clause, supplements: &[Clause], known: &BTreeSet<Atom>) -> Option<Derivation> {
    let clauses: Vec<&Clause> = std::iter::once(primary).chain(supplements).collect();
    let mut fact_index: BTreeMap<&Atom, usize> = BTreeMap::new();
    let mut kb = KnowledgeBase::new();
    for (i, c) in clauses.iter().enumerate() {
        if let Clause::Fact(a) = c {
            if !a.has_var() {
                fact_index.entry(a).or_insert(i);
            }
        }
        for atom in c.atoms() {
            for e in atom.entities() {
                kb.add_entity(e);
            }
        }
    }
    let entities = kb.entities;
    let is_new = |a: &Atom| !known.contains(a) && !fact_index.contains_key(a);
    let found = |conclusion: Clause, inference, first: usize, premises: &[&Atom]| {
        let mut sources = vec![first];
        sources.extend(premises.iter().map(|p| fact_index[*p]));
        Some(Derivation { conclusion, inference, sources })
    };

    for (ci, c) in clauses.iter().enumerate() {
        let Clause::Rule(rule) = c else { continue };
        for g in instances(rule, &entities) {
            if g.antecedents.iter().all(|a| fact_index.contains_key(a)) && is_new(&g.consequent) {
                let premises: Vec<&Atom> = g.antecedents.iter().collect();
                return found(Clause::Fact(g.consequent.clone()), Inference::ModusPonens, ci, &premises);
            }
        }
    }

    for (ci, c) in clauses.iter().enumerate() {
        let Clause::Rule(rule) = c else { continue };
        for g in instances(rule, &entities) {
            let denied = g.consequent.negated();
            if !fact_index.contains_key(&denied) {
                continue;
            }
            for k in 0..g.antecedents.len() {
                let others: Vec<&Atom> =
                    g.antecedents.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, a)| a).collect();
                let conclusion = g.antecedents[k].negated();
                if others.iter().all(|a| fact_index.contains_key(*a)) && is_new(&conclusion) {
                    let premises: Vec<&Atom> = std::iter::once(&denied).chain(others).collect();
                    return found(Clause::Fact(conclusion), Inference::ModusTollens, ci, &premises);
                }
            }
        }
    }

    for (ci, c) in clauses.iter().enumerate() {
        let Clause::Disjunction(a, b) = c else { continue };
        for (denied, other) in [(a.negated(), b), (b.negated(), a)] {
            if fact_index.contains_key(&denied) && is_new(other) {
                return found(Clause::Fact(other.clone()), Inference::DisjunctiveSyllogism, ci, &[&denied]);
            }
        }
    }

    for (i, c1) in clauses.iter().enumerate() {
        let Clause::Rule(r1) = c1 else { continue };
        for (j, c2) in clauses.iter().enumerate() {
            let Clause::Rule(r2) = c2 else { continue };
            if i == j || r2.antecedents.len() != 1 {
                continue;
            }
            if let Some(r) = compose_rules(r1, r2) {
                let exists = clauses.iter().any(|c| matches!(c, Clause::Rule(x) if *x == r));
                if !r.is_tautology() && !exists {
                    return Some(Derivation {
                        conclusion: Clause::Rule(r),
                        inference: Inference::HypotheticalSyllogism,
                        sources: vec![i, j],
                    });
                }
            }
        }
    }
    None
}

/// Whether `proposition` follows from `sources` within two rounds.
pub fn check_entailment<S: AsRef<str>>(sources: &[S], proposition: &str) -> Result<bool, OracleError> {
    let clauses: Vec<Clause> = sources.iter().map(|s| parse_statement(s.as_ref())).collect::<Result<_, _>>()?;
    let target = parse_statement(proposition)?;
    if clauses.contains(&target) {
        return Ok(true);
    }
    let mut kb = KnowledgeBase::from_clauses(&clauses)?;
    for atom in target.atoms() {
        for e in atom.entities() {
            kb.add_entity(e);
        }
    }
    Ok(forward_chain(&kb, 2)?.entails(&target))
}
