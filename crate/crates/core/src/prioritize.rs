//! Relevance and supplement scoring.
//!
//! Scores are kept in exact hundredths: a shared noun is worth 25, a shared
//! adjective 30, the hypothetical bonus 25, and everything is capped at 100.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::OnceLock;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Premise, PremiseId};
use crate::error::{Error, Result};
use crate::oracle;

const NOUN_WEIGHT: u32 = 25;
const ADJECTIVE_WEIGHT: u32 = 30;
const HYPOTHETICAL_BONUS: u32 = 25;
const CAP: u32 = 100;

/// Word lists backing the term tagger.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    stopwords: HashSet<String>,
    adjectives: HashSet<String>,
    /// Multiword entities, each as its token sequence.
    entities: Vec<Vec<String>>,
}

fn word_list(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl Lexicon {
    pub fn from_lists(stopwords: &str, adjectives: &str, entities: &str) -> Self {
        Self {
            stopwords: word_list(stopwords).collect(),
            adjectives: word_list(adjectives).collect(),
            entities: word_list(entities)
                .map(|e| e.split_whitespace().map(str::to_string).collect())
                .collect(),
        }
    }

    pub fn builtin() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            Lexicon::from_lists(
                include_str!("../data/stopwords.txt"),
                include_str!("../data/adjectives.txt"),
                include_str!("../data/entities.txt"),
            )
        })
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_adjective(&self, token: &str) -> bool {
        self.adjectives.contains(token)
    }

    pub fn entities(&self) -> &[Vec<String>] {
        &self.entities
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermProfile {
    pub nouns: BTreeSet<String>,
    pub adjectives: BTreeSet<String>,
}

impl TermProfile {
    pub fn is_empty(&self) -> bool {
        self.nouns.is_empty() && self.adjectives.is_empty()
    }

    /// Number of shared nouns and shared adjectives.
    pub fn overlap(&self, other: &TermProfile) -> (usize, usize) {
        (
            self.nouns.intersection(&other.nouns).count(),
            self.adjectives.intersection(&other.adjectives).count(),
        )
    }

    pub fn shares_any(&self, other: &TermProfile) -> bool {
        self.overlap(other) != (0, 0)
    }
}

struct RawToken {
    text: String,
    /// Punctuation separates this token from the next one.
    closed: bool,
}

fn raw_tokens(text: &str) -> Vec<RawToken> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch.is_alphanumeric() || ch == '-' || ch == '\'' {
                current.push(ch);
            } else if !current.is_empty() {
                out.push(RawToken { text: std::mem::take(&mut current), closed: true });
            } else if let Some(last) = out.last_mut() {
                last.closed = true;
            }
        }
        if !current.is_empty() {
            out.push(RawToken { text: current, closed: false });
        }
    }
    out
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Lowercased token sequence before stopword removal, each token flagged
/// when punctuation follows it.
fn merged_tokens(text: &str, lexicon: &Lexicon) -> Vec<(String, bool)> {
    let raw = raw_tokens(text);
    let mut tokens: Vec<(String, bool)> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let mut word = raw[i].text.to_lowercase();
        let mut j = i;
        if is_capitalized(&raw[i].text) && !lexicon.is_stopword(&word) {
            while !raw[j].closed
                && j + 1 < raw.len()
                && is_capitalized(&raw[j + 1].text)
                && !lexicon.is_stopword(&raw[j + 1].text.to_lowercase())
            {
                j += 1;
                word.push(' ');
                word.push_str(&raw[j].text.to_lowercase());
            }
        }
        tokens.push((word, raw[j].closed));
        i = j + 1;
    }

    let mut merged = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'outer: while i < tokens.len() {
        for entity in lexicon.entities() {
            let end = i + entity.len();
            if end <= tokens.len() && tokens[i..end].iter().map(|t| &t.0).eq(entity.iter()) {
                merged.push((entity.join(" "), tokens[end - 1].1));
                i = end;
                continue 'outer;
            }
        }
        merged.push(tokens[i].clone());
        i += 1;
    }
    merged
}

pub fn term_profile(text: &str) -> TermProfile {
    term_profile_with(text, Lexicon::builtin())
}

pub fn term_profile_with(text: &str, lexicon: &Lexicon) -> TermProfile {
    let tokens = merged_tokens(text, lexicon);
    let mut profile = TermProfile::default();
    for (i, (token, closed)) in tokens.iter().enumerate() {
        if token == "a" {
            // "a" is an article before a content word, a symbol otherwise.
            let article = !closed && tokens.get(i + 1).is_some_and(|(next, _)| !lexicon.is_stopword(next));
            if !article {
                profile.nouns.insert(token.clone());
            }
            continue;
        }
        if lexicon.is_stopword(token) {
            continue;
        }
        if lexicon.is_adjective(token) {
            profile.adjectives.insert(token.clone());
        } else {
            profile.nouns.insert(token.clone());
        }
    }
    profile
}

/// A score in exact hundredths, always within [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Score(u32);

impl Score {
    pub const ZERO: Score = Score(0);
    pub const ONE: Score = Score(CAP);

    pub fn from_hundredths(h: u32) -> Self {
        Score(h.min(CAP))
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    pub fn meets(self, theta: f64) -> bool {
        self.as_f64() >= theta
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.as_f64()
    }
}

impl TryFrom<f64> for Score {
    type Error = String;

    fn try_from(v: f64) -> std::result::Result<Self, Self::Error> {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("score {v} outside [0, 1]"));
        }
        Ok(Score((v * 100.0).round() as u32))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

fn overlap_score(a: &TermProfile, b: &TermProfile) -> u32 {
    let (nouns, adjectives) = a.overlap(b);
    NOUN_WEIGHT * nouns as u32 + ADJECTIVE_WEIGHT * adjectives as u32
}

/// Relevance of a statement to the hypothesis.
pub fn relevance(statement: &str, hypothesis: &str) -> Score {
    Score::from_hundredths(overlap_score(&term_profile(statement), &term_profile(hypothesis)))
}

pub fn is_conditional(normalized: &str) -> bool {
    normalized.starts_with("if ") || normalized == "if" || normalized.contains(" then ")
}

/// True when the candidate is an "if A then B" rule whose antecedent the
/// primary statement satisfies.
pub fn hypothetical_link(primary: &str, candidate: &str) -> bool {
    let Ok(normalized) = crate::domain::normalize(candidate) else {
        return false;
    };
    if !is_conditional(&normalized) {
        return false;
    }
    let (Ok(fact), Ok(rule)) = (oracle::parse_statement(primary), oracle::parse_statement(candidate))
    else {
        return false;
    };
    match (fact, rule) {
        (oracle::Clause::Fact(atom), oracle::Clause::Rule(rule)) => oracle::match_antecedent(&atom, &rule),
        _ => false,
    }
}

/// Score of a candidate supplementary premise against the primary premise.
pub fn supplement_score(primary: &str, candidate: &str) -> Score {
    let mut total = overlap_score(&term_profile(primary), &term_profile(candidate));
    if hypothetical_link(primary, candidate) {
        total += HYPOTHETICAL_BONUS;
    }
    Score::from_hundredths(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStage {
    Relevance,
    Supplement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub premise_id: PremiseId,
    pub score: Score,
    pub stage: ScoreStage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub primary: Premise,
    pub supplements: Vec<Premise>,
    pub scores: Vec<ScoredCandidate>,
}

/// Argmax of relevance over `determinate`, skipping failed primaries while
/// an unfailed alternative exists. Ties go to the earliest premise.
pub fn select_primary<'a>(
    determinate: &[&'a Premise],
    hypothesis: &str,
    failed: &BTreeSet<PremiseId>,
) -> Result<(&'a Premise, Score)> {
    if determinate.is_empty() {
        return Err(Error::EmptyDeterminateSet);
    }
    let mut eligible: Vec<&Premise> =
        determinate.iter().copied().filter(|p| !failed.contains(&p.id)).collect();
    if eligible.is_empty() {
        eligible = determinate.to_vec();
    }
    eligible.sort_by_key(|p| p.order_key());
    let hyp = term_profile(hypothesis);
    let mut best: Option<(&Premise, Score)> = None;
    for p in eligible {
        let score = Score::from_hundredths(overlap_score(&term_profile(&p.text), &hyp));
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((p, score));
        }
    }
    Ok(best.expect("eligible set is non-empty"))
}

/// Uniform choice over the determinate set, used when prioritization is disabled.
pub fn select_primary_random<'a, R: Rng>(determinate: &[&'a Premise], rng: &mut R) -> Result<&'a Premise> {
    determinate.choose(rng).copied().ok_or(Error::EmptyDeterminateSet)
}

/// Pool members scoring at least `theta` against the primary, by descending
/// score then pool order.
pub fn select_supplements<'a>(primary: &Premise, pool: &[&'a Premise], theta: f64) -> Vec<(&'a Premise, Score)> {
    let mut scored: Vec<(usize, &Premise, Score)> = pool
        .iter()
        .enumerate()
        .filter(|(_, p)| p.id != primary.id)
        .map(|(i, p)| (i, *p, supplement_score(&primary.text, &p.text)))
        .filter(|(_, _, s)| s.meets(theta))
        .collect();
    scored.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(_, p, s)| (p, s)).collect()
}

/// Random subset of the pool, each member kept with probability one half.
pub fn select_supplements_random<'a, R: Rng>(primary: &Premise, pool: &[&'a Premise], rng: &mut R) -> Vec<&'a Premise> {
    pool.iter().copied().filter(|p| p.id != primary.id).filter(|_| rng.random_bool(0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn profile_examples() {
        let p = term_profile("The cat eats the bald eagle");
        assert_eq!(p.nouns, set(&["bald eagle", "cat"]));
        assert!(p.adjectives.is_empty());

        let p = term_profile("The dog is blue");
        assert_eq!(p.nouns, set(&["dog"]));
        assert_eq!(p.adjectives, set(&["blue"]));

        assert!(term_profile("It is").is_empty());
    }

    #[test]
    fn article_versus_symbol() {
        assert_eq!(term_profile("A is true").nouns, set(&["a"]));
        assert_eq!(term_profile("Max is a wumpus").nouns, set(&["max", "wumpus"]));
        assert_eq!(term_profile("If A then B").nouns, set(&["a", "b"]));
    }

    #[test]
    fn capitalized_runs_merge_within_phrase_only() {
        assert_eq!(term_profile("New York is big").nouns, set(&["new york"]));
        assert_eq!(term_profile("A, B, and C are the same").nouns, set(&["a", "b", "c"]));
    }

    #[test]
    fn relevance_examples() {
        let h = "The cat eats the bald eagle";
        assert_eq!(relevance("The bald eagle chases the cat", h).hundredths(), 50);
        assert_eq!(relevance("The dog is blue", h), Score::ZERO);
        let five = "Anne Bob Carl Dave Erin";
        assert_eq!(relevance("anne bob carl dave erin", &five.to_lowercase()), Score::ONE);
    }

    #[test]
    fn hypothetical_bonus() {
        assert_eq!(supplement_score("A is true", "If A then B").hundredths(), 50);
        let s = supplement_score(
            "The bald eagle chases the cat",
            "If something chases the cat then the cat chases the dog",
        );
        assert_eq!(s.hundredths(), 50);
    }

    #[test]
    fn supplements_filter_and_order() {
        let primary = Premise::input(0, "The bald eagle chases the cat").unwrap();
        let a = Premise::input(1, "The dog is blue").unwrap();
        let b = Premise::input(2, "The cat is rough").unwrap();
        let c = Premise::input(3, "If something chases the cat then the cat chases the dog").unwrap();
        let pool = vec![&a, &b, &c];
        let got = select_supplements(&primary, &pool, 0.25);
        let ids: Vec<_> = got.iter().map(|(p, _)| p.id.as_str()).collect();
        assert_eq!(ids, ["p4", "p3"]);
        assert_eq!(select_supplements(&primary, &pool, 0.0).len(), 3);
        assert!(select_supplements(&primary, &[], 0.25).is_empty());
    }

    #[test]
    fn primary_exclusion() {
        let hi = Premise::input(0, "The bald eagle chases the cat").unwrap();
        let lo = Premise::input(1, "The cat is rough").unwrap();
        let d = vec![&hi, &lo];
        let h = "The cat eats the bald eagle";
        assert_eq!(select_primary(&d, h, &BTreeSet::new()).unwrap().0.id, hi.id);
        let failed: BTreeSet<_> = [hi.id.clone()].into();
        assert_eq!(select_primary(&d, h, &failed).unwrap().0.id, lo.id);
        let all: BTreeSet<_> = [hi.id.clone(), lo.id.clone()].into();
        assert_eq!(select_primary(&d, h, &all).unwrap().0.id, hi.id);
        assert!(matches!(select_primary(&[], h, &all), Err(Error::EmptyDeterminateSet)));
    }

    #[test]
    fn score_display_and_serde() {
        let s = Score::from_hundredths(75);
        assert_eq!(s.to_string(), "0.75");
        assert_eq!(serde_json::to_string(&s).unwrap(), "0.75");
        assert_eq!(serde_json::from_str::<Score>("0.3").unwrap().hundredths(), 30);
        assert_eq!(Score::from_hundredths(130), Score::ONE);
    }

    proptest! {
        #[test]
        fn relevance_ignores_word_order(words in proptest::collection::vec("[a-z]{3,6}", 1..6), seed in any::<u64>()) {
            let hyp = words.join(" ");
            let mut shuffled = words.clone();
            let n = shuffled.len();
            shuffled.rotate_left((seed as usize) % n);
            prop_assert_eq!(relevance(&shuffled.join(" "), &hyp), relevance(&hyp, &hyp));
        }

        #[test]
        fn relevance_is_monotone_and_capped(extra in proptest::collection::vec("[a-z]{4,7}", 0..8)) {
            let hyp = format!("bob {}", extra.join(" "));
            let mut previous = Score::ZERO;
            for k in 0..=extra.len() {
                let statement = format!("bob {}", extra[..k].join(" "));
                let s = relevance(&statement, &hyp);
                prop_assert!(s >= previous);
                prop_assert!(s <= Score::ONE);
                previous = s;
            }
        }
    }
}
