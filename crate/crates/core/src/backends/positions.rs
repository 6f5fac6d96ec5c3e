//! Positional arithmetic for ordering puzzles: ordinals, relative-from-end
//! positions and a consistency check over placement statements.

use std::collections::{BTreeMap, BTreeSet};

const ORDINALS: [&str; 10] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];
const NUMBERS: [&str; 10] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

fn ordinal(word: &str) -> Option<usize> {
    ORDINALS.iter().position(|o| *o == word).map(|i| i + 1)
}

/// 1-based position named by `phrase` among `total` slots, e.g. "third" is 3
/// and "third-to-last" of 7 is 5.
pub fn position_of(phrase: &str, total: usize) -> Option<usize> {
    let p = phrase.trim().trim_end_matches('.').to_ascii_lowercase();
    let p = p.strip_prefix("the ").unwrap_or(&p);
    let pos = if p == "last" {
        total
    } else if let Some(k) = p.strip_suffix("-to-last").or_else(|| p.strip_suffix(" to last")) {
        total.checked_sub(ordinal(k)? - 1)?
    } else if let Some(k) = p.strip_suffix("-from-last") {
        total.checked_sub(ordinal(k)? - 1)?
    } else {
        ordinal(p)?
    };
    (1..=total).contains(&pos).then_some(pos)
}

/// Slot count and names from a roster sentence such as
/// "there were seven golfers: Ana, Eli, and Ada".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    pub count: usize,
    pub members: Vec<String>,
}

pub fn parse_roster(text: &str) -> Option<Roster> {
    let lower = text.to_ascii_lowercase();
    let count = lower
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|w| NUMBERS.iter().position(|n| *n == w).map(|i| i + 1).or_else(|| w.parse().ok()))?;
    let members = match text.split_once(':') {
        Some((_, list)) => list
            .trim()
            .trim_end_matches('.')
            .split(',')
            .map(|s| s.trim().trim_start_matches("and ").trim())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    Some(Roster { count, members })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    At(String, usize),
    NotAt(String, BTreeSet<usize>),
    Before(String, String),
}

fn positions_in(phrase: &str, total: usize) -> Option<BTreeSet<usize>> {
    let phrase = phrase.trim().trim_end_matches('.');
    if let Some((a, b)) = phrase.split_once("-to-").filter(|(_, b)| *b != "last" && !b.ends_with("last")) {
        let (a, b) = (position_of(a, total)?, position_of(b, total)?);
        return Some((a.min(b)..=a.max(b)).collect());
    }
    let mut out = BTreeSet::new();
    for part in phrase.split([',']).flat_map(|s| s.split(" or ")) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.insert(position_of(part, total)?);
    }
    (!out.is_empty()).then_some(out)
}

/// Reads one placement sentence: "X finished third", "X did not finish
/// first or second", "X finished above Y".
pub fn parse_placement(sentence: &str, total: usize) -> Option<Placement> {
    let s = sentence.trim().trim_end_matches('.');
    let verbs = [" finished ", " was ", " is "];
    if let Some((name, rest)) = s.split_once(" did not finish ") {
        return Some(Placement::NotAt(name.trim().to_string(), positions_in(rest, total)?));
    }
    for verb in verbs {
        let Some((name, rest)) = s.split_once(verb) else { continue };
        let name = name.trim().to_string();
        if let Some(other) = rest.strip_prefix("above ") {
            return Some(Placement::Before(name, other.trim().to_string()));
        }
        if let Some(other) = rest.strip_prefix("below ") {
            return Some(Placement::Before(other.trim().to_string(), name));
        }
        return position_of(rest, total).map(|p| Placement::At(name, p));
    }
    None
}

/// Whether the placements described by `statements` can hold together in a
/// one-to-one assignment of names to `total` positions. Sentences that are
/// not placements are ignored.
pub fn consistent<S: AsRef<str>>(statements: &[S], total: usize) -> bool {
    let mut at: BTreeMap<String, usize> = BTreeMap::new();
    let mut taken: BTreeMap<usize, String> = BTreeMap::new();
    let mut excluded: Vec<(String, BTreeSet<usize>)> = Vec::new();
    let mut order: Vec<(String, String)> = Vec::new();
    for statement in statements {
        for sentence in super::split_sentences(statement.as_ref()) {
            match parse_placement(&sentence, total) {
                Some(Placement::At(name, p)) => {
                    if at.get(&name).is_some_and(|q| *q != p) || taken.get(&p).is_some_and(|n| *n != name) {
                        return false;
                    }
                    at.insert(name.clone(), p);
                    taken.insert(p, name);
                }
                Some(Placement::NotAt(name, ps)) => excluded.push((name, ps)),
                Some(Placement::Before(a, b)) => order.push((a, b)),
                None => {}
            }
        }
    }
    let excluded_ok = excluded.iter().all(|(n, ps)| at.get(n).is_none_or(|p| !ps.contains(p)));
    let order_ok = order.iter().all(|(a, b)| match (at.get(a), at.get(b)) {
        (Some(pa), Some(pb)) => pa < pb,
        (Some(pa), None) => *pa < total,
        (None, Some(pb)) => *pb > 1,
        (None, None) => a != b,
    });
    excluded_ok && order_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_from_either_end() {
        assert_eq!(position_of("third-to-last", 7), Some(5));
        assert_eq!(position_of("second-to-last", 7), Some(6));
        assert_eq!(position_of("last", 7), Some(7));
        assert_eq!(position_of("first", 7), Some(1));
        assert_eq!(position_of("eighth", 7), None);
    }

    #[test]
    fn roster() {
        let r = parse_roster("In a golf tournament, there were seven golfers: Ana, Eli, Mya, Amy, Joe, Mel, and Ada.").unwrap();
        assert_eq!(r.count, 7);
        assert_eq!(r.members, vec!["Ana", "Eli", "Mya", "Amy", "Joe", "Mel", "Ada"]);
    }

    #[test]
    fn placements() {
        assert_eq!(parse_placement("Ada finished third-to-last.", 7), Some(Placement::At("Ada".into(), 5)));
        assert_eq!(
            parse_placement("Ada did not finish first or second.", 7),
            Some(Placement::NotAt("Ada".into(), [1, 2].into()))
        );
        assert_eq!(
            parse_placement("Eli did not finish first-to-third.", 7),
            Some(Placement::NotAt("Eli".into(), [1, 2, 3].into()))
        );
        assert_eq!(
            parse_placement("Eli finished below Ana.", 7),
            Some(Placement::Before("Ana".into(), "Eli".into()))
        );
    }

    #[test]
    fn boundary_consistency() {
        let base = ["Ada finished third-to-last.", "Mya finished second-to-last."];
        let mut ok = base.to_vec();
        ok.push("Amy finished second.");
        assert!(consistent(&ok, 7));
        let mut clash = base.to_vec();
        clash.push("Amy finished fifth.");
        assert!(!consistent(&clash, 7));
        assert!(!consistent(&["Ada finished fifth.", "Ada did not finish fifth or sixth."], 7));
        assert!(!consistent(&["Joe finished second.", "Amy finished first.", "Joe finished above Amy."], 7));
    }
}
