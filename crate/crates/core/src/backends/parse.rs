//! Reply parsers for the labeled-field answers the prompt templates ask for.

use std::sync::OnceLock;

use regex::Regex;

use super::BackendError;
use crate::domain::{Answer, PremiseKind, Target, Truth};

const QUOTES: [(&str, &str); 5] = [("``", "''"), ("\"", "\""), ("\u{201c}", "\u{201d}"), ("'", "'"), ("`", "`")];

fn skip_quotes(s: &str) -> &str {
    s.trim_start_matches(['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2019}'])
}

/// Value of the last `label:` occurrence in `text`. A quoted value is returned
/// without its quotes; otherwise the rest of the line.
pub fn parse_labeled_field(text: &str, label: &str) -> Result<String, BackendError> {
    let hay = text.to_ascii_lowercase();
    let needle = label.to_ascii_lowercase();
    let mut found = None;
    for (pos, _) in hay.match_indices(&needle) {
        let boundary = hay[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        if !boundary {
            continue;
        }
        let after = skip_quotes(&text[pos + needle.len()..]).trim_start_matches([' ', '\t']);
        if let Some(rest) = after.strip_prefix(':') {
            found = Some(rest);
        }
    }
    let rest = found.ok_or_else(|| BackendError::FieldNotFound(label.to_string()))?;
    let rest = rest.trim_start_matches([' ', '\t']);
    for (open, close) in QUOTES {
        if let Some(body) = rest.strip_prefix(open) {
            // values may quote words themselves, so close at the last quote on the line
            let line = body.lines().next().unwrap_or("");
            if let Some(end) = line.rfind(close) {
                return Ok(line[..end].trim().to_string());
            }
            if let Some(end) = body.find(close) {
                return Ok(body[..end].trim().to_string());
            }
            return Ok(line.trim().to_string());
        }
    }
    Ok(rest.lines().next().unwrap_or("").trim().trim_end_matches(',').trim().to_string())
}

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
}

fn after_question(text: &str) -> &str {
    match text.rfind('?') {
        Some(i) => &text[i + 1..],
        None => text,
    }
}

fn judgement_text(text: &str) -> String {
    parse_labeled_field(text, "judgement").unwrap_or_else(|_| text.to_string())
}

/// Boolean verdict from a `Judgement` field, or from the whole reply when
/// the field is missing. Only the part after the last question mark counts.
pub fn parse_judgement(text: &str) -> Option<bool> {
    let value = judgement_text(text);
    let verdict = words(after_question(&value)).find_map(|w| match w.as_str() {
        "true" | "yes" | "valid" | "useful" | "novel" | "sufficient" | "satisfied" => Some(true),
        "false" | "no" | "not" | "invalid" | "duplicated" | "duplicate" | "insufficient" => Some(false),
        _ => None,
    });
    verdict
}

/// Premise kind from an identification reply.
pub fn parse_determinacy(text: &str) -> Option<PremiseKind> {
    let value = judgement_text(text);
    let kind = words(after_question(&value)).find_map(|w| match w.as_str() {
        "not" | "no" | "indeterminate" | "false" => Some(PremiseKind::Indeterminate),
        "determinate" | "yes" | "true" => Some(PremiseKind::Determinate),
        _ => None,
    });
    kind
}

fn truth_word(text: &str) -> Option<Truth> {
    words(text).find_map(|w| match w.as_str() {
        "true" | "yes" => Some(Truth::True),
        "false" | "no" => Some(Truth::False),
        "unknown" | "uncertain" => Some(Truth::Unknown),
        _ => None,
    })
}

fn label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^A-Za-z0-9])\(?([A-Z])\)?(?:[^A-Za-z0-9']|$)").unwrap())
}

fn answer_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)answer\s+(?:is|should\s+be)\s*:?\s*([^\n]*)").unwrap())
}

fn last_label(text: &str, target: &Target) -> Option<String> {
    let mut best = None;
    let mut start = 0;
    while let Some(c) = label_regex().captures_at(text, start) {
        let m = c.get(1).unwrap();
        if target.options.iter().any(|o| o.label == m.as_str()) {
            best = Some(m.as_str().to_string());
        }
        start = m.end();
    }
    best
}

fn leading_label(value: &str, target: &Target) -> Option<String> {
    let token = value.split_whitespace().next()?;
    let token = token.trim_start_matches('(').trim_end_matches([')', '.', ',', ':', ';']);
    target.options.iter().find(|o| o.label == token).map(|o| o.label.clone())
}

fn option_text(value: &str, target: &Target) -> Option<String> {
    let lower = value.to_lowercase();
    target
        .options
        .iter()
        .filter(|o| !o.text.trim().is_empty() && lower.contains(&o.text.trim().trim_end_matches('.').to_lowercase()))
        .max_by_key(|o| o.text.len())
        .map(|o| o.label.clone())
}

fn truth_label(value: &str, target: &Target) -> Option<String> {
    truth_word(value).and_then(|t| target.label_for_truth(t)).map(str::to_string)
}

/// Final answer label from a conclusion reply.
pub fn parse_answer(text: &str, target: &Target) -> Answer {
    if let Ok(value) = parse_labeled_field(text, "judgement") {
        let found = last_label(&value, target)
            .or_else(|| truth_label(after_question(&value), target))
            .or_else(|| option_text(&value, target));
        if let Some(label) = found {
            return Answer::Label(label);
        }
    }
    if let Some(c) = answer_regex().captures_iter(text).last() {
        let value = c.get(1).map_or("", |m| m.as_str());
        let found = leading_label(value, target)
            .or_else(|| option_text(value, target))
            .or_else(|| truth_label(value, target));
        if let Some(label) = found {
            return Answer::Label(label);
        }
    }
    last_label(text, target)
        .or_else(|| option_text(text, target))
        .or_else(|| truth_label(text, target))
        .map_or(Answer::Abstain, Answer::Label)
}

/// Sentences ending in `.`, `!` or `?` followed by whitespace or the end.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AnswerOption;

    fn tfu() -> Target {
        Target {
            hypothesis: "The cat eats the bald eagle.".into(),
            question: "Is it true?".into(),
            options: vec![
                AnswerOption::new("A", "True"),
                AnswerOption::new("B", "False"),
                AnswerOption::new("C", "Unknown"),
            ],
            answer_key: Some("A".into()),
        }
    }

    #[test]
    fn quoted_and_unquoted_fields() {
        let r = parse_labeled_field("\"Judgement\": \"Is this deduction valid? True\"", "Judgement").unwrap();
        assert_eq!(r, "Is this deduction valid? True");
        let r = parse_labeled_field("proposition: The cat chases the dog", "proposition").unwrap();
        assert_eq!(r, "The cat chases the dog");
        let r = parse_labeled_field("``Judgement'': ``Is this deduction valid? False''", "judgement").unwrap();
        assert_eq!(r, "Is this deduction valid? False");
        assert!(matches!(parse_labeled_field("nothing here", "Judgement"), Err(BackendError::FieldNotFound(_))));
    }

    #[test]
    fn values_with_inner_quotes() {
        let text = "\"Judgement\": \"Is this \"Premise\" a \"determinate premise\" or not? Determinate\"\n\"Explanation\": \"x\"";
        let r = parse_labeled_field(text, "judgement").unwrap();
        assert_eq!(r, "Is this \"Premise\" a \"determinate premise\" or not? Determinate");
        assert_eq!(parse_determinacy(text), Some(PremiseKind::Determinate));
    }

    #[test]
    fn last_occurrence_wins() {
        let text = "Proposition: first\nmore text\nProposition: second";
        assert_eq!(parse_labeled_field(text, "proposition").unwrap(), "second");
        // "new proposition" should not be matched as "proposition" without a boundary
        assert_eq!(parse_labeled_field("xproposition: a\nproposition: b", "proposition").unwrap(), "b");
    }

    #[test]
    fn judgements() {
        assert_eq!(parse_judgement("\"Judgement\": \"Is this deduction valid? True\""), Some(true));
        assert_eq!(parse_judgement("Judgement: Is this proposition duplicated? Duplicated"), Some(false));
        assert_eq!(parse_judgement("I cannot say"), None);
        assert_eq!(parse_determinacy("Judgement: Is this premise determinate? Not determinate"), Some(PremiseKind::Indeterminate));
        assert_eq!(parse_determinacy("Judgement: \"Is this premise determinate? Determinate\""), Some(PremiseKind::Determinate));
    }

    #[test]
    fn answers() {
        let t = tfu();
        assert_eq!(parse_answer("The cat eats the bald eagle. So the answer is true.", &t), Answer::Label("A".into()));
        assert_eq!(parse_answer("So the answer is A) True.", &t), Answer::Label("A".into()));
        assert_eq!(parse_answer("Judgement: \"Is the hypothesis true? B\"", &t), Answer::Label("B".into()));
        assert_eq!(parse_answer("The statement is unknown", &t), Answer::Label("C".into()));
        assert_eq!(parse_answer("Not sure", &t), Answer::Abstain);
        assert_eq!(parse_answer("", &t), Answer::Abstain);
    }

    #[test]
    fn multiple_choice_answer() {
        let t = Target {
            hypothesis: String::new(),
            question: "Which is true?".into(),
            options: vec![
                AnswerOption::new("A", "Ana finished third"),
                AnswerOption::new("B", "Eli finished third"),
            ],
            answer_key: None,
        };
        assert_eq!(parse_answer("...So the answer is A) Ana finished third.", &t), Answer::Label("A".into()));
        assert_eq!(parse_answer("Clearly Eli finished third here", &t), Answer::Label("B".into()));
        assert_eq!(parse_answer("A golfer won", &t), Answer::Label("A".into()));
    }

    #[test]
    fn sentences() {
        let s = split_sentences("Ada finished above Mel. Ada finished third-to-last. Amy finished second? Yes");
        assert_eq!(s, vec!["Ada finished above Mel.", "Ada finished third-to-last.", "Amy finished second?", "Yes"]);
        assert_eq!(split_sentences("The value is 2.5 here."), vec!["The value is 2.5 here."]);
    }
}
