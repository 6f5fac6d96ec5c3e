//! Grammar for simple rule-base English.
//!
//! Facts: `[the] SUBJ (is|VERBs) [not] [the] OBJ`, `SUBJ does not VERB OBJ`.
//! Rules: `if ANT [and ANT]* then CONS`, plus `every X is Y`, `all Xs are Y`
//! and `ADJ things are Y`. Disjunctions: `SUBJ is either X or Y`, `A or B`.

use crate::prioritize::Lexicon;

use super::ast::{indefinite, singular, third_person, Atom, Clause, Rule, Term};
use super::OracleError;

const QUANTIFIERS: [&str; 5] = ["something", "someone", "somebody", "anything", "anyone"];
const PRONOUNS: [&str; 5] = ["it", "they", "them", "he", "she"];
const GROUP_NOUNS: [&str; 4] = ["things", "people", "ones", "animals"];

fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if matches!(c, ',' | ';' | ':' | '"' | '!' | '?') { ' ' } else { c })
        .collect();
    let mut tokens: Vec<String> = cleaned.split_whitespace().map(str::to_string).collect();
    while let Some(last) = tokens.last_mut() {
        let trimmed = last.trim_end_matches('.').to_string();
        if trimmed.is_empty() {
            tokens.pop();
        } else {
            *last = trimmed;
            break;
        }
    }
    tokens
}

struct Ctx {
    /// What "it"/"they" refer to inside the current statement.
    pronoun: Option<Term>,
}

struct Parser<'a> {
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, position: usize, message: impl Into<String>) -> OracleError {
        OracleError::Parse { text: self.text.to_string(), position, message: message.into() }
    }

    fn subject_term(&self, words: &[String], ctx: &Ctx, at: usize) -> Result<Term, OracleError> {
        if words.is_empty() {
            return Err(self.error(at, "missing subject"));
        }
        if words.len() == 1 {
            let w = words[0].as_str();
            if QUANTIFIERS.contains(&w) {
                return Ok(Term::Var);
            }
            if PRONOUNS.contains(&w) {
                return ctx.pronoun.clone().ok_or_else(|| self.error(at, "pronoun without referent"));
            }
        }
        if words.iter().any(|w| QUANTIFIERS.contains(&w.as_str()) || w == "and") {
            return Err(self.error(at, "compound subject"));
        }
        if words.len() > 2 && !matches!(words[0].as_str(), "the" | "a" | "an") {
            return Err(self.error(at, "unrecognised subject phrase"));
        }
        Ok(Term::Const(words.join(" ")))
    }

    fn object_term(&self, words: &[String], ctx: &Ctx, at: usize) -> Result<Option<Term>, OracleError> {
        match words {
            [] => Ok(None),
            [w] if QUANTIFIERS.contains(&w.as_str()) => Ok(Some(Term::Var)),
            [w] if PRONOUNS.contains(&w.as_str()) => {
                ctx.pronoun.clone().map(Some).ok_or_else(|| self.error(at, "pronoun without referent"))
            }
            [_] => Ok(Some(Term::Const(words[0].clone()))),
            [first, ..] if matches!(first.as_str(), "the" | "a" | "an") => {
                if words.iter().any(|w| QUANTIFIERS.contains(&w.as_str()) || w == "that" || w == "and") {
                    Err(self.error(at, "object is not a simple noun phrase"))
                } else {
                    Ok(Some(Term::Const(words.join(" "))))
                }
            }
            _ => Err(self.error(at, "object is not a simple noun phrase")),
        }
    }

    fn valid_object_words(words: &[String]) -> bool {
        match words {
            [] | [_] => true,
            [first, ..] => matches!(first.as_str(), "the" | "a" | "an"),
        }
    }

    /// Parses one literal starting at token offset `at` of the statement.
    fn atom(&self, tokens: &[String], ctx: &Ctx, at: usize) -> Result<Atom, OracleError> {
        if tokens.is_empty() {
            return Err(self.error(at, "empty clause"));
        }
        if tokens.len() == 1 {
            let w = tokens[0].as_str();
            if QUANTIFIERS.contains(&w) || PRONOUNS.contains(&w) {
                return Err(self.error(at, "bare pronoun"));
            }
            return Ok(Atom::symbol(w));
        }
        let plural_subject = matches!(tokens[0].as_str(), "they" | "them");
        let article = matches!(tokens[0].as_str(), "the" | "a" | "an")
            && !matches!(tokens[1].as_str(), "is" | "are" | "was" | "were" | "does" | "do" | "did");
        let start = if article { 2 } else { 1 };
        for i in start..tokens.len() {
            let tok = tokens[i].as_str();
            let rest = &tokens[i + 1..];
            let at_verb = at + i;
            match tok {
                "is" | "are" | "was" | "were" => {
                    let subject = self.subject_term(&tokens[..i], ctx, at)?;
                    let (positive, rest) = match rest.first().map(String::as_str) {
                        Some("not") => (false, &rest[1..]),
                        _ => (true, rest),
                    };
                    if rest.is_empty() {
                        return Err(self.error(at_verb + 1, "missing complement"));
                    }
                    if rest == ["false"] {
                        return Ok(Atom::new(subject, "is", Some(Term::constant("true")), !positive));
                    }
                    let object = self.object_term(rest, ctx, at_verb + 1)?;
                    return Ok(Atom { subject, relation: "is".into(), object, positive });
                }
                "does" | "do" | "did" if rest.first().is_some_and(|w| w == "not") && rest.len() >= 2 => {
                    let subject = self.subject_term(&tokens[..i], ctx, at)?;
                    let relation = third_person(&rest[1]);
                    let object = self.object_term(&rest[2..], ctx, at_verb + 3)?;
                    return Ok(Atom { subject, relation, object, positive: false });
                }
                _ => {}
            }
            let third = tok.ends_with('s') && !matches!(tok, "this" | "his" | "its" | "thus");
            let base_after_pronoun = plural_subject && i == 1;
            if (third || base_after_pronoun) && Self::valid_object_words(rest) {
                let subject = self.subject_term(&tokens[..i], ctx, at)?;
                let relation = if base_after_pronoun { third_person(tok) } else { tok.to_string() };
                let object = self.object_term(rest, ctx, at_verb + 1)?;
                return Ok(Atom { subject, relation, object, positive: true });
            }
        }
        Err(self.error(at, "no verb found"))
    }

    fn rule(&self, tokens: &[String]) -> Result<Clause, OracleError> {
        let then = tokens
            .iter()
            .position(|t| t == "then")
            .ok_or_else(|| self.error(0, "conditional without then"))?;
        let ant_tokens = &tokens[1..then];
        let cons_tokens = &tokens[then + 1..];
        let quantified = tokens.iter().any(|t| QUANTIFIERS.contains(&t.as_str()));
        let mut ctx = Ctx { pronoun: quantified.then_some(Term::Var) };

        let mut antecedents: Vec<Atom> = Vec::new();
        let mut offset = 1;
        for conjunct in ant_tokens.split(|t| t == "and") {
            let elided = |prev: &Atom| {
                // Elided subject: "if something is kind and red", "... and sees the lion".
                let subject = subject_words(&prev.subject);
                let with_copula: Vec<String> =
                    subject.iter().cloned().chain(["is".to_string()]).chain(conjunct.iter().cloned()).collect();
                let with_verb: Vec<String> = subject.into_iter().chain(conjunct.iter().cloned()).collect();
                self.atom(&with_copula, &ctx, offset).or_else(|_| self.atom(&with_verb, &ctx, offset))
            };
            let prev = antecedents.last().filter(|p| !is_symbol(p));
            let parsed = match prev {
                Some(prev) if conjunct.len() == 1 => elided(prev),
                Some(prev) => self.atom(conjunct, &ctx, offset).or_else(|e| elided(prev).map_err(|_| e)),
                None => self.atom(conjunct, &ctx, offset),
            }?;
            if antecedents.is_empty() && ctx.pronoun.is_none() {
                ctx.pronoun = Some(parsed.subject.clone());
            }
            antecedents.push(parsed);
            offset += conjunct.len() + 1;
        }
        if antecedents.is_empty() {
            return Err(self.error(1, "empty antecedent"));
        }
        let consequent = self.atom(cons_tokens, &ctx, then + 1)?;
        if consequent.has_var() && !antecedents.iter().any(Atom::has_var) {
            return Err(self.error(then + 1, "variable in consequent is not bound by an antecedent"));
        }
        Ok(Clause::Rule(Rule { antecedents, consequent }))
    }

    fn disjunction(&self, tokens: &[String]) -> Result<Clause, OracleError> {
        let ctx = Ctx { pronoun: None };
        let or = tokens.iter().position(|t| t == "or").ok_or_else(|| self.error(0, "missing or"))?;
        let (left, right) = if let Some(either) = tokens[..or].iter().position(|t| t == "either") {
            if either == 0 {
                (tokens[1..or].to_vec(), tokens[or + 1..].to_vec())
            } else {
                // "SUBJ is either X or Y": the right disjunct shares the subject and verb.
                let head = &tokens[..either];
                let left: Vec<String> = head.iter().chain(&tokens[either + 1..or]).cloned().collect();
                let right: Vec<String> = head.iter().chain(&tokens[or + 1..]).cloned().collect();
                (left, right)
            }
        } else {
            (tokens[..or].to_vec(), tokens[or + 1..].to_vec())
        };
        let a = self.atom(&left, &ctx, 0)?;
        let b = self.atom(&right, &ctx, or + 1)?;
        if a.has_var() || b.has_var() {
            return Err(self.error(0, "quantified disjunction"));
        }
        Ok(Clause::Disjunction(a, b))
    }

    /// `every cat is kind`, `all red cats are kind`, `kind things are red`.
    fn universal(&self, tokens: &[String]) -> Option<Result<Clause, OracleError>> {
        let lexicon = Lexicon::builtin();
        let (words, verb_at, plural) = match tokens.first()?.as_str() {
            "every" | "each" => {
                let v = tokens
                    .iter()
                    .position(|t| t == "is")
                    .or_else(|| (2..tokens.len()).find(|&i| is_verb_like(&tokens[i])))?;
                if v < 2 {
                    return None;
                }
                (&tokens[1..v], v, false)
            }
            first => {
                let skip = usize::from(first == "all");
                let v = tokens.iter().position(|t| t == "are")?;
                if v <= skip {
                    return None;
                }
                (&tokens[skip..v], v, true)
            }
        };
        let excluded = |w: &String| {
            matches!(w.as_str(), "the" | "and" | "a" | "an")
                || QUANTIFIERS.contains(&w.as_str())
                || PRONOUNS.contains(&w.as_str())
        };
        if words.is_empty() || words.iter().any(excluded) {
            return None;
        }
        let mut antecedents = Vec::new();
        let (modifiers, class) = match words.split_last() {
            Some((last, rest)) if GROUP_NOUNS.contains(&last.as_str()) => (rest, None),
            Some((last, rest)) => {
                let noun = if plural { singular(last, lexicon) } else { last.clone() };
                (rest, Some(noun))
            }
            None => return None,
        };
        for m in modifiers {
            antecedents.push(Atom::new(Term::Var, "is", Some(Term::Const(m.clone())), true));
        }
        if let Some(noun) = class {
            antecedents.push(Atom::new(Term::Var, "is", Some(Term::Const(indefinite(&noun))), true));
        }
        if antecedents.is_empty() {
            return None;
        }

        let mut rest: Vec<String> = tokens[verb_at..].to_vec();
        if plural {
            rest[0] = "is".to_string();
            let complement_at = if rest.get(1).is_some_and(|w| w == "not") { 2 } else { 1 };
            if rest.len() == complement_at + 1 && !lexicon.is_adjective(&rest[complement_at]) {
                let noun = singular(&rest[complement_at], lexicon);
                rest.splice(complement_at.., indefinite(&noun).split(' ').map(str::to_string));
            }
        }
        let cons_tokens: Vec<String> = std::iter::once("something".to_string()).chain(rest).collect();
        let ctx = Ctx { pronoun: Some(Term::Var) };
        Some(self.atom(&cons_tokens, &ctx, verb_at).map(|consequent| Clause::Rule(Rule { antecedents, consequent })))
    }
}

fn is_symbol(atom: &Atom) -> bool {
    atom.is_copula()
        && atom.object == Some(Term::constant("true"))
        && atom.subject.as_const().is_some_and(|s| !s.contains(' '))
}

fn is_verb_like(token: &str) -> bool {
    token.ends_with('s') && !matches!(token, "this" | "his" | "its")
}

fn subject_words(term: &Term) -> Vec<String> {
    match term {
        Term::Var => vec!["something".to_string()],
        Term::Const(c) => c.split(' ').map(str::to_string).collect(),
    }
}

/// Parses one statement into a fact, rule or disjunction.
pub fn parse_statement(text: &str) -> Result<Clause, OracleError> {
    let parser = Parser { text };
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(parser.error(0, "empty statement"));
    }
    if tokens[0] == "if" {
        return parser.rule(&tokens);
    }
    if tokens.iter().any(|t| t == "or") {
        return parser.disjunction(&tokens);
    }
    if let Some(result) = parser.universal(&tokens) {
        if result.is_ok() {
            return result;
        }
    }
    let atom = parser.atom(&tokens, &Ctx { pronoun: None }, 0)?;
    if atom.has_var() {
        return Err(parser.error(0, "fact mentions an unbound variable"));
    }
    Ok(Clause::Fact(atom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ast::unparse;

    fn c(s: &str) -> Term {
        Term::constant(s)
    }

    #[test]
    fn facts() {
        assert_eq!(
            parse_statement("The bald eagle chases the cat.").unwrap(),
            Clause::Fact(Atom::new(c("the bald eagle"), "chases", Some(c("the cat")), true))
        );
        assert_eq!(
            parse_statement("The dog does not see the lion.").unwrap(),
            Clause::Fact(Atom::new(c("the dog"), "sees", Some(c("the lion")), false))
        );
        assert_eq!(
            parse_statement("Bob is not kind").unwrap(),
            Clause::Fact(Atom::new(c("bob"), "is", Some(c("kind")), false))
        );
        assert_eq!(parse_statement("A is true").unwrap(), Clause::Fact(Atom::symbol("a")));
        assert_eq!(parse_statement("B is not true").unwrap(), Clause::Fact(Atom::symbol("b").negated()));
        assert_eq!(parse_statement("Max is a wumpus").unwrap().to_string(), "max is a wumpus");
    }

    #[test]
    fn rules() {
        let r = parse_statement("If something chases the cat then the cat chases the dog.").unwrap();
        assert_eq!(
            r,
            Clause::Rule(Rule {
                antecedents: vec![Atom::new(Term::Var, "chases", Some(c("the cat")), true)],
                consequent: Atom::new(c("the cat"), "chases", Some(c("the dog")), true),
            })
        );
        let r = parse_statement("If something is kind and it sees the lion then it is not red.").unwrap();
        assert_eq!(unparse(&r), "if something is kind and it sees the lion then it is not red");
        let r = parse_statement("If A, then B.").unwrap();
        assert_eq!(
            r,
            Clause::Rule(Rule { antecedents: vec![Atom::symbol("a")], consequent: Atom::symbol("b") })
        );
        let r = parse_statement("If the dog is red then it is kind.").unwrap();
        assert_eq!(unparse(&r), "if the dog is red then the dog is kind");
    }

    #[test]
    fn elided_conjuncts() {
        let r = parse_statement("If something is kind and red then it is big").unwrap();
        assert_eq!(unparse(&r), "if something is kind and it is red then it is big");
        let r = parse_statement("If someone is kind and sees the lion then they are red").unwrap();
        assert_eq!(unparse(&r), "if something is kind and it sees the lion then it is red");
    }

    #[test]
    fn universals() {
        assert_eq!(unparse(&parse_statement("Kind things are red.").unwrap()), "if something is kind then it is red");
        assert_eq!(
            unparse(&parse_statement("Big, young people are not rough.").unwrap()),
            "if something is big and it is young then it is not rough"
        );
        assert_eq!(
            unparse(&parse_statement("Every tumpus is a wumpus.").unwrap()),
            "if something is a tumpus then it is a wumpus"
        );
        assert_eq!(
            unparse(&parse_statement("Wumpuses are not nervous.").unwrap()),
            "if something is a wumpus then it is not nervous"
        );
        assert_eq!(
            unparse(&parse_statement("All cats are animals.").unwrap()),
            "if something is a cat then it is an animal"
        );
    }

    #[test]
    fn disjunctions() {
        assert_eq!(
            parse_statement("A is either C or D.").unwrap(),
            Clause::Disjunction(Atom::new(c("a"), "is", Some(c("c")), true), Atom::new(c("a"), "is", Some(c("d")), true))
        );
        assert!(matches!(parse_statement("Either the cat is red or the dog is blue").unwrap(), Clause::Disjunction(..)));
    }

    #[test]
    fn rejects() {
        for s in [
            "Something chases the cat.",
            "The bald eagle is something that chases the cat.",
            "The dog and the lion both see the bald eagle.",
            "If something is cold",
            "If the cat is red then something is blue",
            "",
        ] {
            assert!(parse_statement(s).is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn parse_error_reports_position() {
        match parse_statement("If the cat is red then something is blue") {
            Err(OracleError::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
