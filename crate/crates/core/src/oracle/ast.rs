use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::prioritize::Lexicon;

/// An entity, or the single universally quantified variable of a rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var,
    Const(String),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var)
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var => None,
        }
    }

    fn substitute(&self, value: &str) -> Term {
        match self {
            Term::Var => Term::Const(value.to_string()),
            t => t.clone(),
        }
    }
}

/// `subject relation [object]`, possibly negated. The copula is stored as "is"
/// and verbs in third-person singular form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub subject: Term,
    pub relation: String,
    pub object: Option<Term>,
    pub positive: bool,
}

impl Atom {
    pub fn new(subject: Term, relation: &str, object: Option<Term>, positive: bool) -> Self {
        Self { subject, relation: relation.to_string(), object, positive }
    }

    /// Propositional symbol `name`, read as "name is true".
    pub fn symbol(name: &str) -> Self {
        Atom::new(Term::constant(name), "is", Some(Term::constant("true")), true)
    }

    pub fn negated(&self) -> Atom {
        Atom { positive: !self.positive, ..self.clone() }
    }

    pub fn has_var(&self) -> bool {
        self.subject.is_var() || self.object.as_ref().is_some_and(Term::is_var)
    }

    pub fn is_copula(&self) -> bool {
        self.relation == "is"
    }

    pub fn ground(&self, value: &str) -> Atom {
        Atom {
            subject: self.subject.substitute(value),
            relation: self.relation.clone(),
            object: self.object.as_ref().map(|o| o.substitute(value)),
            positive: self.positive,
        }
    }

    /// Constants that name entities: the subject, and the object of a non-copula relation.
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        let object = if self.is_copula() { None } else { self.object.as_ref().and_then(Term::as_const) };
        self.subject.as_const().into_iter().chain(object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub antecedents: Vec<Atom>,
    pub consequent: Atom,
}

impl Rule {
    pub fn has_var(&self) -> bool {
        self.consequent.has_var() || self.antecedents.iter().any(Atom::has_var)
    }

    pub fn ground(&self, value: &str) -> Rule {
        Rule {
            antecedents: self.antecedents.iter().map(|a| a.ground(value)).collect(),
            consequent: self.consequent.ground(value),
        }
    }

    pub fn is_tautology(&self) -> bool {
        self.antecedents.contains(&self.consequent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Clause {
    Fact(Atom),
    Rule(Rule),
    Disjunction(Atom, Atom),
}

impl Clause {
    pub fn atoms(&self) -> Vec<&Atom> {
        match self {
            Clause::Fact(a) => vec![a],
            Clause::Rule(r) => r.antecedents.iter().chain(std::iter::once(&r.consequent)).collect(),
            Clause::Disjunction(a, b) => vec![a, b],
        }
    }

    pub fn as_fact(&self) -> Option<&Atom> {
        match self {
            Clause::Fact(a) => Some(a),
            _ => None,
        }
    }
}

/// Third-person singular form of a base verb.
pub fn third_person(base: &str) -> String {
    let ends = |s: &str| base.ends_with(s);
    if ends("s") || ends("sh") || ends("ch") || ends("x") || ends("z") || ends("o") {
        format!("{base}es")
    } else if ends("y") && base.len() > 1 {
        let stem = &base[..base.len() - 1];
        if stem.ends_with(|c: char| "aeiou".contains(c)) {
            format!("{base}s")
        } else {
            format!("{stem}ies")
        }
    } else {
        format!("{base}s")
    }
}

/// Base form of a third-person singular verb.
pub fn base_form(verb: &str) -> String {
    if let Some(stem) = verb.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes", "oes"] {
        if verb.ends_with(suffix) {
            return verb[..verb.len() - 2].to_string();
        }
    }
    verb.strip_suffix('s').unwrap_or(verb).to_string()
}

fn is_vowel_start(word: &str) -> bool {
    word.starts_with(|c: char| "aeiou".contains(c))
}

/// Indefinite noun phrase for a class name.
pub fn indefinite(noun: &str) -> String {
    if is_vowel_start(noun) {
        format!("an {noun}")
    } else {
        format!("a {noun}")
    }
}

struct VarNamer {
    mentioned: bool,
}

impl VarNamer {
    fn term(&mut self, term: &Term) -> String {
        match term {
            Term::Const(c) => c.clone(),
            Term::Var if self.mentioned => "it".to_string(),
            Term::Var => {
                self.mentioned = true;
                "something".to_string()
            }
        }
    }
}

fn atom_text(atom: &Atom, namer: &mut VarNamer) -> String {
    let subject = namer.term(&atom.subject);
    let object = atom.object.as_ref().map(|o| namer.term(o));
    let mut out = subject;
    if atom.is_copula() {
        out.push_str(if atom.positive { " is" } else { " is not" });
    } else if atom.positive {
        out.push(' ');
        out.push_str(&atom.relation);
    } else {
        out.push_str(" does not ");
        out.push_str(&base_form(&atom.relation));
    }
    if let Some(o) = object {
        out.push(' ');
        out.push_str(&o);
    }
    out
}

/// Lowercase English rendering without terminal punctuation.
pub fn unparse(clause: &Clause) -> String {
    let mut namer = VarNamer { mentioned: false };
    match clause {
        Clause::Fact(a) => atom_text(a, &mut namer),
        Clause::Rule(r) => {
            let ants: Vec<String> = r.antecedents.iter().map(|a| atom_text(a, &mut namer)).collect();
            format!("if {} then {}", ants.join(" and "), atom_text(&r.consequent, &mut namer))
        }
        Clause::Disjunction(a, b) => {
            if a.subject == b.subject && a.is_copula() && b.is_copula() && a.positive && b.positive {
                let subject = namer.term(&a.subject);
                let obj = |x: &Atom| x.object.as_ref().map(namer_free).unwrap_or_default();
                format!("{subject} is either {} or {}", obj(a), obj(b))
            } else {
                let left = atom_text(a, &mut namer);
                format!("either {left} or {}", atom_text(b, &mut namer))
            }
        }
    }
}

fn namer_free(term: &Term) -> String {
    match term {
        Term::Const(c) => c.clone(),
        Term::Var => "something".to_string(),
    }
}

/// Restores capitalization in generated text: the first letter, plus every
/// word that the source statements only ever capitalize mid-sentence.
pub fn restore_case(text: &str, sources: &[&str]) -> String {
    let mut capitalized: BTreeMap<String, String> = BTreeMap::new();
    for source in sources {
        let words = source.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''));
        for (i, word) in words.filter(|w| !w.is_empty()).enumerate() {
            if i > 0 && word.chars().next().is_some_and(char::is_uppercase) {
                capitalized.insert(word.to_lowercase(), word.to_string());
            }
        }
    }
    let mut out = String::with_capacity(text.len() + 1);
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            match capitalized.get(word.as_str()) {
                Some(c) => out.push_str(c),
                None => out.push_str(word),
            }
            word.clear();
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '-' || ch == '\'' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out);
    let mut chars = out.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

/// Unparse, restore case and add a terminal period.
pub fn render(clause: &Clause, sources: &[&str]) -> String {
    format!("{}.", restore_case(&unparse(clause), sources))
}

/// Singular form of a plural class noun; adjectives and non-plurals pass through.
pub fn singular(word: &str, lexicon: &Lexicon) -> String {
    if lexicon.is_adjective(word) || word.ends_with("ss") || word.ends_with("ous") || word.ends_with("is") {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["uses", "sses", "shes", "ches", "xes", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    word.strip_suffix('s').unwrap_or(word).to_string()
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&atom_text(self, &mut VarNamer { mentioned: false }))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&unparse(self))
    }
}
