use std::fmt::Write as _;

use determlr::controller::{CaseTrace, IterationKind};
use determlr::domain::Polarity;

/// Plain-text rendering of a case trace for the terminal.
pub fn render(trace: &CaseTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "case {} ({}, {} backend)", trace.case_id, trace.dataset, format!("{:?}", trace.backend).to_lowercase());
    if let Some(topic) = &trace.topic {
        let _ = writeln!(out, "topic: {topic}");
    }
    for b in &trace.boundary_conditions {
        let _ = writeln!(out, "boundary: {b}");
    }
    if let Some(ident) = &trace.identification {
        let ids = |ps: &[determlr::Premise]| ps.iter().map(|p| p.id.as_str().to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "determinate: {}", ids(&ident.determinate));
        let _ = writeln!(out, "indeterminate: {}", ids(&ident.indeterminate));
    }
    for r in &trace.iterations {
        let kind = match r.kind {
            IterationKind::Explore => "explore",
            IterationKind::Transform => "transform",
        };
        let sources: Vec<&str> = r.supplements.iter().map(|s| s.id.as_str()).collect();
        let outcome = match (r.polarity, &r.proposition_id) {
            (Polarity::Positive, Some(id)) => format!("admitted as {id}"),
            _ if r.proposition.is_empty() => "nothing proposed".to_string(),
            _ => "rejected".to_string(),
        };
        let _ = write!(out, "t{} {kind} {}", r.t, r.primary);
        if !sources.is_empty() {
            let _ = write!(out, " + {}", sources.join(", "));
        }
        let _ = writeln!(out, ": {:?} {outcome}", r.proposition);
    }
    for e in &trace.errors {
        let _ = writeln!(out, "error: {e}");
    }
    let verdict = match &trace.gold {
        Some(gold) if trace.correct => format!(" (gold {gold}, correct)"),
        Some(gold) => format!(" (gold {gold}, wrong)"),
        None => String::new(),
    };
    let _ = writeln!(out, "answer: {}{verdict}", trace.final_answer);
    let _ = writeln!(out, "steps: {}, derived premises: {}", trace.step_count, trace.derived_count);
    out
}
