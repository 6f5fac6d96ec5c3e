//! Iterative premise-driven logical reasoning.
//!
//! A problem's premises are split into determinate and indeterminate sets,
//! then a loop repeatedly picks the most relevant determinate premise, scores
//! supplementary premises against it, asks a backend for a new proposition,
//! verifies it three ways (validity, usefulness, novelty) and records the
//! attempt in a reasoning memory. The loop ends when enough new determinate
//! premises were accumulated or the target is already decidable, after which
//! a conclusion is drawn.
//!
//! Backends are pluggable: a chat-completion endpoint, a scripted replay of
//! recorded transcripts, or the built-in symbolic forward-chaining oracle.

pub mod backends;
pub mod controller;
pub mod domain;
pub mod error;
pub mod explore;
pub mod harness;
pub mod identify;
pub mod memory;
pub mod oracle;
pub mod prioritize;
pub mod synth;

pub use controller::{run_case, CaseTrace};
pub use domain::{
    normalize, Ablation, Answer, AnswerOption, BackendChoice, Dataset, EngineConfig, Origin,
    Premise, PremiseId, PremiseKind, ProblemInstance, Target, Verdict,
};
pub use error::{Error, Result};
