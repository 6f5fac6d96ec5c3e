use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::CaseTrace;
use crate::domain::{Answer, Dataset, EngineConfig};
use crate::error::{Error, Result};

/// One row of a run: what a case answered and what it cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub answer: Answer,
    #[serde(default)]
    pub gold: Option<String>,
    pub correct: bool,
    pub steps: u32,
    /// New determinate premises admitted to memory.
    pub derived: usize,
    #[serde(default)]
    pub backend_seconds: f64,
    #[serde(default)]
    pub wall_seconds: f64,
    #[serde(default)]
    pub backend_calls: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl From<&CaseTrace> for CaseResult {
    fn from(t: &CaseTrace) -> Self {
        Self {
            case_id: t.case_id.clone(),
            answer: t.final_answer.clone(),
            gold: t.gold.clone(),
            correct: t.correct,
            steps: t.step_count,
            derived: t.derived_count,
            backend_seconds: t.timings.backend_seconds,
            wall_seconds: t.timings.wall_seconds,
            backend_calls: t.timings.backend_calls,
            errors: t.errors.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub cases: usize,
    pub correct: usize,
    pub abstained: usize,
    pub failed: usize,
    /// Percentage of correct cases.
    pub accuracy: f64,
    pub avg_steps: f64,
    pub total_steps: u64,
    pub total_derived: u64,
    /// Total steps over total admitted premises; absent when none were admitted.
    pub steps_per_determinate: Option<f64>,
    /// Backend time per step, in seconds.
    pub avg_time_per_step: f64,
    pub avg_time_per_case: f64,
}

impl Aggregates {
    pub fn compute(results: &[CaseResult]) -> Self {
        let cases = results.len();
        let correct = results.iter().filter(|r| r.correct).count();
        let total_steps: u64 = results.iter().map(|r| u64::from(r.steps)).sum();
        let total_derived: u64 = results.iter().map(|r| r.derived as u64).sum();
        let backend: f64 = results.iter().map(|r| r.backend_seconds).sum();
        let wall: f64 = results.iter().map(|r| r.wall_seconds).sum();
        let per = |x: f64, n: u64| if n == 0 { 0.0 } else { x / n as f64 };
        Self {
            cases,
            correct,
            abstained: results.iter().filter(|r| r.answer == Answer::Abstain).count(),
            failed: results.iter().filter(|r| !r.errors.is_empty()).count(),
            accuracy: per(100.0 * correct as f64, cases as u64),
            avg_steps: per(total_steps as f64, cases as u64),
            total_steps,
            total_derived,
            steps_per_determinate: (total_derived > 0).then(|| total_steps as f64 / total_derived as f64),
            avg_time_per_step: per(backend, total_steps),
            avg_time_per_case: per(wall, cases as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: Option<Dataset>,
    pub config: EngineConfig,
    pub cases: Vec<CaseResult>,
    pub aggregates: Aggregates,
}

impl RunReport {
    /// Sorts the rows by case id and computes the aggregates.
    pub fn from_results(dataset: Option<Dataset>, config: EngineConfig, mut cases: Vec<CaseResult>) -> Self {
        cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let aggregates = Aggregates::compute(&cases);
        Self { dataset, config, cases, aggregates }
    }

    pub fn from_traces(dataset: Option<Dataset>, config: EngineConfig, traces: &[CaseTrace]) -> Self {
        Self::from_results(dataset, config, traces.iter().map(CaseResult::from).collect())
    }

    /// The one-line aggregate summary used on stdout and in markdown.
    pub fn summary_line(&self) -> String {
        let a = &self.aggregates;
        let spd = a.steps_per_determinate.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        format!(
            "{}: accuracy {:.2}% ({}/{}), avg steps {:.2}, steps per determinate {spd}",
            self.dataset.map_or("all", |d| d.as_str()),
            a.accuracy,
            a.correct,
            a.cases,
            a.avg_steps,
        )
    }

    pub fn to_markdown(&self) -> String {
        let a = &self.aggregates;
        let mut out = String::new();
        let _ = writeln!(out, "# Run report\n");
        let _ = writeln!(out, "{}\n", self.summary_line());
        let _ = writeln!(out, "| Dataset | Cases | Correct | Accuracy (%) | Avg steps | Steps/determinate | Time/step (s) | Time/case (s) |");
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.2} | {:.2} | {} | {:.4} | {:.4} |",
            self.dataset.map_or("all", |d| d.as_str()),
            a.cases,
            a.correct,
            a.accuracy,
            a.avg_steps,
            a.steps_per_determinate.map_or_else(|| "n/a".into(), |v| format!("{v:.2}")),
            a.avg_time_per_step,
            a.avg_time_per_case,
        );
        if a.abstained > 0 || a.failed > 0 {
            let _ = writeln!(out, "\n{} abstained, {} failed.", a.abstained, a.failed);
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            case_id: &'a str,
            answer: String,
            gold: &'a str,
            correct: bool,
            steps: u32,
            derived: usize,
            backend_seconds: f64,
            wall_seconds: f64,
            backend_calls: u32,
            errors: String,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cases {
            w.serialize(Row {
                case_id: &c.case_id,
                answer: c.answer.to_string(),
                gold: c.gold.as_deref().unwrap_or(""),
                correct: c.correct,
                steps: c.steps,
                derived: c.derived,
                backend_seconds: c.backend_seconds,
                wall_seconds: c.wall_seconds,
                backend_calls: c.backend_calls,
                errors: c.errors.join("; "),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Markdown => Ok(report.to_markdown()),
    }
}

pub fn write_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<()> {
    fs::write(path, render_report(report, format)?)?;
    Ok(())
}

/// Reads per-case rows from JSON lines, one `CaseResult` or `CaseTrace` per line.
pub fn read_results(text: &str) -> Result<Vec<CaseResult>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(index, line)| {
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| Error::Schema { index, message: format!("invalid JSON: {e}") })?;
            let parsed = if value.get("step_count").is_some() {
                serde_json::from_value::<CaseTrace>(value).map(|t| CaseResult::from(&t))
            } else {
                serde_json::from_value::<CaseResult>(value)
            };
            parsed.map_err(|e| Error::Schema { index, message: e.to_string() })
        })
        .collect()
}
