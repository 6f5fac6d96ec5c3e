//! Dataset loading, batch evaluation and reports.

pub mod datasets;
pub mod report;

pub use datasets::{load_dataset, parse_dataset, parse_record};
pub use report::{read_results, render_report, write_report, Aggregates, CaseResult, ReportFormat, RunReport};

use rayon::prelude::*;

use crate::backends::{Backend, Fixture};
use crate::controller::{run_case, CaseTrace};
use crate::domain::{EngineConfig, ProblemInstance};
use crate::error::{Error, Result};

/// The case recorded in a fixture, with the fixture's config overrides.
pub fn fixture_case(fixture: &Fixture) -> Result<(ProblemInstance, EngineConfig)> {
    let record = fixture.case.as_ref().ok_or_else(|| Error::Config("fixture has no case record".into()))?;
    Ok((parse_record(record)?, fixture.config.clone().unwrap_or_default()))
}

/// Runs every case on at most `parallelism` workers. Traces come back sorted
/// by case id whatever the completion order.
pub fn run_all(
    cases: &[ProblemInstance],
    config: &EngineConfig,
    backend: &dyn Backend,
    parallelism: usize,
) -> Result<Vec<CaseTrace>> {
    if cases.is_empty() {
        return Err(Error::Config("no cases to evaluate".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut traces: Vec<CaseTrace> =
        pool.install(|| cases.par_iter().map(|case| run_case(case, config, backend)).collect());
    traces.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(traces)
}

pub fn evaluate(
    cases: &[ProblemInstance],
    config: &EngineConfig,
    backend: &dyn Backend,
    parallelism: usize,
) -> Result<RunReport> {
    Ok(evaluate_with_traces(cases, config, backend, parallelism)?.0)
}

pub fn evaluate_with_traces(
    cases: &[ProblemInstance],
    config: &EngineConfig,
    backend: &dyn Backend,
    parallelism: usize,
) -> Result<(RunReport, Vec<CaseTrace>)> {
    let traces = run_all(cases, config, backend, parallelism)?;
    let dataset = cases[0].dataset;
    let dataset = cases.iter().all(|c| c.dataset == dataset).then_some(dataset);
    Ok((RunReport::from_traces(dataset, config.clone(), &traces), traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::SymbolicBackend;
    use crate::domain::Ablation;
    use crate::synth::generate_suite;

    #[test]
    fn reports_are_identical_across_parallelism() {
        let cases: Vec<ProblemInstance> = generate_suite(24, 5).unwrap().into_iter().map(|c| c.problem).collect();
        let backend = SymbolicBackend::default();
        for ablation in [None, Some(Ablation::NoPriority)] {
            let config = EngineConfig { ablation: ablation.into_iter().collect(), seed: 3, ..EngineConfig::default() };
            let one = render_report(&evaluate(&cases, &config, &backend, 1).unwrap(), ReportFormat::Json).unwrap();
            let four = render_report(&evaluate(&cases, &config, &backend, 4).unwrap(), ReportFormat::Json).unwrap();
            assert_eq!(one, four);
        }
    }

    #[test]
    fn metric_identities() {
        let cases: Vec<ProblemInstance> = generate_suite(12, 9).unwrap().into_iter().map(|c| c.problem).collect();
        let report = evaluate(&cases, &EngineConfig::default(), &SymbolicBackend::default(), 2).unwrap();
        let a = &report.aggregates;
        assert_eq!(a.cases, 12);
        let correct = a.accuracy * a.cases as f64 / 100.0;
        assert!((correct - correct.round()).abs() < 1e-9);
        assert!(a.avg_steps >= 1.0);
        if let Some(spd) = a.steps_per_determinate {
            assert!(spd >= 1.0);
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(evaluate(&[], &EngineConfig::default(), &SymbolicBackend::default(), 1).is_err());
    }
}
