use determlr::backends::{Fixture, ReplayBackend, SymbolicBackend};
use determlr::controller::{memory_from_trace, run_case, run_case_with_memory};
use determlr::harness::{evaluate, fixture_case, parse_dataset, render_report, ReportFormat};
use determlr::synth::generate_suite;
use determlr::{Ablation, Answer, Dataset, EngineConfig, PremiseKind};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn bald_eagle() -> Fixture {
    Fixture::load(format!("{FIXTURES}/bald_eagle.json").as_ref()).unwrap()
}

#[test]
fn ablations_show_in_traces() {
    let suite = generate_suite(30, 41).unwrap();
    let backend = SymbolicBackend::default();
    for case in &suite {
        let p = &case.problem;
        let no_memory = EngineConfig { ablation: [Ablation::NoMemory].into(), ..EngineConfig::default() };
        let t = run_case(p, &no_memory, &backend);
        assert!(t.iterations.iter().all(|r| r.history.is_empty()));

        let no_priority = EngineConfig { ablation: [Ablation::NoPriority].into(), seed: 5, ..EngineConfig::default() };
        let t = run_case(p, &no_priority, &backend);
        assert!(t.iterations.iter().flat_map(|r| &r.supplements).all(|s| s.score.is_none()));

        let no_identify = EngineConfig { ablation: [Ablation::NoIdentify].into(), ..EngineConfig::default() };
        let t = run_case(p, &no_identify, &backend);
        let ident = t.identification.as_ref().unwrap();
        assert!(ident.indeterminate.is_empty());
        assert!(ident.determinate.iter().all(|p| p.kind == Some(PremiseKind::Determinate)));
    }
}

#[test]
fn replayed_memory_matches_rebuilt_memory() {
    let fx = bald_eagle();
    let (problem, config) = fixture_case(&fx).unwrap();
    let (trace, memory) = run_case_with_memory(&problem, &config, &ReplayBackend::new(&fx));
    let memory = memory.unwrap();
    assert_eq!(memory_from_trace(&trace).unwrap(), memory);
    assert_eq!(memory.derived_count(), 7);
    assert_eq!(memory.len(), 18 + 7);
}

#[test]
fn exhausted_fixture_abstains_with_an_error() {
    let mut fx = bald_eagle();
    fx.entries.retain(|e| e.stage != determlr::backends::Stage::Conclude);
    let (problem, config) = fixture_case(&fx).unwrap();
    let trace = run_case(&problem, &config, &ReplayBackend::new(&fx));
    assert_eq!(trace.final_answer, Answer::Abstain);
    assert!(!trace.correct);
    assert!(!trace.errors.is_empty());
}

#[test]
fn sample_dataset_through_the_harness() {
    let text = std::fs::read_to_string(format!("{FIXTURES}/datasets/proofwriter_sample.jsonl")).unwrap();
    let cases = parse_dataset(Dataset::ProofWriter, &text).unwrap();
    assert_eq!(cases.len(), 6);
    let backend = SymbolicBackend::default();
    let report = evaluate(&cases, &EngineConfig::default(), &backend, 2).unwrap();
    assert_eq!(report.aggregates.correct, 6);
    let again = evaluate(&cases, &EngineConfig::default(), &backend, 1).unwrap();
    assert_eq!(
        render_report(&report, ReportFormat::Json).unwrap(),
        render_report(&again, ReportFormat::Json).unwrap()
    );
}

#[test]
fn larger_n_never_needs_fewer_steps_per_case() {
    let suite = generate_suite(40, 13).unwrap();
    let backend = SymbolicBackend::default();
    for case in &suite {
        let mut last = 0;
        for n in 1..=5 {
            let config = EngineConfig { n_required_determinate: n, ..EngineConfig::default() };
            let steps = run_case(&case.problem, &config, &backend).step_count;
            assert!(steps >= last, "{} n={n}: {steps} < {last}", case.problem.case_id);
            last = steps;
        }
    }
}
