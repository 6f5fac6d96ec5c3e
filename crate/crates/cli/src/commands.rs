use std::fs;
use std::io::Read as _;
use std::path::Path;

use determlr::controller::{run_case, CaseTrace};
use determlr::harness::{
    evaluate_with_traces, fixture_case, load_dataset, parse_dataset, parse_record, read_results, render_report,
    ReportFormat, RunReport,
};
use determlr::synth::cross_check_random;
use determlr::{BackendChoice, EngineConfig, ProblemInstance};

use crate::settings::{build_backend, load_fixture, resolve};
use crate::{trace_text, BackendArgs, Failure, OracleArgs, ReplayArgs, ReportArgs, RunArgs, SolveArgs};

fn extension(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Json => "json",
        ReportFormat::Csv => "csv",
        ReportFormat::Markdown => "md",
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Execution(format!("{}: {e}", path.display())))
}

fn trace_json(trace: &CaseTrace) -> String {
    serde_json::to_string_pretty(trace).expect("traces serialize") + "\n"
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    if args.parallel == 0 {
        return Err(Failure::Usage("--parallel must be at least 1".into()));
    }
    let settings = resolve(EngineConfig::default(), &args.engine, &args.backend)?;
    let backend = build_backend(&settings)?;
    let cases = load_dataset(args.dataset, &args.path)?;
    let (report, traces) = evaluate_with_traces(&cases, &settings.engine, backend.as_ref(), args.parallel)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let name = format!("report.{}", extension(args.format));
        write(&dir.join(name), &render_report(&report, args.format)?)?;
        let lines: String = traces.iter().map(|t| serde_json::to_string(t).expect("traces serialize") + "\n").collect();
        write(&dir.join("traces.jsonl"), &lines)?;
    }
    println!("{}", report.summary_line());
    Ok(())
}

fn read_input(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(|e| Failure::Execution(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            Ok(text)
        }
    }
}

fn single_case(args: &SolveArgs) -> Result<ProblemInstance, Failure> {
    let text = read_input(args.path.as_deref())?;
    let mut cases = match args.dataset {
        Some(dataset) => parse_dataset(dataset, &text)?,
        None => {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Execution(format!("case record: {e}")))?;
            vec![parse_record(&value)?]
        }
    };
    if cases.len() != 1 {
        return Err(Failure::Execution(format!("expected one case record, found {}", cases.len())));
    }
    Ok(cases.remove(0))
}

/// Prints the trace, writes it when asked, and fails when the case hit errors.
fn finish(trace: &CaseTrace, out: Option<&Path>) -> Result<(), Failure> {
    print!("{}", trace_text::render(trace));
    if let Some(path) = out {
        write(path, &trace_json(trace))?;
    }
    if trace.errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Execution(format!("case {} finished with errors", trace.case_id)))
    }
}

pub fn solve(args: SolveArgs) -> Result<(), Failure> {
    let settings = resolve(EngineConfig::default(), &args.engine, &args.backend)?;
    let case = single_case(&args)?;
    let backend = build_backend(&settings)?;
    let trace = run_case(&case, &settings.engine, backend.as_ref());
    finish(&trace, args.out.as_deref())
}

pub fn replay(args: ReplayArgs) -> Result<(), Failure> {
    let fixture = load_fixture(&args.fixture)?;
    let (case, base) = fixture_case(&fixture)?;
    let backend_args =
        BackendArgs { backend: Some(BackendChoice::Replay), fixture: Some(args.fixture.clone()), ..BackendArgs::default() };
    let settings = resolve(base, &args.engine, &backend_args)?;
    let backend = build_backend(&settings)?;
    let trace = run_case(&case, &settings.engine, backend.as_ref());
    finish(&trace, args.out.as_deref())
}

pub fn oracle_check(args: OracleArgs) -> Result<(), Failure> {
    if args.instances == 0 {
        return Err(Failure::Usage("--instances must be at least 1".into()));
    }
    let check = cross_check_random(args.instances, args.seed, args.depth);
    let bad: usize = check.mismatches.values().map(Vec::len).sum();
    if let Some(path) = &args.out {
        write(path, &(serde_json::to_string_pretty(&check).expect("summary serializes") + "\n"))?;
    }
    println!(
        "{} theories ({} rejected), {} literals compared, {} mismatches",
        check.theories, check.rejected, check.literals, bad
    );
    if bad > 0 {
        return Err(Failure::Execution(format!("oracle disagrees with closure on {} theories", check.mismatches.len())));
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for path in &args.path {
        let text = fs::read_to_string(path).map_err(|e| Failure::Execution(format!("{}: {e}", path.display())))?;
        rows.extend(read_results(&text).map_err(|e| Failure::Execution(format!("{}: {e}", path.display())))?);
    }
    if rows.is_empty() {
        return Err(Failure::Execution("no case rows found".into()));
    }
    let report = RunReport::from_results(args.dataset, EngineConfig::default(), rows);
    if let Some(path) = &args.out {
        write(path, &render_report(&report, args.format)?)?;
    }
    println!("{}", report.summary_line());
    Ok(())
}
