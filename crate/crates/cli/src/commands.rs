use std::time::Instant;

use anyhow::{Context, Result};
use nfplace::oracle::{incremental_series, SeriesPoint};
use nfplace::{
    approximation_bound, build_feasibility, exact_min_middleboxes, exact_weighted_min_middleboxes,
    greedy_place, FeasibilitySets, GreedyTrace, OracleError, PlacementInstance, WeightedInstance,
};
use serde::Serialize;

use crate::exit::{fail, Failure};
use crate::load::{self, Loaded, SourceKind};
use crate::report::{
    self, digest, load_entries, millis, AssignmentEntry, Metrics, RunReport, Timing,
};
use crate::{validate, GenArgs, IncrementalArgs, SolveArgs};

const DROP_ORACLE: &str = "instance is too large for the exact oracle; rerun without --oracle";

fn oracle_context<T>(r: Result<T, OracleError>) -> Result<T> {
    match r {
        Err(e @ OracleError::TooLarge { .. }) => Err(anyhow::Error::new(e).context(DROP_ORACLE)),
        other => Ok(other?),
    }
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    middlebox: usize,
    gain: usize,
    phi_after: usize,
    pairs: usize,
}

#[derive(Serialize)]
struct WeightedTraceRow {
    iteration: usize,
    middlebox: usize,
    gain: f64,
    objective_after: f64,
    requests: usize,
}

/// Greedy placement plus the optional oracle comparison, as a report.
pub fn placement_report<'f>(
    loaded: &Loaded<PlacementInstance>,
    fs: &'f FeasibilitySets,
    oracle: Option<usize>,
) -> Result<(RunReport, GreedyTrace<'f>)> {
    let inst = &loaded.instance;
    let kappa = inst.capacity();
    let started = Instant::now();
    let trace = greedy_place(fs, kappa)?;
    let solve_ms = millis(started.elapsed());

    let middleboxes = trace.middleboxes();
    let a = trace.assignment();
    let assignment = inst
        .pairs()
        .iter()
        .enumerate()
        .map(|(j, p)| AssignmentEntry {
            request: j,
            nodes: vec![p.s(), p.t()],
            demand: 1.0,
            middlebox: a.middlebox_of(j),
        })
        .collect();
    let loads: Vec<f64> = middleboxes.iter().map(|&m| a.load(m) as f64).collect();
    let loads = load_entries(&middleboxes, &loads, kappa as f64);
    let max_relative_load = loads.iter().map(|l| l.relative_load).fold(0.0, f64::max);

    let mut metrics = Metrics {
        requests: inst.pairs().len(),
        capacity: kappa as f64,
        max_relative_load,
        capacity_exceeded: max_relative_load > 1.0,
        approximation_bound: Some(approximation_bound(kappa, inst.pairs().len())),
        ..Metrics::default()
    };
    let mut timing = Timing {
        solve_ms,
        oracle_ms: None,
    };
    if let Some(limit) = oracle {
        let started = Instant::now();
        let exact = oracle_context(exact_min_middleboxes(fs, kappa, limit))?;
        let series = oracle_context(incremental_series(
            fs,
            kappa,
            middleboxes.len(),
            Some(limit),
        ))?;
        timing.oracle_ms = Some(millis(started.elapsed()));
        metrics.oracle_middleboxes = Some(exact.optimum);
        metrics.approximation_ratio = Some(ratio(middleboxes.len(), exact.optimum));
        metrics.relative_difference = Some(
            series
                .iter()
                .filter_map(|p| p.relative_difference)
                .collect(),
        );
    }
    let report = RunReport {
        format: report::REPORT_FORMAT,
        version: report::REPORT_VERSION,
        instance: loaded.name.clone(),
        instance_digest: digest(&loaded.document()),
        algorithm: "greedy",
        middlebox_count: middleboxes.len(),
        middleboxes,
        assignment,
        loads,
        metrics,
        timing,
    };
    validate::placement(&report, inst)?;
    Ok((report, trace))
}

/// Greedy count over optimum; 1 when both are 0.
pub fn ratio(greedy: usize, optimum: usize) -> f64 {
    if optimum == 0 {
        if greedy == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        greedy as f64 / optimum as f64
    }
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let loaded = load::placement(&args.input)?;
    let fs = build_feasibility(&loaded.instance)?;
    let (report, trace) = placement_report(&loaded, &fs, args.oracle.then_some(args.oracle_limit))?;
    if let Some(path) = &args.trace {
        let mut w = report::csv_writer(Some(path))?;
        for s in trace.steps() {
            w.serialize(TraceRow {
                iteration: s.iteration,
                middlebox: s.chosen,
                gain: s.gain,
                phi_after: s.phi_after,
                pairs: fs.pair_count(),
            })?;
        }
        w.flush()?;
    }
    report::emit(args.out.as_deref(), &report.to_json())
}

pub struct WeightedRun {
    pub report: RunReport,
    pub steps: Vec<nfplace::weighted::WeightedStep>,
}

pub fn weighted_report(loaded: &Loaded<WeightedInstance>, oracle: bool) -> Result<WeightedRun> {
    let inst = &loaded.instance;
    let kappa = inst.capacity();
    let started = Instant::now();
    let outcome = nfplace::solve_weighted(inst)?;
    let solve_ms = millis(started.elapsed());
    let pb = &outcome.problem;
    let rounded = &outcome.rounded;

    let mut served = vec![None; inst.requests().len()];
    for (j, &m) in rounded.assignment.iter().enumerate() {
        served[pb.original_index(j)] = Some(m);
    }
    let assignment = inst
        .requests()
        .iter()
        .enumerate()
        .map(|(j, r)| AssignmentEntry {
            request: j,
            nodes: r.members(),
            demand: r.demand,
            middlebox: served[j],
        })
        .collect();
    let loads = load_entries(&rounded.active, &rounded.loads, kappa);
    let max_relative_load = loads.iter().map(|l| l.relative_load).fold(0.0, f64::max);
    let n = pb.request_count();
    let mut metrics = Metrics {
        requests: inst.requests().len(),
        capacity: kappa,
        max_relative_load,
        capacity_exceeded: max_relative_load > 1.0 + 1e-9,
        approximation_bound: Some(1.0 + (n.max(1) as f64).ln()),
        fractional_objective: Some(outcome.selection.fractional.objective),
        rejected_requests: Some(pb.rejected.clone()),
        ..Metrics::default()
    };
    let mut timing = Timing {
        solve_ms,
        oracle_ms: None,
    };
    if oracle {
        let started = Instant::now();
        let exact = oracle_context(exact_weighted_min_middleboxes(pb))?;
        timing.oracle_ms = Some(millis(started.elapsed()));
        metrics.oracle_middleboxes = Some(exact.optimum);
        metrics.approximation_ratio = Some(ratio(rounded.active.len(), exact.optimum));
    }
    let report = RunReport {
        format: report::REPORT_FORMAT,
        version: report::REPORT_VERSION,
        instance: loaded.name.clone(),
        instance_digest: digest(&loaded.document()),
        algorithm: "weighted-greedy-rounding",
        middlebox_count: rounded.active.len(),
        middleboxes: rounded.active.clone(),
        assignment,
        loads,
        metrics,
        timing,
    };
    validate::weighted(&report, inst)?;
    Ok(WeightedRun {
        report,
        steps: outcome.selection.steps,
    })
}

pub fn solve_weighted(args: &SolveArgs) -> Result<()> {
    let loaded = load::weighted(&args.input)?;
    let run = weighted_report(&loaded, args.oracle)?;
    if let Some(path) = &args.trace {
        let mut w = report::csv_writer(Some(path))?;
        for (i, s) in run.steps.iter().enumerate() {
            w.serialize(WeightedTraceRow {
                iteration: i + 1,
                middlebox: s.chosen,
                gain: s.gain,
                objective_after: s.objective_after,
                requests: run.report.metrics.requests,
            })?;
        }
        w.flush()?;
    }
    report::emit(args.out.as_deref(), &run.report.to_json())
}

#[derive(Serialize)]
struct SeriesRow {
    n: usize,
    phi_greedy: usize,
    phi_opt: Option<usize>,
    relative_difference: Option<f64>,
    middlebox: Option<usize>,
    pairs: usize,
}

pub fn incremental(args: &IncrementalArgs) -> Result<()> {
    let loaded = load::placement(&args.input)?;
    let inst = &loaded.instance;
    let fs = FeasibilitySets::compute(inst);
    let steps = match args.budget_steps {
        Some(s) => s,
        None => {
            let mut trace = GreedyTrace::new(&fs, inst.capacity());
            trace.extend(usize::MAX);
            trace.len()
        }
    };
    let series: Vec<SeriesPoint> = oracle_context(incremental_series(
        &fs,
        inst.capacity(),
        steps,
        args.oracle.then_some(args.oracle_limit),
    ))?;
    let mut w = report::csv_writer(args.out.as_deref())?;
    for p in series {
        w.serialize(SeriesRow {
            n: p.n,
            phi_greedy: p.phi_greedy,
            phi_opt: p.phi_opt,
            relative_difference: p.relative_difference,
            middlebox: p.middlebox,
            pairs: fs.pair_count(),
        })?;
    }
    Ok(w.flush()?)
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let bytes = load::read(&args.topology)?;
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| load::stem(&args.topology));
    let cfg = nfplace::ingest::ScenarioConfig {
        p: args.p,
        stretch: args.stretch,
        metric: args.metric.into(),
        seed: args.seed,
        replication: args.replication,
        capacity: args.capacity,
        keep_probability: args.keep,
    };
    let text = match load::sniff(&bytes) {
        SourceKind::GraphMl => load::generate_placement(&bytes, &name, &cfg)?
            .document()
            .to_json(),
        SourceKind::Sndlib => load::generate_weighted(&bytes, &name, &cfg)?
            .document()
            .to_json(),
        SourceKind::Json => {
            return Err(fail(
                Failure::Parse,
                "gen expects a GraphML or SNDlib topology",
            ))
        }
    };
    nfplace::ingest::InstanceDocument::from_json(&text)
        .context("generated document does not parse back")?;
    report::emit(args.out.as_deref(), &text)
}
