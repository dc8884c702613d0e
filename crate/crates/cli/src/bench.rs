use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use nfplace::ingest::{
    generate_unweighted_scenario, generate_weighted_scenario, parse_graphml, parse_sndlib,
    stretch_grid, ScenarioConfig, ScenarioMeta, SndlibInstance,
};
use nfplace::oracle::{incremental_series, DEFAULT_LIMIT};
use nfplace::{build_feasibility, exact_min_middleboxes, exact_weighted_min_middleboxes, Network};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{placement_report, ratio, weighted_report};
use crate::exit::{classify, fail, Failure};
use crate::load::{self, Loaded, SourceKind};
use crate::report::{self, millis};
use crate::{BenchArgs, MetricArg};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u64,
    /// Pair probabilities for GraphML topologies.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Demand keep probabilities for SNDlib topologies.
    #[serde(default = "default_keep")]
    pub keep: Vec<f64>,
    #[serde(default = "default_stretch")]
    pub stretch: Vec<f64>,
    /// Use the full 31-value grid instead of `stretch`.
    #[serde(default)]
    pub stretch_grid: bool,
    #[serde(default = "default_metric")]
    pub metric: MetricArg,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_limit")]
    pub oracle_limit: usize,
    pub topology: Vec<TopologyEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyEntry {
    pub name: Option<String>,
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    Oracle,
}

fn one() -> u64 {
    1
}
fn default_p() -> Vec<f64> {
    vec![0.2]
}
fn default_keep() -> Vec<f64> {
    vec![0.5]
}
fn default_stretch() -> Vec<f64> {
    vec![1.0]
}
fn default_metric() -> MetricArg {
    MetricArg::Geo
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Greedy]
}
fn default_limit() -> usize {
    DEFAULT_LIMIT
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.topology.is_empty() {
            return Err(fail(
                Failure::Parse,
                "bench config lists no [[topology]] entries",
            ));
        }
        if cfg.algorithms.is_empty() {
            return Err(fail(Failure::Parse, "bench config lists no algorithms"));
        }
        Ok(cfg)
    }

    pub fn stretches(&self) -> Vec<f64> {
        if self.stretch_grid {
            stretch_grid()
        } else {
            self.stretch.clone()
        }
    }
}

enum Source {
    Zoo(Network),
    Sndlib(SndlibInstance),
}

struct Topology {
    name: String,
    metric: nfplace::Metric,
    source: Source,
}

struct Job<'a> {
    topology: &'a Topology,
    probability: f64,
    stretch: f64,
    replication: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchRow {
    pub topology: String,
    pub kind: &'static str,
    pub metric: String,
    /// Pair probability, or demand keep probability for weighted rows.
    pub p: f64,
    pub stretch: f64,
    pub seed: u64,
    pub replication: u64,
    pub nodes: usize,
    pub requests: Option<usize>,
    pub capacity: Option<f64>,
    pub algorithm: &'static str,
    pub status: &'static str,
    pub middleboxes: Option<usize>,
    pub oracle_middleboxes: Option<usize>,
    /// Greedy count over oracle count.
    pub ratio: Option<f64>,
    pub max_relative_load: Option<f64>,
    pub capacity_exceeded: Option<bool>,
    /// Largest `(φ_opt − φ_greedy) / φ_opt` along the greedy run.
    pub max_relative_difference: Option<f64>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

fn status(err: &anyhow::Error) -> &'static str {
    match classify(err) {
        Failure::Infeasible => "infeasible",
        Failure::TooLarge => "too-large",
        Failure::Parse => "invalid",
        Failure::Other => "error",
    }
}

fn error_row(row: &mut BenchRow, err: &anyhow::Error) {
    row.status = status(err);
    row.error = Some(format!("{err:#}"));
}

fn read_topology(
    base: &Path,
    entry: &TopologyEntry,
    default_metric: MetricArg,
) -> Result<Topology> {
    let path = base.join(&entry.path);
    let bytes = load::read(&path)?;
    let source = match load::sniff(&bytes) {
        SourceKind::GraphMl => Source::Zoo(
            parse_graphml(&bytes).with_context(|| format!("parsing {}", path.display()))?,
        ),
        SourceKind::Sndlib => Source::Sndlib(
            parse_sndlib(&bytes).with_context(|| format!("parsing {}", path.display()))?,
        ),
        SourceKind::Json => {
            return Err(fail(
                Failure::Parse,
                format!("{}: bench needs a topology file", path.display()),
            ))
        }
    };
    Ok(Topology {
        name: entry.name.clone().unwrap_or_else(|| load::stem(&path)),
        metric: entry.metric.unwrap_or(default_metric).into(),
        source,
    })
}

fn scenario(job: &Job, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        p: job.probability,
        stretch: job.stretch,
        metric: job.topology.metric,
        seed,
        replication: job.replication,
        capacity: None,
        keep_probability: job.probability,
    }
}

fn meta(job: &Job, cfg: &ScenarioConfig, weighted: bool) -> ScenarioMeta {
    ScenarioMeta {
        topology: job.topology.name.clone(),
        p: (!weighted).then_some(cfg.p),
        keep_probability: weighted.then_some(cfg.keep_probability),
        seed: cfg.seed,
        replication: cfg.replication,
    }
}

fn unweighted_rows(job: &Job, net: &Network, cfg: &BenchConfig, base: BenchRow) -> Vec<BenchRow> {
    let sc = scenario(job, cfg.seed);
    let mut greedy = BenchRow {
        algorithm: "greedy",
        ..base
    };
    greedy.nodes = net.node_count();
    let loaded = match generate_unweighted_scenario(net, &sc) {
        Ok(instance) => Loaded {
            name: job.topology.name.clone(),
            instance,
            scenario: Some(meta(job, &sc, false)),
        },
        Err(e) => return fan_out_error(cfg, greedy, &e.into()),
    };
    greedy.requests = Some(loaded.instance.pairs().len());
    greedy.capacity = Some(loaded.instance.capacity() as f64);
    let mut oracle = BenchRow {
        algorithm: "oracle",
        ..greedy.clone()
    };

    let fs = match build_feasibility(&loaded.instance) {
        Ok(fs) => fs,
        Err(e) => return fan_out_error(cfg, greedy, &e.into()),
    };
    let kappa = loaded.instance.capacity();
    let greedy_count = match placement_report(&loaded, &fs, None) {
        Ok((r, _)) => {
            greedy.status = "ok";
            greedy.middleboxes = Some(r.middlebox_count);
            greedy.max_relative_load = Some(r.metrics.max_relative_load);
            greedy.capacity_exceeded = Some(r.metrics.capacity_exceeded);
            greedy.wall_ms = Some(r.timing.solve_ms);
            Some(r.middlebox_count)
        }
        Err(e) => {
            error_row(&mut greedy, &e);
            None
        }
    };
    if cfg.algorithms.contains(&Algorithm::Oracle) {
        let started = Instant::now();
        let exact = exact_min_middleboxes(&fs, kappa, cfg.oracle_limit).and_then(|exact| {
            let steps = greedy_count.unwrap_or(exact.optimum);
            incremental_series(&fs, kappa, steps, Some(cfg.oracle_limit)).map(|s| (exact, s))
        });
        match exact {
            Ok((exact, series)) => {
                oracle.status = "ok";
                oracle.middleboxes = Some(exact.optimum);
                oracle.wall_ms = Some(millis(started.elapsed()));
                let worst = series
                    .iter()
                    .filter_map(|p| p.relative_difference)
                    .fold(0.0, f64::max);
                for row in [&mut greedy, &mut oracle] {
                    row.oracle_middleboxes = Some(exact.optimum);
                    row.ratio = greedy_count.map(|g| ratio(g, exact.optimum));
                    row.max_relative_difference = greedy_count.map(|_| worst);
                }
            }
            Err(e) => error_row(&mut oracle, &e.into()),
        }
    }
    select(cfg, greedy, oracle)
}

fn weighted_rows(
    job: &Job,
    sndlib: &SndlibInstance,
    cfg: &BenchConfig,
    base: BenchRow,
) -> Vec<BenchRow> {
    let sc = scenario(job, cfg.seed);
    let mut greedy = BenchRow {
        algorithm: "greedy",
        kind: "weighted",
        ..base
    };
    greedy.nodes = sndlib.network.node_count();
    let loaded = match generate_weighted_scenario(sndlib, &sc) {
        Ok(s) => Loaded {
            name: job.topology.name.clone(),
            instance: s.instance,
            scenario: Some(meta(job, &sc, true)),
        },
        Err(e) => return fan_out_error(cfg, greedy, &e.into()),
    };
    greedy.requests = Some(loaded.instance.requests().len());
    greedy.capacity = Some(loaded.instance.capacity());
    let mut oracle = BenchRow {
        algorithm: "oracle",
        ..greedy.clone()
    };
    let greedy_count = match weighted_report(&loaded, false) {
        Ok(run) => {
            let r = run.report;
            greedy.status = "ok";
            greedy.middleboxes = Some(r.middlebox_count);
            greedy.max_relative_load = Some(r.metrics.max_relative_load);
            greedy.capacity_exceeded = Some(r.metrics.capacity_exceeded);
            greedy.wall_ms = Some(r.timing.solve_ms);
            Some(r.middlebox_count)
        }
        Err(e) => {
            error_row(&mut greedy, &e);
            None
        }
    };
    if cfg.algorithms.contains(&Algorithm::Oracle) {
        let started = Instant::now();
        match exact_weighted_min_middleboxes(&loaded.instance.preprocess()) {
            Ok(exact) => {
                oracle.status = "ok";
                oracle.middleboxes = Some(exact.optimum);
                oracle.wall_ms = Some(millis(started.elapsed()));
                for row in [&mut greedy, &mut oracle] {
                    row.oracle_middleboxes = Some(exact.optimum);
                    row.ratio = greedy_count.map(|g| ratio(g, exact.optimum));
                }
            }
            Err(e) => error_row(&mut oracle, &e.into()),
        }
    }
    select(cfg, greedy, oracle)
}

fn select(cfg: &BenchConfig, greedy: BenchRow, oracle: BenchRow) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for a in &cfg.algorithms {
        rows.push(match a {
            Algorithm::Greedy => greedy.clone(),
            Algorithm::Oracle => oracle.clone(),
        });
    }
    rows
}

fn fan_out_error(cfg: &BenchConfig, mut row: BenchRow, err: &anyhow::Error) -> Vec<BenchRow> {
    error_row(&mut row, err);
    let oracle = BenchRow {
        algorithm: "oracle",
        ..row.clone()
    };
    select(cfg, row, oracle)
}

pub fn rows(cfg: &BenchConfig, base_dir: &Path) -> Result<Vec<BenchRow>> {
    let topologies: Vec<Topology> = cfg
        .topology
        .iter()
        .map(|t| read_topology(base_dir, t, cfg.metric))
        .collect::<Result<_>>()?;
    let stretches = cfg.stretches();
    let mut jobs = Vec::new();
    for t in &topologies {
        let probabilities = match t.source {
            Source::Zoo(_) => &cfg.p,
            Source::Sndlib(_) => &cfg.keep,
        };
        for &probability in probabilities {
            for &stretch in &stretches {
                for replication in 0..cfg.replications {
                    jobs.push(Job {
                        topology: t,
                        probability,
                        stretch,
                        replication,
                    });
                }
            }
        }
    }
    Ok(jobs
        .par_iter()
        .map(|job| {
            let base = BenchRow {
                topology: job.topology.name.clone(),
                kind: "unweighted",
                metric: job.topology.metric.to_string(),
                p: job.probability,
                stretch: job.stretch,
                seed: cfg.seed,
                replication: job.replication,
                ..BenchRow::default()
            };
            match &job.topology.source {
                Source::Zoo(net) => unweighted_rows(job, net, cfg, base),
                Source::Sndlib(s) => weighted_rows(job, s, cfg, base),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg =
        BenchConfig::parse(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let rows = rows(&cfg, base)?;
    let mut w = report::csv_writer(args.out.as_deref())?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        log::warn!("{failed} of {} bench rows did not finish", rows.len());
    }
    Ok(())
}
