use std::path::Path;

use anyhow::{Context, Result};
use nfplace::ingest::{
    generate_unweighted_scenario, generate_weighted_scenario, parse_graphml, parse_sndlib,
    InstanceDocument, ScenarioConfig, ScenarioMeta,
};
use nfplace::{GraphError, Metric, PlacementInstance, RouteConstraint, WeightedInstance};

use crate::exit::{fail, Failure};
use crate::InstanceArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Json,
    GraphMl,
    Sndlib,
}

/// Guesses the format from the first non-blank byte.
pub fn sniff(bytes: &[u8]) -> SourceKind {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => SourceKind::Json,
        Some(b'<') => SourceKind::GraphMl,
        _ => SourceKind::Sndlib,
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub struct Loaded<I> {
    pub name: String,
    pub instance: I,
    pub scenario: Option<ScenarioMeta>,
}

impl Loaded<PlacementInstance> {
    pub fn document(&self) -> InstanceDocument {
        InstanceDocument::from_placement(&self.name, &self.instance, self.scenario.clone())
    }
}

impl Loaded<WeightedInstance> {
    pub fn document(&self) -> InstanceDocument {
        InstanceDocument::from_weighted(&self.name, &self.instance, self.scenario.clone())
    }
}

fn constraint(args: &InstanceArgs) -> Option<RouteConstraint> {
    match (args.stretch, args.max_length) {
        (_, Some(l)) => Some(RouteConstraint::MaxLength(l)),
        (Some(r), None) => Some(RouteConstraint::Stretch(r)),
        (None, None) => None,
    }
}

fn integral_capacity(c: f64) -> Result<u32> {
    if c >= 1.0 && c.fract() == 0.0 && c <= u32::MAX as f64 {
        Ok(c as u32)
    } else {
        Err(fail(
            Failure::Parse,
            format!("capacity {c} must be a positive integer for unweighted instances"),
        ))
    }
}

fn apply_overrides(doc: &mut InstanceDocument, args: &InstanceArgs) {
    if let Some(m) = args.metric {
        doc.metric = m.into();
    }
    if let Some(c) = constraint(args) {
        doc.constraint = c;
    }
    if let Some(k) = args.capacity {
        doc.capacity = k;
    }
}

fn scenario_config(args: &InstanceArgs) -> Result<ScenarioConfig> {
    let defaults = ScenarioConfig::default();
    Ok(ScenarioConfig {
        p: args.p.unwrap_or(defaults.p),
        stretch: args.stretch.unwrap_or(defaults.stretch),
        metric: args.metric.map(Metric::from).unwrap_or(defaults.metric),
        seed: args.seed,
        replication: args.replication,
        capacity: args.capacity.map(integral_capacity).transpose()?,
        keep_probability: args.keep.unwrap_or(defaults.keep_probability),
    })
}

fn meta(name: &str, cfg: &ScenarioConfig, weighted: bool) -> ScenarioMeta {
    ScenarioMeta {
        topology: name.to_string(),
        p: (!weighted).then_some(cfg.p),
        keep_probability: weighted.then_some(cfg.keep_probability),
        seed: cfg.seed,
        replication: cfg.replication,
    }
}

pub fn generate_placement(
    bytes: &[u8],
    name: &str,
    cfg: &ScenarioConfig,
) -> Result<Loaded<PlacementInstance>> {
    let net = parse_graphml(bytes).context("parsing GraphML")?;
    let instance = generate_unweighted_scenario(&net, cfg)?;
    Ok(Loaded {
        name: name.to_string(),
        instance,
        scenario: Some(meta(name, cfg, false)),
    })
}

pub fn generate_weighted(
    bytes: &[u8],
    name: &str,
    cfg: &ScenarioConfig,
) -> Result<Loaded<WeightedInstance>> {
    let sndlib = parse_sndlib(bytes).context("parsing SNDlib")?;
    let scenario = generate_weighted_scenario(&sndlib, cfg)?;
    Ok(Loaded {
        name: name.to_string(),
        instance: scenario.instance,
        scenario: Some(meta(name, cfg, true)),
    })
}

const GEO_HINT: &str =
    "the geo metric needs coordinates on every node; pass --metric hops or --metric edge-weight";

fn lacks_coordinates(err: &anyhow::Error) -> bool {
    use nfplace::ingest::IngestError as E;
    use nfplace::InstanceError as I;
    let geo = |g: &GraphError| matches!(g, GraphError::GeoUnavailable(_));
    let inst = |i: &I| matches!(i, I::Graph(g) if geo(g));
    err.chain().any(|c| {
        c.downcast_ref::<GraphError>().is_some_and(geo)
            || c.downcast_ref::<I>().is_some_and(inst)
            || match c.downcast_ref::<E>() {
                Some(E::Graph(g)) => geo(g),
                Some(E::Instance(i)) => inst(i),
                _ => false,
            }
    })
}

fn with_geo_hint<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| {
        if lacks_coordinates(&e) {
            e.context(GEO_HINT)
        } else {
            e
        }
    })
}

pub fn placement(args: &InstanceArgs) -> Result<Loaded<PlacementInstance>> {
    with_geo_hint(placement_inner(args))
}

pub fn weighted(args: &InstanceArgs) -> Result<Loaded<WeightedInstance>> {
    with_geo_hint(weighted_inner(args))
}

fn placement_inner(args: &InstanceArgs) -> Result<Loaded<PlacementInstance>> {
    let bytes = read(&args.instance)?;
    let name = stem(&args.instance);
    match sniff(&bytes) {
        SourceKind::Json => {
            let mut doc = InstanceDocument::from_json(std::str::from_utf8(&bytes)?)?;
            apply_overrides(&mut doc, args);
            Ok(Loaded {
                instance: doc.to_placement()?,
                name: doc.name,
                scenario: doc.scenario,
            })
        }
        SourceKind::GraphMl => {
            let mut loaded = generate_placement(&bytes, &name, &scenario_config(args)?)?;
            if let Some(c @ RouteConstraint::MaxLength(_)) = constraint(args) {
                loaded.instance = loaded.instance.with_constraint(c)?;
            }
            Ok(loaded)
        }
        SourceKind::Sndlib => Err(fail(
            Failure::Parse,
            "SNDlib files carry weighted demands; use solve-weighted or convert with gen",
        )),
    }
}

fn weighted_inner(args: &InstanceArgs) -> Result<Loaded<WeightedInstance>> {
    let bytes = read(&args.instance)?;
    let name = stem(&args.instance);
    let mut doc = match sniff(&bytes) {
        SourceKind::Json => InstanceDocument::from_json(std::str::from_utf8(&bytes)?)?,
        SourceKind::GraphMl => {
            generate_placement(&bytes, &name, &scenario_config(args)?)?.document()
        }
        SourceKind::Sndlib => generate_weighted(&bytes, &name, &scenario_config(args)?)?.document(),
    };
    apply_overrides(&mut doc, args);
    Ok(Loaded {
        instance: doc.to_weighted()?,
        name: doc.name,
        scenario: doc.scenario,
    })
}
