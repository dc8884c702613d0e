//! Instance JSON, version 1.
//!
//! Field order is fixed by the struct definitions and the output is
//! pretty-printed with a trailing newline, so equal instances serialize to
//! identical bytes.

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::graph::{GeoCoord, Metric, Network, NodeId};
use crate::instance::{Pair, PlacementInstance, RouteConstraint};
use crate::weighted::{Request, RequestKind, WeightedInstance};

pub const INSTANCE_FORMAT: &str = "nfplace-instance";
pub const INSTANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub label: Option<String>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    /// Two nodes for a pair request, more for a group.
    pub nodes: Vec<NodeId>,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub topology: String,
    pub p: Option<f64>,
    pub keep_probability: Option<f64>,
    pub seed: u64,
    pub replication: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub metric: Metric,
    pub constraint: RouteConstraint,
    pub capacity: f64,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub candidates: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[NodeId; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests: Option<Vec<RequestRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioMeta>,
}

fn network_records(net: &Network) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
    let nodes = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| NodeRecord {
            id,
            label: n.label.clone(),
            latitude: n.coord.map(|c| c.latitude()),
            longitude: n.coord.map(|c| c.longitude()),
        })
        .collect();
    let edges = net
        .edges()
        .iter()
        .map(|e| EdgeRecord {
            source: e.a,
            target: e.b,
            weight: e.weight,
        })
        .collect();
    (nodes, edges)
}

impl InstanceDocument {
    pub fn from_placement(
        name: &str,
        inst: &PlacementInstance,
        scenario: Option<ScenarioMeta>,
    ) -> Self {
        let (nodes, edges) = network_records(inst.network());
        Self {
            format: INSTANCE_FORMAT.to_string(),
            version: INSTANCE_VERSION,
            name: name.to_string(),
            metric: inst.metric(),
            constraint: inst.constraint(),
            capacity: inst.capacity() as f64,
            nodes,
            edges,
            candidates: inst.candidates().to_vec(),
            pairs: Some(inst.pairs().iter().map(|p| [p.s(), p.t()]).collect()),
            requests: None,
            scenario,
        }
    }

    pub fn from_weighted(
        name: &str,
        inst: &WeightedInstance,
        scenario: Option<ScenarioMeta>,
    ) -> Self {
        let (nodes, edges) = network_records(inst.network());
        Self {
            format: INSTANCE_FORMAT.to_string(),
            version: INSTANCE_VERSION,
            name: name.to_string(),
            metric: inst.metric(),
            constraint: inst.constraint(),
            capacity: inst.capacity(),
            nodes,
            edges,
            candidates: inst.candidates().to_vec(),
            pairs: None,
            requests: Some(
                inst.requests()
                    .iter()
                    .map(|r| RequestRecord {
                        nodes: r.members(),
                        demand: r.demand,
                    })
                    .collect(),
            ),
            scenario,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("instance documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let doc: Self = serde_json::from_str(text)?;
        doc.check_header()?;
        Ok(doc)
    }

    fn check_header(&self) -> Result<(), IngestError> {
        if self.format != INSTANCE_FORMAT {
            return Err(IngestError::Schema(format!(
                "format `{}` is not `{INSTANCE_FORMAT}`",
                self.format
            )));
        }
        if self.version != INSTANCE_VERSION {
            return Err(IngestError::Schema(format!(
                "unsupported version {}",
                self.version
            )));
        }
        Ok(())
    }

    pub fn is_weighted(&self) -> bool {
        self.requests.is_some()
    }

    pub fn network(&self) -> Result<Network, IngestError> {
        let mut net = Network::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(IngestError::Schema(format!(
                    "node {i} has id {}; ids must be 0..n in order",
                    n.id
                )));
            }
            let coord = match (n.latitude, n.longitude) {
                (Some(a), Some(b)) => Some(GeoCoord::new(a, b)?),
                (None, None) => None,
                _ => {
                    return Err(IngestError::Schema(format!(
                        "node {i} has only one coordinate"
                    )))
                }
            };
            net.add_node(n.label.clone(), coord);
        }
        for e in &self.edges {
            net.add_edge(e.source, e.target, e.weight)?;
        }
        Ok(net)
    }

    /// The unweighted instance. Requests, if present, become pairs and their
    /// demands are ignored.
    pub fn to_placement(&self) -> Result<PlacementInstance, IngestError> {
        let capacity = self.capacity;
        if !(capacity >= 1.0 && capacity.fract() == 0.0 && capacity <= u32::MAX as f64) {
            return Err(IngestError::Schema(format!(
                "capacity {capacity} is not a positive integer"
            )));
        }
        let pairs: Vec<Pair> = match (&self.pairs, &self.requests) {
            (Some(p), _) => p
                .iter()
                .map(|&[s, t]| Pair::new(s, t))
                .collect::<Result<_, _>>()?,
            (None, Some(r)) => r
                .iter()
                .map(|r| match r.nodes.as_slice() {
                    &[s, t] => Ok(Pair::new(s, t)?),
                    _ => Err(IngestError::Schema(
                        "group requests need the weighted solver".into(),
                    )),
                })
                .collect::<Result<_, _>>()?,
            (None, None) => Vec::new(),
        };
        Ok(PlacementInstance::new(
            self.network()?,
            self.metric,
            pairs,
            self.candidates.clone(),
            capacity as u32,
            self.constraint,
        )?)
    }

    /// The weighted instance. Plain pairs get demand 1.
    pub fn to_weighted(&self) -> Result<WeightedInstance, IngestError> {
        let requests: Vec<Request> = match (&self.requests, &self.pairs) {
            (Some(r), _) => r
                .iter()
                .map(|r| match r.nodes.as_slice() {
                    &[s, t] => Ok(Request::pair(s, t, r.demand)?),
                    nodes => Ok(Request::group(nodes.to_vec(), r.demand)),
                })
                .collect::<Result<_, IngestError>>()?,
            (None, Some(p)) => p
                .iter()
                .map(|&[s, t]| Request::pair(s, t, 1.0))
                .collect::<Result<_, _>>()?,
            (None, None) => Vec::new(),
        };
        Ok(WeightedInstance::new(
            self.network()?,
            self.metric,
            requests,
            self.candidates.clone(),
            self.capacity,
            self.constraint,
        )?)
    }
}

impl RequestRecord {
    pub fn from_request(r: &Request) -> Self {
        let nodes = match &r.kind {
            RequestKind::Pair(p) => vec![p.s(), p.t()],
            RequestKind::Group(g) => g.clone(),
        };
        Self {
            nodes,
            demand: r.demand,
        }
    }
}
