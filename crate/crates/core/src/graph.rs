//! Network graphs and all-pairs shortest-path metrics.
//!
//! A [`Network`] is an undirected graph with nonnegative edge weights and
//! optional geographic coordinates. [`compute_apsp`] turns it into an
//! immutable [`DistanceMatrix`] under one of three [`Metric`]s.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index, `0..n`.
pub type NodeId = usize;

/// Mean Earth radius used by [`geo_distance`], in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("network has no nodes")]
    Empty,
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({a}, {b}) has invalid weight {weight}")]
    InvalidWeight { a: NodeId, b: NodeId, weight: f64 },
    #[error("node {0} has no geographic coordinates")]
    GeoUnavailable(NodeId),
    #[error("coordinate out of range: latitude {latitude}, longitude {longitude}")]
    DomainError { latitude: f64, longitude: f64 },
}

/// A point on the globe, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    latitude: f64,
    longitude: f64,
}

impl GeoCoord {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, GraphError> {
        let ok = latitude.is_finite()
            && longitude.is_finite()
            && (-90.0..=90.0).contains(&latitude)
            && (-180.0..=180.0).contains(&longitude);
        if ok {
            Ok(Self {
                latitude,
                longitude,
            })
        } else {
            Err(GraphError::DomainError {
                latitude,
                longitude,
            })
        }
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }
}

/// Great-circle distance in kilometers (haversine formula).
pub fn geo_distance(p1: GeoCoord, p2: GeoCoord) -> f64 {
    let (lat1, lat2) = (p1.latitude.to_radians(), p2.latitude.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (p2.longitude - p1.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Haversine distance on raw degree pairs, validating the ranges first.
pub fn geo_distance_degrees(p1: (f64, f64), p2: (f64, f64)) -> Result<f64, GraphError> {
    Ok(geo_distance(
        GeoCoord::new(p1.0, p1.1)?,
        GeoCoord::new(p2.0, p2.1)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Node {
    pub label: Option<String>,
    pub coord: Option<GeoCoord>,
}

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: f64,
}

/// Undirected, loop-free graph. Parallel edges collapse to the minimum weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: BTreeMap<(NodeId, NodeId), usize>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    /// A network with `n` anonymous nodes and no edges.
    pub fn with_nodes(n: usize) -> Self {
        Self {
            nodes: vec![Node::default(); n],
            ..Self::default()
        }
    }

    pub fn add_node(&mut self, label: Option<String>, coord: Option<GeoCoord>) -> NodeId {
        self.nodes.push(Node { label, coord });
        self.nodes.len() - 1
    }

    /// Inserts an undirected edge. Returns `true` if the edge is new, `false`
    /// if it collapsed onto an existing one.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, weight: f64) -> Result<bool, GraphError> {
        let n = self.nodes.len();
        for v in [a, b] {
            if v >= n {
                return Err(GraphError::UnknownNode(v));
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(GraphError::InvalidWeight { a, b, weight });
        }
        let key = (a.min(b), a.max(b));
        match self.index.get(&key) {
            Some(&i) => {
                let e = &mut self.edges[i];
                e.weight = e.weight.min(weight);
                Ok(false)
            }
            None => {
                self.index.insert(key, self.edges.len());
                self.edges.push(Edge {
                    a: key.0,
                    b: key.1,
                    weight,
                });
                Ok(true)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed arcs (each undirected edge counted in both directions).
    pub fn arc_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.index
            .get(&(a.min(b), a.max(b)))
            .map(|&i| self.edges[i].weight)
    }

    pub fn has_all_coordinates(&self) -> bool {
        self.nodes.iter().all(|n| n.coord.is_some())
    }

    /// Adjacency lists with the edge lengths of `metric`.
    fn weighted_adjacency(&self, metric: Metric) -> Result<Vec<Vec<(NodeId, f64)>>, GraphError> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let w = match metric {
                Metric::EdgeWeight => e.weight,
                Metric::HopCount => 1.0,
                Metric::Geo => {
                    let ca = self.nodes[e.a]
                        .coord
                        .ok_or(GraphError::GeoUnavailable(e.a))?;
                    let cb = self.nodes[e.b]
                        .coord
                        .ok_or(GraphError::GeoUnavailable(e.b))?;
                    geo_distance(ca, cb)
                }
            };
            adj[e.a].push((e.b, w));
            adj[e.b].push((e.a, w));
        }
        Ok(adj)
    }
}

/// Which edge length the shortest-path metric uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// The stored edge weights.
    EdgeWeight,
    /// Every edge has length 1.
    #[serde(rename = "hops")]
    HopCount,
    /// Great-circle distance between the endpoints, in km.
    Geo,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::EdgeWeight => "edge-weight",
            Metric::HopCount => "hops",
            Metric::Geo => "geo",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "edge-weight" | "weight" => Ok(Metric::EdgeWeight),
            "hops" | "hop-count" => Ok(Metric::HopCount),
            "geo" => Ok(Metric::Geo),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Immutable `n x n` shortest-path distances. Unreachable pairs hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major values. Intended for fixtures and oracles.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(d.len(), n * n, "distance matrix must be square");
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.d[u * self.n + v]
    }

    pub fn is_reachable(&self, u: NodeId, v: NodeId) -> bool {
        self.get(u, v).is_finite()
    }

    pub fn row(&self, u: NodeId) -> &[f64] {
        &self.d[u * self.n..(u + 1) * self.n]
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(NodeId, f64)>], source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(HeapEntry { dist: alt, node: v });
            }
        }
    }
    dist
}

/// All-pairs shortest paths: one Dijkstra run per source, in parallel.
pub fn compute_apsp(net: &Network, metric: Metric) -> Result<DistanceMatrix, GraphError> {
    let n = net.node_count();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let adj = net.weighted_adjacency(metric)?;
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
    let mut d: Vec<f64> = rows.into_iter().flatten().collect();
    // Force exact symmetry; the two directions can differ in the last ulp
    // when sums are accumulated in a different order.
    for u in 0..n {
        for v in (u + 1)..n {
            let m = d[u * n + v].min(d[v * n + u]);
            d[u * n + v] = m;
            d[v * n + u] = m;
        }
    }
    Ok(DistanceMatrix { n, d })
}
