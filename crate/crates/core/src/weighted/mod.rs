//! Weighted pair and group requests.
//!
//! Each request `j` carries a demand `p_j`; a middlebox may carry total
//! demand at most `κ`. Integral assignment is hard, so candidate sets are
//! scored with the fractional relaxation
//!
//! ```text
//! f(S) = max Σ x_ij   s.t.  Σ_i x_ij <= 1,  Σ_j p_j x_ij <= κ (i ∈ S),  0 <= x_ij <= 1
//! ```
//!
//! which is monotone and submodular in `S`. [`generalized_greedy`] grows `S`
//! by largest `f` gain until `f(S) > n − 1`, and [`round_solution`] turns the
//! fractional solution into an integral one whose loads are at most `2κ`.
//!
//! `f` is computed as a maximum-profit flow: with `y_ij = p_j x_ij`, request
//! arcs carry capacity `p_j` at profit `1/p_j` per unit, middlebox arcs carry
//! capacity `κ`.

mod flow;
mod rounding;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{compute_apsp, DistanceMatrix, GraphError, Metric, Network, NodeId};
use crate::instance::{InstanceError, Pair, RouteConstraint};
use flow::MinCostFlow;

pub use rounding::{round_solution, RoundedSolution};

/// Slack on the `f(S) > n − 1` stopping test and on gain comparisons.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// Values within this distance of 0 or 1 are snapped when extracting `x`.
const SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightedError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("request {0} has non-positive or non-finite demand")]
    InvalidDemand(usize),
    #[error("request {0} is a group with fewer than two distinct members")]
    DegenerateGroup(usize),
    #[error("capacity {0} must be positive and finite")]
    InvalidCapacity(f64),
    #[error("requests cannot all be served: f(U) = {objective} <= n - 1 = {threshold}")]
    Infeasible {
        objective: f64,
        threshold: f64,
        /// Kept requests (original indices) without any feasible candidate.
        uncoverable: Vec<usize>,
    },
    #[error("rounding failed: {0}")]
    RoundingFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Pair(Pair),
    /// Sorted, distinct members.
    Group(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub kind: RequestKind,
    pub demand: f64,
}

impl Request {
    pub fn pair(s: NodeId, t: NodeId, demand: f64) -> Result<Self, InstanceError> {
        Ok(Self {
            kind: RequestKind::Pair(Pair::new(s, t)?),
            demand,
        })
    }

    /// A group request; members are sorted and deduplicated.
    pub fn group(mut members: Vec<NodeId>, demand: f64) -> Self {
        members.sort_unstable();
        members.dedup();
        Self {
            kind: RequestKind::Group(members),
            demand,
        }
    }

    pub fn members(&self) -> Vec<NodeId> {
        match &self.kind {
            RequestKind::Pair(p) => vec![p.s(), p.t()],
            RequestKind::Group(g) => g.clone(),
        }
    }
}

/// Decides whether a middlebox at `u` may serve a request.
pub trait RequestPredicate: Sync {
    fn admits(&self, dist: &DistanceMatrix, request: &Request, u: NodeId) -> bool;
}

/// Every ordered member pair `(s, t)`, `s != t`, must satisfy the route
/// constraint through `u`. For a pair request this is the plain pairwise test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllMemberPairs(pub RouteConstraint);

impl RequestPredicate for AllMemberPairs {
    fn admits(&self, dist: &DistanceMatrix, request: &Request, u: NodeId) -> bool {
        let members = request.members();
        members.iter().all(|&s| {
            members
                .iter()
                .all(|&t| s == t || self.0.admits(dist, s, u, t))
        })
    }
}

/// A weighted (or group) placement problem.
#[derive(Debug, Clone)]
pub struct WeightedInstance {
    network: Network,
    metric: Metric,
    distances: DistanceMatrix,
    requests: Vec<Request>,
    candidates: Vec<NodeId>,
    capacity: f64,
    constraint: RouteConstraint,
}

impl WeightedInstance {
    pub fn new(
        network: Network,
        metric: Metric,
        requests: Vec<Request>,
        candidates: Vec<NodeId>,
        capacity: f64,
        constraint: RouteConstraint,
    ) -> Result<Self, WeightedError> {
        let distances = compute_apsp(&network, metric)?;
        Self::with_distances(
            network, metric, distances, requests, candidates, capacity, constraint,
        )
    }

    pub fn with_distances(
        network: Network,
        metric: Metric,
        distances: DistanceMatrix,
        requests: Vec<Request>,
        mut candidates: Vec<NodeId>,
        capacity: f64,
        constraint: RouteConstraint,
    ) -> Result<Self, WeightedError> {
        let n = network.node_count();
        if !capacity.is_finite() || capacity <= 0.0 {
            return Err(WeightedError::InvalidCapacity(capacity));
        }
        constraint.validate()?;
        candidates.sort_unstable();
        candidates.dedup();
        if candidates.is_empty() {
            return Err(InstanceError::NoCandidates.into());
        }
        if let Some(&bad) = candidates.iter().find(|&&u| u >= n) {
            return Err(InstanceError::UnknownNode(bad).into());
        }
        for (j, r) in requests.iter().enumerate() {
            if !r.demand.is_finite() || r.demand <= 0.0 {
                return Err(WeightedError::InvalidDemand(j));
            }
            let members = r.members();
            if members.len() < 2 {
                return Err(WeightedError::DegenerateGroup(j));
            }
            if let Some(&bad) = members.iter().find(|&&v| v >= n) {
                return Err(InstanceError::UnknownNode(bad).into());
            }
        }
        Ok(Self {
            network,
            metric,
            distances,
            requests,
            candidates,
            capacity,
            constraint,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn constraint(&self) -> RouteConstraint {
        self.constraint
    }

    pub fn total_demand(&self) -> f64 {
        self.requests.iter().map(|r| r.demand).sum()
    }

    /// Per-candidate lists of request indices admitted by `predicate`.
    pub fn request_sets(&self, predicate: &dyn RequestPredicate) -> Vec<Vec<usize>> {
        self.candidates
            .par_iter()
            .map(|&u| {
                (0..self.requests.len())
                    .filter(|&j| predicate.admits(&self.distances, &self.requests[j], u))
                    .collect()
            })
            .collect()
    }

    /// Preprocesses with the default group predicate.
    pub fn preprocess(&self) -> WeightedProblem {
        let sets = self.request_sets(&AllMemberPairs(self.constraint));
        let demands: Vec<f64> = self.requests.iter().map(|r| r.demand).collect();
        preprocess(
            &demands,
            &self.candidates,
            &sets,
            self.capacity,
            self.network.node_count(),
        )
    }
}

/// The problem after preprocessing, in terms of kept requests only.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedProblem {
    candidates: Vec<NodeId>,
    capacity: f64,
    /// Original index of each kept request.
    kept: Vec<usize>,
    demands: Vec<f64>,
    /// Per candidate position: kept-request positions it may serve.
    allowed: Vec<Vec<usize>>,
    /// Requests with `p_j > κ` (original indices).
    pub rejected: Vec<usize>,
    /// Entries `x_ij` zeroed because of the route constraint.
    pub deleted_by_constraint: usize,
    /// Entries `x_ij` zeroed because `i` is not a legal location.
    pub deleted_illegal: usize,
}

/// Deletes requests with `p_j > κ`, stretch-violating entries, and entries at
/// non-candidate nodes.
///
/// `sets[i]` lists the (original) requests candidate `candidates[i]` may
/// serve; `node_count` is `|V|` and only feeds the deletion statistics.
pub fn preprocess(
    demands: &[f64],
    candidates: &[NodeId],
    sets: &[Vec<usize>],
    capacity: f64,
    node_count: usize,
) -> WeightedProblem {
    assert_eq!(candidates.len(), sets.len());
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    let mut position = vec![None; demands.len()];
    for (j, &p) in demands.iter().enumerate() {
        if p > capacity {
            rejected.push(j);
        } else {
            position[j] = Some(kept.len());
            kept.push(j);
        }
    }
    let allowed: Vec<Vec<usize>> = sets
        .iter()
        .map(|set| {
            let mut v: Vec<usize> = set.iter().filter_map(|&j| position[j]).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let entries: usize = allowed.iter().map(Vec::len).sum();
    let deleted_by_constraint = candidates.len() * kept.len() - entries;
    let deleted_illegal = node_count.saturating_sub(candidates.len()) * kept.len();
    WeightedProblem {
        candidates: candidates.to_vec(),
        capacity,
        demands: kept.iter().map(|&j| demands[j]).collect(),
        kept,
        allowed,
        rejected,
        deleted_by_constraint,
        deleted_illegal,
    }
}

impl WeightedProblem {
    /// Direct construction for fixtures: every request is kept unless `p_j > κ`.
    pub fn from_parts(
        candidates: Vec<NodeId>,
        demands: Vec<f64>,
        sets: Vec<Vec<usize>>,
        capacity: f64,
    ) -> Self {
        let nodes = candidates.len();
        preprocess(&demands, &candidates, &sets, capacity, nodes)
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Number of kept requests `n`.
    pub fn request_count(&self) -> usize {
        self.kept.len()
    }

    /// Original request index of kept request `j`.
    pub fn original_index(&self, j: usize) -> usize {
        self.kept[j]
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    /// Kept requests a candidate position may serve.
    pub fn allowed(&self, position: usize) -> &[usize] {
        &self.allowed[position]
    }

    pub fn is_allowed(&self, position: usize, request: usize) -> bool {
        self.allowed[position].binary_search(&request).is_ok()
    }

    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.candidates.binary_search(&node).ok()
    }

    /// Number of surviving `x_ij` entries.
    pub fn entry_count(&self) -> usize {
        self.allowed.iter().map(Vec::len).sum()
    }

    /// Kept requests with no feasible candidate, as original indices.
    pub fn uncoverable(&self) -> Vec<usize> {
        let mut covered = vec![false; self.kept.len()];
        for set in &self.allowed {
            for &j in set {
                covered[j] = true;
            }
        }
        (0..self.kept.len())
            .filter(|&j| !covered[j])
            .map(|j| self.kept[j])
            .collect()
    }

    fn positions_of(&self, nodes: &[NodeId]) -> Vec<usize> {
        let mut v: Vec<usize> = nodes.iter().filter_map(|&u| self.position(u)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Optimal solution of the fractional assignment LP on a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    /// Candidate nodes the LP was solved on, ascending.
    pub middleboxes: Vec<NodeId>,
    /// Nonzero entries `(candidate node, kept request, x_ij)`, sorted.
    pub entries: Vec<(NodeId, usize, f64)>,
    pub objective: f64,
}

impl FractionalAssignment {
    pub fn value(&self, node: NodeId, request: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == node && e.1 == request)
            .map_or(0.0, |e| e.2)
    }

    /// `Σ_i x_ij` per kept request.
    pub fn coverage(&self, requests: usize) -> Vec<f64> {
        let mut c = vec![0.0; requests];
        for &(_, j, x) in &self.entries {
            c[j] += x;
        }
        c
    }

    /// `Σ_j p_j x_ij` per middlebox in [`Self::middleboxes`] order.
    pub fn loads(&self, demands: &[f64]) -> Vec<f64> {
        self.middleboxes
            .iter()
            .map(|&m| {
                self.entries
                    .iter()
                    .filter(|e| e.0 == m)
                    .map(|e| demands[e.1] * e.2)
                    .sum()
            })
            .collect()
    }
}

/// `f(S)` together with an optimal `x`.
pub fn solve_fractional(problem: &WeightedProblem, middleboxes: &[NodeId]) -> FractionalAssignment {
    let positions = problem.positions_of(middleboxes);
    solve_positions(problem, &positions)
}

fn solve_positions(problem: &WeightedProblem, positions: &[usize]) -> FractionalAssignment {
    let n = problem.request_count();
    let middleboxes: Vec<NodeId> = positions.iter().map(|&i| problem.candidates[i]).collect();
    if positions.is_empty() || n == 0 {
        return FractionalAssignment {
            middleboxes,
            entries: Vec::new(),
            objective: 0.0,
        };
    }
    // nodes: source, requests, middleboxes, sink
    let source = 0;
    let sink = 1 + n + positions.len();
    let mut g = MinCostFlow::new(sink + 1);
    for (j, &p) in problem.demands.iter().enumerate() {
        g.add_arc(source, 1 + j, p, -1.0 / p);
    }
    let mut entry_arcs = Vec::new();
    for (k, &i) in positions.iter().enumerate() {
        let mnode = 1 + n + k;
        for &j in &problem.allowed[i] {
            let arc = g.add_arc(1 + j, mnode, problem.demands[j], 0.0);
            entry_arcs.push((k, j, arc));
        }
        g.add_arc(mnode, sink, problem.capacity, 0.0);
    }
    g.run(source, sink);

    let mut entries = Vec::new();
    for (k, j, arc) in entry_arcs {
        let mut x = g.flow(arc) / problem.demands[j];
        if x < SNAP {
            continue;
        }
        if x > 1.0 - SNAP {
            x = 1.0;
        }
        entries.push((middleboxes[k], j, x));
    }
    entries.sort_by_key(|e| (e.0, e.1));
    let objective = entries.iter().map(|e| e.2).sum();
    FractionalAssignment {
        middleboxes,
        entries,
        objective,
    }
}

/// `f(S ∪ {i}) − f(S)`.
pub fn gain(problem: &WeightedProblem, node: NodeId, current: &[NodeId]) -> f64 {
    let mut with: Vec<NodeId> = current.to_vec();
    with.push(node);
    solve_fractional(problem, &with).objective - solve_fractional(problem, current).objective
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStep {
    pub chosen: NodeId,
    pub gain: f64,
    pub objective_after: f64,
}

/// Result of the generalized greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen middleboxes in selection order.
    pub order: Vec<NodeId>,
    pub steps: Vec<WeightedStep>,
    pub fractional: FractionalAssignment,
}

fn threshold_reached(objective: f64, n: usize) -> bool {
    objective > (n as f64 - 1.0) + OBJECTIVE_TOLERANCE
}

/// Adds the candidate with the largest LP gain until `f(S) > n − 1`.
pub fn generalized_greedy(problem: &WeightedProblem) -> Result<Selection, WeightedError> {
    let n = problem.request_count();
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = solve_positions(problem, &chosen);
    let mut steps = Vec::new();
    while n > 0
        && !threshold_reached(current.objective, n)
        && chosen.len() < problem.candidates.len()
    {
        let remaining: Vec<usize> = (0..problem.candidates.len())
            .filter(|i| !chosen.contains(i))
            .collect();
        let evaluated: Vec<(usize, FractionalAssignment)> = remaining
            .par_iter()
            .map(|&i| {
                let mut with = chosen.clone();
                with.push(i);
                with.sort_unstable();
                (i, solve_positions(problem, &with))
            })
            .collect();
        let mut best: Option<(usize, FractionalAssignment)> = None;
        for (i, sol) in evaluated {
            let better = match &best {
                None => true,
                Some((_, b)) => sol.objective > b.objective + OBJECTIVE_TOLERANCE * 1e-3,
            };
            if better {
                best = Some((i, sol));
            }
        }
        let (i, sol) = best.expect("at least one candidate remains");
        let g = sol.objective - current.objective;
        if g <= OBJECTIVE_TOLERANCE * 1e-3 {
            // f(U) = f(S) by submodularity; nothing more can be served
            break;
        }
        chosen.push(i);
        steps.push(WeightedStep {
            chosen: problem.candidates[i],
            gain: g,
            objective_after: sol.objective,
        });
        current = sol;
    }
    if n > 0 && !threshold_reached(current.objective, n) {
        return Err(WeightedError::Infeasible {
            objective: current.objective,
            threshold: n as f64 - 1.0,
            uncoverable: problem.uncoverable(),
        });
    }
    Ok(Selection {
        order: chosen.iter().map(|&i| problem.candidates[i]).collect(),
        steps,
        fractional: current,
    })
}

/// Everything a weighted solve produces.
#[derive(Debug, Clone)]
pub struct WeightedOutcome {
    pub problem: WeightedProblem,
    pub selection: Selection,
    pub rounded: RoundedSolution,
}

/// Preprocess, select, and round.
pub fn solve_weighted(inst: &WeightedInstance) -> Result<WeightedOutcome, WeightedError> {
    let problem = inst.preprocess();
    let selection = generalized_greedy(&problem)?;
    let rounded = round_solution(&selection.fractional, &problem)?;
    Ok(WeightedOutcome {
        problem,
        selection,
        rounded,
    })
}
