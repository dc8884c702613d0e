//! The placement problem model: communication pairs, candidate locations,
//! capacity, route constraint, and the precomputed feasibility sets that
//! every solver works from.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{compute_apsp, DistanceMatrix, GraphError, Metric, Network, NodeId};

/// Relative tolerance of every distance comparison.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// `lhs <= rhs` up to [`FEASIBILITY_TOLERANCE`] relative error.
#[inline]
pub fn leq_with_tolerance(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs || (lhs.is_finite() && lhs - rhs <= FEASIBILITY_TOLERANCE * lhs.abs().max(rhs.abs()))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("pair ({0}, {0}) has identical endpoints")]
    DegeneratePair(NodeId),
    #[error("node {0} is not part of the network")]
    UnknownNode(NodeId),
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("invalid route constraint: {0}")]
    InvalidConstraint(String),
    #[error("pair {index} ({s}, {t}) is disconnected")]
    DisconnectedPair { index: usize, s: NodeId, t: NodeId },
    #[error("pair {index} ({s}, {t}) has no feasible candidate")]
    InfeasiblePair { index: usize, s: NodeId, t: NodeId },
    #[error("instance is infeasible: {reason}")]
    Infeasible {
        reason: String,
        /// Pair indices that no candidate can serve.
        uncoverable: Vec<usize>,
    },
}

/// An unordered communication pair, canonicalized so that `s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    s: NodeId,
    t: NodeId,
}

impl Pair {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self, InstanceError> {
        if a == b {
            return Err(InstanceError::DegeneratePair(a));
        }
        Ok(Self {
            s: a.min(b),
            t: a.max(b),
        })
    }

    pub fn s(&self) -> NodeId {
        self.s
    }

    pub fn t(&self) -> NodeId {
        self.t
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.s, self.t)
    }
}

/// Constraint on the route `s -> u -> t` through a middlebox at `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteConstraint {
    /// `d(s,u) + d(u,t) <= rho * d(s,t)`, `rho >= 1`.
    Stretch(f64),
    /// `d(s,u) + d(u,t) <= length`.
    MaxLength(f64),
}

impl RouteConstraint {
    pub fn validate(&self) -> Result<(), InstanceError> {
        match *self {
            RouteConstraint::Stretch(rho) if rho.is_finite() && rho >= 1.0 => Ok(()),
            RouteConstraint::MaxLength(l) if l.is_finite() && l >= 0.0 => Ok(()),
            RouteConstraint::Stretch(rho) => Err(InstanceError::InvalidConstraint(format!(
                "stretch {rho} must be a finite value >= 1"
            ))),
            RouteConstraint::MaxLength(l) => Err(InstanceError::InvalidConstraint(format!(
                "maximum route length {l} must be finite and nonnegative"
            ))),
        }
    }

    /// Whether routing `s -> u -> t` is admissible.
    #[inline]
    pub fn admits(&self, dist: &DistanceMatrix, s: NodeId, u: NodeId, t: NodeId) -> bool {
        let via = dist.get(s, u) + dist.get(u, t);
        if !via.is_finite() {
            return false;
        }
        let bound = match *self {
            RouteConstraint::Stretch(rho) => rho * dist.get(s, t),
            RouteConstraint::MaxLength(l) => l,
        };
        leq_with_tolerance(via, bound)
    }
}

/// A complete unweighted placement problem.
#[derive(Debug, Clone)]
pub struct PlacementInstance {
    network: Network,
    metric: Metric,
    distances: DistanceMatrix,
    pairs: Vec<Pair>,
    candidates: Vec<NodeId>,
    capacity: u32,
    constraint: RouteConstraint,
}

impl PlacementInstance {
    /// Computes the distance matrix with `metric` and validates the instance.
    pub fn new(
        network: Network,
        metric: Metric,
        pairs: Vec<Pair>,
        candidates: Vec<NodeId>,
        capacity: u32,
        constraint: RouteConstraint,
    ) -> Result<Self, InstanceError> {
        let distances = compute_apsp(&network, metric)?;
        Self::with_distances(
            network, metric, distances, pairs, candidates, capacity, constraint,
        )
    }

    /// Like [`PlacementInstance::new`] with a precomputed matrix.
    pub fn with_distances(
        network: Network,
        metric: Metric,
        distances: DistanceMatrix,
        pairs: Vec<Pair>,
        candidates: Vec<NodeId>,
        capacity: u32,
        constraint: RouteConstraint,
    ) -> Result<Self, InstanceError> {
        let n = network.node_count();
        assert_eq!(distances.len(), n, "distance matrix does not match network");
        if capacity == 0 {
            return Err(InstanceError::ZeroCapacity);
        }
        constraint.validate()?;

        let candidates: Vec<NodeId> = candidates
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if candidates.is_empty() {
            return Err(InstanceError::NoCandidates);
        }
        if let Some(&bad) = candidates.iter().find(|&&u| u >= n) {
            return Err(InstanceError::UnknownNode(bad));
        }

        let mut seen = BTreeSet::new();
        let mut unique = Vec::with_capacity(pairs.len());
        for p in pairs {
            for v in [p.s, p.t] {
                if v >= n {
                    return Err(InstanceError::UnknownNode(v));
                }
            }
            if seen.insert(p) {
                unique.push(p);
            } else {
                log::warn!("duplicate pair {p} dropped");
            }
        }
        for (index, p) in unique.iter().enumerate() {
            if !distances.is_reachable(p.s, p.t) {
                return Err(InstanceError::DisconnectedPair {
                    index,
                    s: p.s,
                    t: p.t,
                });
            }
        }

        Ok(Self {
            network,
            metric,
            distances,
            pairs: unique,
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

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// Sorted candidate locations `U`.
    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn constraint(&self) -> RouteConstraint {
        self.constraint
    }

    /// Same instance under a different route constraint.
    pub fn with_constraint(&self, constraint: RouteConstraint) -> Result<Self, InstanceError> {
        constraint.validate()?;
        Ok(Self {
            constraint,
            ..self.clone()
        })
    }

    /// Same instance with a different capacity.
    pub fn with_capacity(&self, capacity: u32) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            ..self.clone()
        })
    }
}

/// Whether a middlebox at `u` may serve pair `p` in `inst`.
pub fn is_feasible(u: NodeId, p: Pair, inst: &PlacementInstance) -> bool {
    inst.constraint.admits(&inst.distances, p.s, u, p.t)
}

/// Bipartite incidence between candidates and pairs.
///
/// `S_u` lists, per candidate, the pair indices it may serve; `C_p` lists, per
/// pair, the candidate positions (indices into [`FeasibilitySets::candidates`])
/// able to serve it. Both are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilitySets {
    candidates: Vec<NodeId>,
    by_candidate: Vec<Vec<usize>>,
    by_pair: Vec<Vec<usize>>,
}

impl FeasibilitySets {
    /// Evaluates the route constraint for every (candidate, pair) combination.
    pub fn compute(inst: &PlacementInstance) -> Self {
        let by_candidate = inst
            .candidates
            .iter()
            .map(|&u| {
                inst.pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| is_feasible(u, **p, inst))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Self::from_candidate_sets(inst.candidates.clone(), inst.pairs.len(), by_candidate)
    }

    /// Builds the sets directly from `S_u` lists. `candidates` must be
    /// strictly increasing and every pair index below `pair_count`.
    pub fn from_candidate_sets(
        candidates: Vec<NodeId>,
        pair_count: usize,
        mut by_candidate: Vec<Vec<usize>>,
    ) -> Self {
        assert_eq!(candidates.len(), by_candidate.len());
        assert!(
            candidates.windows(2).all(|w| w[0] < w[1]),
            "candidates must be strictly increasing"
        );
        let mut by_pair = vec![Vec::new(); pair_count];
        for (ci, set) in by_candidate.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            for &p in set.iter() {
                assert!(p < pair_count, "pair index {p} out of range");
                by_pair[p].push(ci);
            }
        }
        Self {
            candidates,
            by_candidate,
            by_pair,
        }
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn pair_count(&self) -> usize {
        self.by_pair.len()
    }

    /// Position of `node` in the candidate list.
    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.candidates.binary_search(&node).ok()
    }

    /// `S_u` for the candidate at `position`.
    pub fn pairs_of(&self, position: usize) -> &[usize] {
        &self.by_candidate[position]
    }

    /// `S_u` for the candidate node `node`.
    pub fn pairs_of_node(&self, node: NodeId) -> Option<&[usize]> {
        self.position(node).map(|i| self.pairs_of(i))
    }

    /// `C_p` as candidate positions.
    pub fn candidates_of(&self, pair: usize) -> &[usize] {
        &self.by_pair[pair]
    }

    pub fn contains(&self, position: usize, pair: usize) -> bool {
        self.by_candidate[position].binary_search(&pair).is_ok()
    }

    /// Pairs with an empty `C_p`.
    pub fn uncoverable_pairs(&self) -> Vec<usize> {
        (0..self.pair_count())
            .filter(|&p| self.by_pair[p].is_empty())
            .collect()
    }
}

/// Computes the feasibility sets, failing on the first pair without a feasible candidate.
pub fn build_feasibility(inst: &PlacementInstance) -> Result<FeasibilitySets, InstanceError> {
    let fs = FeasibilitySets::compute(inst);
    if let Some(&index) = fs.uncoverable_pairs().first() {
        let p = inst.pairs[index];
        return Err(InstanceError::InfeasiblePair {
            index,
            s: p.s,
            t: p.t,
        });
    }
    Ok(fs)
}

/// Necessary (not sufficient) feasibility test: every pair has a candidate
/// and `|P| <= capacity * |U|`.
pub fn feasible_total_capacity_check(
    inst: &PlacementInstance,
    fs: &FeasibilitySets,
) -> Result<(), InstanceError> {
    let uncoverable = fs.uncoverable_pairs();
    if !uncoverable.is_empty() {
        let listing: Vec<String> = uncoverable
            .iter()
            .map(|&i| format!("#{i} {}", inst.pairs[i]))
            .collect();
        return Err(InstanceError::Infeasible {
            reason: format!("no feasible candidate for pairs {}", listing.join(", ")),
            uncoverable,
        });
    }
    let total = inst.capacity as usize * fs.candidate_count();
    if fs.pair_count() > total {
        return Err(InstanceError::Infeasible {
            reason: format!(
                "{} pairs exceed total capacity {} ({} candidates x {})",
                fs.pair_count(),
                total,
                fs.candidate_count(),
                inst.capacity
            ),
            uncoverable,
        });
    }
    Ok(())
}
