//! Capacitated middlebox placement under a route-stretch constraint.
//!
//! Every communication pair `(s, t)` must be routed through one middlebox `u`
//! with `d(s,u) + d(u,t) <= ρ·d(s,t)`, and each middlebox serves at most `κ`
//! pairs. [`greedy::greedy_place`] opens middleboxes one at a time by maximum
//! marginal gain of the assignable-pair count `φ`, which it maintains with
//! augmenting paths. [`weighted`] handles demands and group requests through
//! an LP relaxation and rounding, and [`oracle`] holds exact baselines for
//! small instances.
//!
//! ```
//! use nfplace::{greedy_place, FeasibilitySets, Metric, Network, Pair, PlacementInstance, RouteConstraint};
//!
//! let mut net = Network::with_nodes(3);
//! net.add_edge(0, 1, 1.0).unwrap();
//! net.add_edge(1, 2, 1.0).unwrap();
//! let inst = PlacementInstance::new(
//!     net,
//!     Metric::EdgeWeight,
//!     vec![Pair::new(0, 2).unwrap()],
//!     vec![1],
//!     1,
//!     RouteConstraint::Stretch(1.0),
//! )
//! .unwrap();
//! let fs = FeasibilitySets::compute(&inst);
//! let trace = greedy_place(&fs, inst.capacity()).unwrap();
//! assert_eq!(trace.middleboxes(), vec![1]);
//! ```

pub mod graph;
pub mod greedy;
pub mod ingest;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod weighted;

pub use graph::{compute_apsp, DistanceMatrix, GeoCoord, GraphError, Metric, Network, NodeId};
pub use greedy::{
    approximation_bound, greedy_place, incremental_extend, GreedyError, GreedyStep, GreedyTrace,
};
pub use instance::{
    build_feasibility, is_feasible, FeasibilitySets, InstanceError, Pair, PlacementInstance,
    RouteConstraint,
};
pub use matching::{max_assignment, phi, Assignment, AugmentingPath, MatchingError};
pub use oracle::{
    exact_min_middleboxes, exact_weighted_min_middleboxes, incremental_series,
    max_assignment_for_n, ExactResult, OracleError, SeriesPoint,
};
pub use weighted::{
    generalized_greedy, round_solution, solve_fractional, solve_weighted, Request, RequestKind,
    WeightedError, WeightedInstance, WeightedProblem,
};
