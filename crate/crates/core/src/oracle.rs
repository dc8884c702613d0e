//! Exact baselines by exhaustive subset enumeration.
//!
//! Subsets of the candidate set are visited by increasing cardinality and,
//! within one cardinality, in lexicographic order of candidate positions. The
//! first subset that serves every pair is the optimum. Two cheap necessary
//! conditions skip most subsets before `φ` is computed: `k·κ >= |P|`, and the
//! union of the chosen `S_m` must contain every pair.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::NodeId;
use crate::instance::FeasibilitySets;
use crate::matching::{max_assignment, phi};
use crate::weighted::WeightedProblem;

pub const DEFAULT_LIMIT: usize = 16;
pub const WEIGHTED_CANDIDATE_LIMIT: usize = 12;
pub const WEIGHTED_REQUEST_LIMIT: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} is {size}, above the oracle limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("no candidate subset serves every request")]
    Infeasible,
    #[error("cannot choose {n} middleboxes out of {candidates}")]
    InvalidCount { n: usize, candidates: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// Middlebox count, or `φ` for [`max_assignment_for_n`].
    pub optimum: usize,
    /// Witness middleboxes, ascending.
    pub middleboxes: Vec<NodeId>,
    /// Middlebox serving each pair or request in the witness.
    pub assignment: Vec<Option<NodeId>>,
    /// Subsets visited, counted in sequential enumeration order.
    pub explored: u64,
    pub elapsed: Duration,
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

struct Cover {
    words: usize,
    sets: Vec<Vec<u64>>,
    full: Vec<u64>,
}

impl Cover {
    fn new(fs: &FeasibilitySets) -> Self {
        let pairs = fs.pair_count();
        let words = pairs.div_ceil(64);
        let sets = (0..fs.candidate_count())
            .map(|i| {
                let mut bits = vec![0u64; words];
                for &p in fs.pairs_of(i) {
                    bits[p / 64] |= 1 << (p % 64);
                }
                bits
            })
            .collect();
        let mut full = vec![u64::MAX; words];
        if !pairs.is_multiple_of(64) {
            full[words - 1] = (1u64 << (pairs % 64)) - 1;
        }
        Self { words, sets, full }
    }

    fn covers(&self, subset: &[usize]) -> bool {
        (0..self.words).all(|w| {
            let union = subset.iter().fold(0u64, |acc, &i| acc | self.sets[i][w]);
            union == self.full[w]
        })
    }
}

fn check_limit(what: &'static str, size: usize, limit: usize) -> Result<(), OracleError> {
    if size > limit {
        Err(OracleError::TooLarge { what, size, limit })
    } else {
        Ok(())
    }
}

fn nodes_of(fs: &FeasibilitySets, subset: &[usize]) -> Vec<NodeId> {
    subset.iter().map(|&i| fs.candidates()[i]).collect()
}

/// Minimum number of middleboxes serving every pair.
pub fn exact_min_middleboxes(
    fs: &FeasibilitySets,
    capacity: u32,
    limit: usize,
) -> Result<ExactResult, OracleError> {
    let start = Instant::now();
    let u = fs.candidate_count();
    check_limit("candidate count", u, limit)?;
    let pairs = fs.pair_count();
    if pairs == 0 {
        return Ok(ExactResult {
            optimum: 0,
            middleboxes: Vec::new(),
            assignment: Vec::new(),
            explored: 1,
            elapsed: start.elapsed(),
        });
    }
    if !fs.uncoverable_pairs().is_empty() || capacity == 0 {
        return Err(OracleError::Infeasible);
    }
    let cover = Cover::new(fs);
    let min_k = pairs.div_ceil(capacity as usize).max(1);
    let mut explored: u64 = (0..min_k.min(u + 1)).map(|k| binomial(u, k)).sum();
    for k in min_k..=u {
        let subsets = combinations(u, k);
        let hit = subsets
            .par_iter()
            .position_first(|s| cover.covers(s) && phi(&nodes_of(fs, s), fs, capacity) == pairs);
        match hit {
            Some(idx) => {
                explored += idx as u64 + 1;
                let middleboxes = nodes_of(fs, &subsets[idx]);
                let assignment = max_assignment(&middleboxes, fs, capacity).mapping();
                return Ok(ExactResult {
                    optimum: k,
                    middleboxes,
                    assignment,
                    explored,
                    elapsed: start.elapsed(),
                });
            }
            None => explored += subsets.len() as u64,
        }
    }
    Err(OracleError::Infeasible)
}

/// Largest `φ(M)` over all `M ⊆ U` with `|M| = n`; ties go to the
/// lexicographically first subset.
pub fn max_assignment_for_n(
    fs: &FeasibilitySets,
    capacity: u32,
    n: usize,
    limit: usize,
) -> Result<ExactResult, OracleError> {
    let start = Instant::now();
    let u = fs.candidate_count();
    check_limit("candidate count", u, limit)?;
    if n > u {
        return Err(OracleError::InvalidCount { n, candidates: u });
    }
    let subsets = combinations(u, n);
    let (best, idx) = subsets
        .par_iter()
        .enumerate()
        .map(|(i, s)| (phi(&nodes_of(fs, s), fs, capacity), i))
        .reduce(
            || (0, usize::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    let middleboxes = nodes_of(fs, &subsets[idx]);
    let assignment = max_assignment(&middleboxes, fs, capacity).mapping();
    Ok(ExactResult {
        optimum: best,
        middleboxes,
        assignment,
        explored: subsets.len() as u64,
        elapsed: start.elapsed(),
    })
}

/// Minimum number of middleboxes admitting an integral assignment of every
/// kept request with loads at most `κ`.
pub fn exact_weighted_min_middleboxes(
    problem: &WeightedProblem,
) -> Result<ExactResult, OracleError> {
    let start = Instant::now();
    let u = problem.candidates().len();
    let n = problem.request_count();
    check_limit("candidate count", u, WEIGHTED_CANDIDATE_LIMIT)?;
    check_limit("request count", n, WEIGHTED_REQUEST_LIMIT)?;
    if n == 0 {
        return Ok(ExactResult {
            optimum: 0,
            middleboxes: Vec::new(),
            assignment: Vec::new(),
            explored: 1,
            elapsed: start.elapsed(),
        });
    }
    if !problem.uncoverable().is_empty() {
        return Err(OracleError::Infeasible);
    }
    let demands = problem.demands();
    let total: f64 = demands.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| demands[b].total_cmp(&demands[a]).then(a.cmp(&b)));

    let mut explored = 0u64;
    for k in 1..=u {
        let subsets = combinations(u, k);
        if (k as f64) * problem.capacity() < total - 1e-9 {
            explored += subsets.len() as u64;
            continue;
        }
        let hit = subsets
            .par_iter()
            .enumerate()
            .find_map_first(|(i, s)| pack(problem, &order, s).map(|a| (i, a)));
        match hit {
            Some((idx, slots)) => {
                explored += idx as u64 + 1;
                let chosen = &subsets[idx];
                let nodes: Vec<NodeId> = chosen.iter().map(|&i| problem.candidates()[i]).collect();
                return Ok(ExactResult {
                    optimum: k,
                    middleboxes: nodes.clone(),
                    assignment: slots.into_iter().map(|s| Some(nodes[s])).collect(),
                    explored,
                    elapsed: start.elapsed(),
                });
            }
            None => explored += subsets.len() as u64,
        }
    }
    Err(OracleError::Infeasible)
}

/// Exhaustive assignment of requests (in `order`) to the candidate positions
/// in `subset`. Returns, per request, an index into `subset`.
fn pack(problem: &WeightedProblem, order: &[usize], subset: &[usize]) -> Option<Vec<usize>> {
    let n = problem.request_count();
    let demands = problem.demands();
    let cap = problem.capacity();
    let options: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..subset.len())
                .filter(|&s| problem.is_allowed(subset[s], j))
                .collect()
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return None;
    }
    let mut residual = vec![cap; subset.len()];
    let mut choice = vec![0usize; n];
    if search(0, order, &options, demands, &mut residual, &mut choice) {
        Some(choice)
    } else {
        None
    }
}

fn search(
    depth: usize,
    order: &[usize],
    options: &[Vec<usize>],
    demands: &[f64],
    residual: &mut [f64],
    choice: &mut [usize],
) -> bool {
    let Some(&j) = order.get(depth) else {
        return true;
    };
    let remaining: f64 = order[depth..].iter().map(|&r| demands[r]).sum();
    let room: f64 = residual.iter().sum();
    if remaining > room + 1e-9 {
        return false;
    }
    for &s in &options[j] {
        if demands[j] > residual[s] + 1e-9 {
            continue;
        }
        residual[s] -= demands[j];
        choice[j] = s;
        if search(depth + 1, order, options, demands, residual, choice) {
            return true;
        }
        residual[s] += demands[j];
    }
    false
}

/// One row of the greedy-versus-optimum series.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SeriesPoint {
    pub n: usize,
    pub phi_greedy: usize,
    pub phi_opt: Option<usize>,
    /// `(φ_opt − φ_greedy) / φ_opt`, 0 when `φ_opt = 0`.
    pub relative_difference: Option<f64>,
    /// Middlebox opened at step `n`.
    pub middlebox: Option<NodeId>,
}

pub fn relative_difference(phi_opt: usize, phi_greedy: usize) -> f64 {
    if phi_opt == 0 {
        0.0
    } else {
        (phi_opt as f64 - phi_greedy as f64) / phi_opt as f64
    }
}

/// Greedy `φ` after `n = 0..=steps` steps, optionally against the best `φ`
/// for `n` middleboxes. Once greedy serves everything or stalls, later rows
/// repeat its final value.
pub fn incremental_series(
    fs: &FeasibilitySets,
    capacity: u32,
    steps: usize,
    oracle_limit: Option<usize>,
) -> Result<Vec<SeriesPoint>, OracleError> {
    if let Some(limit) = oracle_limit {
        check_limit("candidate count", fs.candidate_count(), limit)?;
    }
    let mut trace = crate::greedy::GreedyTrace::new(fs, capacity);
    let mut rows = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let mut middlebox = None;
        if n > 0 && !trace.is_complete() {
            middlebox = trace.greedy_step().ok().map(|s| s.chosen);
        }
        let phi_greedy = trace.assignment().assigned_count();
        let phi_opt = match oracle_limit {
            Some(limit) => Some(
                max_assignment_for_n(fs, capacity, n.min(fs.candidate_count()), limit)?.optimum,
            ),
            None => None,
        };
        rows.push(SeriesPoint {
            n,
            phi_greedy,
            phi_opt,
            relative_difference: phi_opt.map(|o| relative_difference(o, phi_greedy)),
            middlebox,
        });
    }
    Ok(rows)
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_in_lexicographic_order() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
        for n in 0..8 {
            for k in 0..=n {
                assert_eq!(combinations(n, k).len() as u64, binomial(n, k));
            }
        }
    }

    #[test]
    fn empty_pairs_need_nothing() {
        let fs = FeasibilitySets::from_candidate_sets(vec![0, 1], 0, vec![vec![], vec![]]);
        let r = exact_min_middleboxes(&fs, 1, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.optimum, 0);
        assert!(r.middleboxes.is_empty());
    }

    #[test]
    fn finds_lexicographically_first_witness() {
        let fs = FeasibilitySets::from_candidate_sets(
            vec![3, 5, 8],
            4,
            vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]],
        );
        let r = exact_min_middleboxes(&fs, 2, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.optimum, 2);
        assert_eq!(r.middleboxes, vec![3, 5]);
        // k = 1 skipped by the capacity bound, [0,1] found first
        assert_eq!(r.explored, 1 + 3 + 1);
        let r = exact_min_middleboxes(&fs, 4, DEFAULT_LIMIT).unwrap();
        assert_eq!((r.optimum, r.middleboxes.clone()), (1, vec![8]));
        assert!(r.assignment.iter().all(|a| *a == Some(8)));
    }

    #[test]
    fn limit_and_infeasibility() {
        let fs = FeasibilitySets::from_candidate_sets(vec![0, 1], 2, vec![vec![0], vec![0]]);
        assert_eq!(
            exact_min_middleboxes(&fs, 1, DEFAULT_LIMIT),
            Err(OracleError::Infeasible)
        );
        assert!(matches!(
            exact_min_middleboxes(&fs, 1, 1),
            Err(OracleError::TooLarge {
                size: 2,
                limit: 1,
                ..
            })
        ));
        let fs = FeasibilitySets::from_candidate_sets(vec![0], 2, vec![vec![0, 1]]);
        assert_eq!(
            exact_min_middleboxes(&fs, 1, DEFAULT_LIMIT),
            Err(OracleError::Infeasible)
        );
    }

    #[test]
    fn max_assignment_series() {
        let fs = FeasibilitySets::from_candidate_sets(
            vec![0, 1, 2],
            5,
            vec![vec![0, 1], vec![1, 2, 3], vec![4]],
        );
        let phis: Vec<usize> = (0..=3)
            .map(|n| {
                max_assignment_for_n(&fs, 2, n, DEFAULT_LIMIT)
                    .unwrap()
                    .optimum
            })
            .collect();
        assert_eq!(phis, vec![0, 2, 4, 5]);
        assert_eq!(
            max_assignment_for_n(&fs, 2, 4, DEFAULT_LIMIT),
            Err(OracleError::InvalidCount {
                n: 4,
                candidates: 3
            })
        );
        let r = max_assignment_for_n(&fs, 2, 1, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.middleboxes, vec![0]);
    }

    #[test]
    fn series_reaches_zero() {
        let fs = FeasibilitySets::from_candidate_sets(
            vec![0, 1, 2],
            5,
            vec![vec![0, 1], vec![1, 2, 3], vec![4]],
        );
        let rows = incremental_series(&fs, 2, 4, Some(DEFAULT_LIMIT)).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].relative_difference, Some(0.0));
        assert_eq!(rows[0].phi_greedy, 0);
        assert!(rows.iter().all(|r| r.relative_difference.unwrap() >= 0.0));
        assert_eq!(rows[3].phi_greedy, 5);
        assert_eq!(rows[4].phi_opt, Some(5));
        assert_eq!(rows[4].middlebox, None);
        let plain = incremental_series(&fs, 2, 2, None).unwrap();
        assert!(plain.iter().all(|r| r.phi_opt.is_none()));
        assert_eq!(relative_difference(4, 3), 0.25);
    }

    #[test]
    fn weighted_single_request() {
        let pb = WeightedProblem::from_parts(vec![0, 1], vec![2.0], vec![vec![0], vec![0]], 2.0);
        let r = exact_weighted_min_middleboxes(&pb).unwrap();
        assert_eq!(r.optimum, 1);
        assert_eq!(r.middleboxes, vec![0]);
    }

    #[test]
    fn weighted_pigeonhole() {
        let one = WeightedProblem::from_parts(vec![0], vec![2.0, 2.0], vec![vec![0, 1]], 2.0);
        assert_eq!(
            exact_weighted_min_middleboxes(&one),
            Err(OracleError::Infeasible)
        );
        let two = WeightedProblem::from_parts(
            vec![0, 1],
            vec![2.0, 2.0],
            vec![vec![0, 1], vec![0, 1]],
            2.0,
        );
        let r = exact_weighted_min_middleboxes(&two).unwrap();
        assert_eq!(r.optimum, 2);
        assert_ne!(r.assignment[0], r.assignment[1]);
    }

    #[test]
    fn weighted_needs_backtracking() {
        // only 3+2 on each box works
        let pb = WeightedProblem::from_parts(
            vec![0, 1],
            vec![3.0, 3.0, 2.0, 2.0],
            vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]],
            5.0,
        );
        let r = exact_weighted_min_middleboxes(&pb).unwrap();
        assert_eq!(r.optimum, 2);
    }
}
