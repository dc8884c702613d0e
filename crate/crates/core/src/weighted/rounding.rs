//! Rounding a fractional assignment to an integral one.
//!
//! Each middlebox `i` gets `⌈Σ_j x_ij⌉` unit slots. Its requests are poured
//! into the slots in order of non-increasing demand, so a request may straddle
//! two consecutive slots. A maximum matching of requests to slots then picks
//! one slot per request. Slot `k + 1` only holds requests no larger than the
//! smallest one in slot `k`, hence the load of `i` is at most
//! `p_max + Σ_j p_j x_ij <= 2κ`.

use std::collections::VecDeque;

use super::{FractionalAssignment, WeightedError, WeightedProblem};
use crate::graph::NodeId;

const SLOT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundedSolution {
    /// Middleboxes serving at least one request, ascending.
    pub active: Vec<NodeId>,
    /// Middlebox of each kept request.
    pub assignment: Vec<NodeId>,
    /// Total demand per active middlebox, in `active` order.
    pub loads: Vec<f64>,
}

impl RoundedSolution {
    pub fn max_load(&self) -> f64 {
        self.loads.iter().copied().fold(0.0, f64::max)
    }
}

/// Integral assignment of every kept request to a middlebox of `fractional`.
///
/// Fails if the fractional solution covers `n − 1` or less in total.
pub fn round_solution(
    fractional: &FractionalAssignment,
    problem: &WeightedProblem,
) -> Result<RoundedSolution, WeightedError> {
    let n = problem.request_count();
    let demands = problem.demands();
    // slot -> middlebox, request -> adjacent slots
    let mut slot_owner: Vec<NodeId> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &m in &fractional.middleboxes {
        let mut items: Vec<(usize, f64)> = fractional
            .entries
            .iter()
            .filter(|e| e.0 == m)
            .map(|e| (e.1, e.2))
            .collect();
        if items.is_empty() {
            continue;
        }
        items.sort_by(|a, b| demands[b.0].total_cmp(&demands[a.0]).then(a.0.cmp(&b.0)));
        let mut slot = slot_owner.len();
        slot_owner.push(m);
        let mut room = 1.0;
        for (j, x) in items {
            let mut left = x;
            while left > SLOT_EPS {
                if room <= SLOT_EPS {
                    slot = slot_owner.len();
                    slot_owner.push(m);
                    room = 1.0;
                }
                if adj[j].last() != Some(&slot) {
                    adj[j].push(slot);
                }
                let take = left.min(room);
                left -= take;
                room -= take;
            }
        }
    }

    let slot_mate = max_matching(&adj, slot_owner.len());
    let mut assignment = vec![None; n];
    for (slot, mate) in slot_mate.iter().enumerate() {
        if let Some(j) = *mate {
            assignment[j] = Some(slot_owner[slot]);
        }
    }
    let unmatched = assignment.iter().filter(|a| a.is_none()).count();
    if unmatched > 0 {
        return Err(WeightedError::RoundingFailed(format!(
            "{unmatched} of {n} requests left without a slot (fractional objective {})",
            fractional.objective
        )));
    }
    let assignment: Vec<NodeId> = assignment.into_iter().map(Option::unwrap).collect();

    let mut active: Vec<NodeId> = assignment.clone();
    active.sort_unstable();
    active.dedup();
    let mut loads = vec![0.0; active.len()];
    for (j, m) in assignment.iter().enumerate() {
        let k = active.binary_search(m).expect("active middlebox");
        loads[k] += demands[j];
    }
    Ok(RoundedSolution {
        active,
        assignment,
        loads,
    })
}

/// Maximum matching of left vertices into `right` slots by BFS augmenting
/// paths. Returns the left mate of each right vertex.
fn max_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    let mut right_mate: Vec<Option<usize>> = vec![None; right];
    let mut left_mate: Vec<Option<usize>> = vec![None; adj.len()];
    for start in 0..adj.len() {
        // parent[r] = left vertex that reached slot r
        let mut parent: Vec<Option<usize>> = vec![None; right];
        let mut queue = VecDeque::from([start]);
        let mut end = None;
        'bfs: while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                if parent[r].is_some() || left_mate[l] == Some(r) {
                    continue;
                }
                parent[r] = Some(l);
                match right_mate[r] {
                    None => {
                        end = Some(r);
                        break 'bfs;
                    }
                    Some(next) => queue.push_back(next),
                }
            }
        }
        let mut r = match end {
            Some(r) => r,
            None => continue,
        };
        loop {
            let l = parent[r].expect("slot on augmenting path");
            let prev = left_mate[l];
            left_mate[l] = Some(r);
            right_mate[r] = Some(l);
            match prev {
                Some(p) if l != start => r = p,
                _ => break,
            }
        }
    }
    right_mate
}
