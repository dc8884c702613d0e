//! Greedy incremental middlebox deployment.
//!
//! Each step opens the candidate with the largest marginal gain
//! `φ(M ∪ {m}) − φ(M)` (ties to the smallest node id) and commits its
//! augmenting paths to the live assignment. Earlier middleboxes are never
//! moved and served pairs are never dropped. Because `φ` is submodular the
//! number of opened middleboxes is at most `1 + ln(min(κ, |P|))` times the
//! optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::instance::FeasibilitySets;
use crate::matching::Assignment;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GreedyError {
    #[error("no candidate increases the assignment; {free} pairs remain unserved")]
    Stalled { free: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// 1-based step number.
    pub iteration: usize,
    pub chosen: NodeId,
    pub phi_after: usize,
    pub gain: usize,
}

/// `(gain, candidate position)`.
type Scored = (usize, usize);

/// The greedy run so far: the steps taken and the live assignment.
#[derive(Debug, Clone)]
pub struct GreedyTrace<'a> {
    steps: Vec<GreedyStep>,
    assignment: Assignment<'a>,
    /// Last exactly evaluated gain per candidate position. By submodularity
    /// it bounds every later gain of the same candidate.
    gain_bound: Vec<usize>,
}

impl<'a> GreedyTrace<'a> {
    /// A trace with no middlebox opened.
    pub fn new(fs: &'a FeasibilitySets, capacity: u32) -> Self {
        let gain_bound = (0..fs.candidate_count())
            .map(|i| fs.pairs_of(i).len().min(capacity as usize))
            .collect();
        Self {
            steps: Vec::new(),
            assignment: Assignment::new(fs, capacity),
            gain_bound,
        }
    }

    pub fn steps(&self) -> &[GreedyStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Opened middleboxes in the order they were chosen.
    pub fn middleboxes(&self) -> Vec<NodeId> {
        self.steps.iter().map(|s| s.chosen).collect()
    }

    pub fn assignment(&self) -> &Assignment<'a> {
        &self.assignment
    }

    pub fn into_assignment(self) -> Assignment<'a> {
        self.assignment
    }

    pub fn is_complete(&self) -> bool {
        self.assignment.is_complete()
    }

    /// Best next candidate and its gain, without committing.
    ///
    /// Candidates are scanned in order of decreasing gain bound; a candidate
    /// is evaluated only if its bound could still beat the incumbent. Each
    /// batch of evaluations runs in parallel on snapshots of the assignment.
    /// The result is the exact argmax, independent of the thread count.
    pub fn best_candidate(&self) -> Result<(NodeId, usize), GreedyError> {
        let (best, _) = self.select();
        let fs = self.assignment.feasibility();
        best.map(|(gain, pos)| (fs.candidates()[pos], gain))
            .ok_or(GreedyError::Stalled {
                free: self.assignment.free_count(),
            })
    }

    /// Returns the winner as `(gain, position)` plus every exact evaluation.
    fn select(&self) -> (Option<Scored>, Vec<Scored>) {
        let free = self.assignment.free_count();
        let fs = self.assignment.feasibility();
        let mut order: Vec<(usize, usize)> = (0..fs.candidate_count())
            .filter(|&i| !self.assignment.is_active_position(i))
            .map(|i| (self.bound(i, free), i))
            .filter(|&(b, _)| b > 0)
            .collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let batch = rayon::current_num_threads().max(1);
        let mut best: Option<(usize, usize)> = None;
        let mut seen = Vec::new();
        let mut cursor = 0;
        while cursor < order.len() {
            let (top_bound, top_pos) = order[cursor];
            if !could_win(top_bound, top_pos, best) {
                break;
            }
            let end = (cursor + batch).min(order.len());
            let evaluated: Vec<(usize, usize)> = order[cursor..end]
                .par_iter()
                .filter(|&&(b, pos)| could_win(b, pos, best))
                .map(|&(_, pos)| (self.assignment.gain_at_position(pos), pos))
                .collect();
            for &(gain, pos) in &evaluated {
                let better = match best {
                    None => gain > 0,
                    Some((g, p)) => gain > g || (gain == g && pos < p),
                };
                if better {
                    best = Some((gain, pos));
                }
            }
            seen.extend(evaluated);
            cursor = end;
        }
        (best, seen)
    }

    fn bound(&self, pos: usize, free: usize) -> usize {
        self.gain_bound[pos].min(free)
    }

    /// Opens the best candidate and records the step.
    pub fn greedy_step(&mut self) -> Result<GreedyStep, GreedyError> {
        let (best, evaluated) = self.select();
        let Some((expected, pos)) = best else {
            return Err(GreedyError::Stalled {
                free: self.assignment.free_count(),
            });
        };
        for (gain, p) in evaluated {
            self.gain_bound[p] = gain;
        }
        let chosen = self.assignment.feasibility().candidates()[pos];
        let gain = self
            .assignment
            .add_middlebox(chosen)
            .expect("chosen candidate is inactive");
        debug_assert_eq!(gain, expected);
        self.gain_bound[pos] = 0;
        let step = GreedyStep {
            iteration: self.steps.len() + 1,
            chosen,
            phi_after: self.assignment.assigned_count(),
            gain,
        };
        self.steps.push(step);
        Ok(step)
    }

    /// Takes up to `budget` more steps, stopping early once every pair is
    /// served or no candidate helps. Returns the number of steps taken.
    pub fn extend(&mut self, budget: usize) -> usize {
        let mut taken = 0;
        while taken < budget && !self.is_complete() {
            if self.greedy_step().is_err() {
                break;
            }
            taken += 1;
        }
        taken
    }
}

fn could_win(bound: usize, pos: usize, best: Option<(usize, usize)>) -> bool {
    match best {
        None => bound > 0,
        Some((g, p)) => bound > g || (bound == g && pos < p),
    }
}

/// Runs the greedy algorithm to completion.
pub fn greedy_place(fs: &FeasibilitySets, capacity: u32) -> Result<GreedyTrace<'_>, GreedyError> {
    let mut trace = GreedyTrace::new(fs, capacity);
    while !trace.is_complete() {
        trace.greedy_step()?;
    }
    Ok(trace)
}

/// Continues `trace` by at most `budget` steps.
pub fn incremental_extend(mut trace: GreedyTrace<'_>, budget: usize) -> GreedyTrace<'_> {
    trace.extend(budget);
    trace
}

/// `1 + ln(min(κ, |P|))`, the approximation factor of [`greedy_place`].
pub fn approximation_bound(capacity: u32, pairs: usize) -> f64 {
    let m = (capacity as usize).min(pairs).max(1);
    1.0 + (m as f64).ln()
}
