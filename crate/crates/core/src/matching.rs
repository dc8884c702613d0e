//! Capacitated bipartite assignment of pairs to middleboxes.
//!
//! [`Assignment`] keeps a maximum partial assignment for the active
//! middlebox set `M` and grows it with augmenting paths as middleboxes are
//! added. A pair, once assigned, stays assigned; it may be handed over to
//! another middlebox along an augmenting path, but never dropped.
//!
//! The bipartite graph `B(M)` links a middlebox `m` to pair `p` when
//! `p ∈ S_m`. An augmenting path starts at a middlebox whose load is below
//! the capacity, alternates non-assignment and assignment edges, and ends at
//! a free pair. Flipping it assigns one more pair and leaves the loads of all
//! internal middleboxes unchanged.
//!
//! When middlebox `m` joins a maximum assignment, only paths starting at `m`
//! can exist, and once a search from `m` fails no later search will succeed,
//! so [`Assignment::add_middlebox`] needs at most `min(capacity, free pairs)`
//! breadth-first searches.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::NodeId;
use crate::instance::FeasibilitySets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("node {0} is not a candidate location")]
    NotCandidate(NodeId),
    #[error("middlebox {0} is already active")]
    AlreadyActive(NodeId),
    #[error("invalid augmenting path: {0}")]
    InvalidPath(String),
    #[error("assignment invariant violated: {0}")]
    Invariant(String),
}

/// Alternating path `m_1, p_1, m_2, p_2, ..., m_k, p_k`.
///
/// `(m_i, p_i)` are non-assignment edges and `(p_i, m_{i+1})` are assignment
/// edges; `p_k` is free and `m_1` has spare capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentingPath {
    pub middleboxes: Vec<NodeId>,
    pub pairs: Vec<usize>,
}

impl AugmentingPath {
    /// Number of edges on the path, `2k - 1`.
    pub fn edge_count(&self) -> usize {
        2 * self.pairs.len() - 1
    }

    pub fn start(&self) -> NodeId {
        self.middleboxes[0]
    }

    /// The free pair that becomes assigned.
    pub fn end(&self) -> usize {
        *self.pairs.last().expect("path is never empty")
    }
}

/// Partial assignment `µ: pair -> middlebox` with per-middlebox load.
#[derive(Debug, Clone)]
pub struct Assignment<'a> {
    fs: &'a FeasibilitySets,
    capacity: u32,
    /// Candidate position serving each pair.
    mate: Vec<Option<usize>>,
    load: Vec<u32>,
    active: Vec<bool>,
    assigned: usize,
}

impl<'a> Assignment<'a> {
    /// Empty assignment with no active middlebox.
    pub fn new(fs: &'a FeasibilitySets, capacity: u32) -> Self {
        Self {
            fs,
            capacity,
            mate: vec![None; fs.pair_count()],
            load: vec![0; fs.candidate_count()],
            active: vec![false; fs.candidate_count()],
            assigned: 0,
        }
    }

    pub fn feasibility(&self) -> &'a FeasibilitySets {
        self.fs
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned
    }

    pub fn free_count(&self) -> usize {
        self.mate.len() - self.assigned
    }

    pub fn is_complete(&self) -> bool {
        self.free_count() == 0
    }

    pub fn is_active(&self, node: NodeId) -> bool {
        self.fs.position(node).is_some_and(|i| self.active[i])
    }

    pub(crate) fn is_active_position(&self, position: usize) -> bool {
        self.active[position]
    }

    /// Active middleboxes in ascending node order.
    pub fn active_middleboxes(&self) -> Vec<NodeId> {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| self.fs.candidates()[i])
            .collect()
    }

    pub fn middlebox_of(&self, pair: usize) -> Option<NodeId> {
        self.mate[pair].map(|i| self.fs.candidates()[i])
    }

    /// `µ` as a vector indexed by pair.
    pub fn mapping(&self) -> Vec<Option<NodeId>> {
        (0..self.mate.len()).map(|p| self.middlebox_of(p)).collect()
    }

    pub fn load(&self, node: NodeId) -> u32 {
        self.fs.position(node).map_or(0, |i| self.load[i])
    }

    /// Pairs currently served by `node`, ascending.
    pub fn pairs_served_by(&self, node: NodeId) -> Vec<usize> {
        match self.fs.position(node) {
            Some(i) => (0..self.mate.len())
                .filter(|&p| self.mate[p] == Some(i))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Number of pairs assigned to a middlebox in `subset` (the size of the
    /// projection of this assignment onto `subset`).
    pub fn projection_count(&self, subset: &[NodeId]) -> usize {
        let mut keep = vec![false; self.fs.candidate_count()];
        for &m in subset {
            if let Some(i) = self.fs.position(m) {
                keep[i] = true;
            }
        }
        self.mate
            .iter()
            .filter(|m| m.is_some_and(|i| keep[i]))
            .count()
    }

    /// Activates `node` and augments until the assignment is maximum for the
    /// enlarged set. Returns the number of newly assigned pairs.
    pub fn add_middlebox(&mut self, node: NodeId) -> Result<usize, MatchingError> {
        let pos = self
            .fs
            .position(node)
            .ok_or(MatchingError::NotCandidate(node))?;
        if self.active[pos] {
            return Err(MatchingError::AlreadyActive(node));
        }
        self.active[pos] = true;
        Ok(self.augment_from(pos))
    }

    fn augment_from(&mut self, pos: usize) -> usize {
        let mut gained = 0;
        while self.load[pos] < self.capacity && self.assigned < self.mate.len() {
            match self.search(pos) {
                Some((mboxes, pairs)) => {
                    self.flip(&mboxes, &pairs);
                    gained += 1;
                }
                None => break,
            }
        }
        gained
    }

    /// Gain of adding `node`, evaluated on a private copy of the state.
    pub fn gain_if_added(&self, node: NodeId) -> Result<usize, MatchingError> {
        let mut snapshot = self.clone();
        snapshot.add_middlebox(node)
    }

    pub(crate) fn gain_at_position(&self, pos: usize) -> usize {
        debug_assert!(!self.active[pos]);
        let mut snapshot = self.clone();
        snapshot.active[pos] = true;
        snapshot.augment_from(pos)
    }

    /// Shortest augmenting path from `start`, exploring pairs in ascending
    /// index order. `None` if `start` is inactive, full, or no path exists.
    pub fn find_augmenting_path(&self, start: NodeId) -> Option<AugmentingPath> {
        let pos = self.fs.position(start)?;
        if !self.active[pos] || self.load[pos] >= self.capacity {
            return None;
        }
        let (mboxes, pairs) = self.search(pos)?;
        let names = self.fs.candidates();
        Some(AugmentingPath {
            middleboxes: mboxes.into_iter().map(|i| names[i]).collect(),
            pairs,
        })
    }

    /// BFS over `B(M)` from candidate position `start`.
    fn search(&self, start: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let nc = self.fs.candidate_count();
        // via_pair[m]: the assigned pair through which m was reached
        let mut via_pair: Vec<Option<usize>> = vec![None; nc];
        let mut seen_mbox = vec![false; nc];
        // from_mbox[p]: the middlebox whose non-assignment edge reached p
        let mut from_mbox: Vec<Option<usize>> = vec![None; self.mate.len()];
        let mut queue = VecDeque::new();
        seen_mbox[start] = true;
        queue.push_back(start);

        while let Some(m) = queue.pop_front() {
            for &p in self.fs.pairs_of(m) {
                if from_mbox[p].is_some() || self.mate[p] == Some(m) {
                    continue;
                }
                from_mbox[p] = Some(m);
                match self.mate[p] {
                    None => return Some(self.trace_back(start, p, &via_pair, &from_mbox)),
                    Some(next) => {
                        if !seen_mbox[next] {
                            seen_mbox[next] = true;
                            via_pair[next] = Some(p);
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
        None
    }

    fn trace_back(
        &self,
        start: usize,
        free_pair: usize,
        via_pair: &[Option<usize>],
        from_mbox: &[Option<usize>],
    ) -> (Vec<usize>, Vec<usize>) {
        let mut mboxes = Vec::new();
        let mut pairs = Vec::new();
        let mut p = free_pair;
        loop {
            let m = from_mbox[p].expect("reached pair has a parent");
            pairs.push(p);
            mboxes.push(m);
            if m == start {
                break;
            }
            p = via_pair[m].expect("reached middlebox has a parent pair");
        }
        mboxes.reverse();
        pairs.reverse();
        (mboxes, pairs)
    }

    fn flip(&mut self, mboxes: &[usize], pairs: &[usize]) {
        for (&m, &p) in mboxes.iter().zip(pairs) {
            self.mate[p] = Some(m);
        }
        self.load[mboxes[0]] += 1;
        self.assigned += 1;
    }

    /// Applies the symmetric difference of the assignment with `path`.
    pub fn apply_augmenting_path(&mut self, path: &AugmentingPath) -> Result<(), MatchingError> {
        let bad = |msg: String| Err(MatchingError::InvalidPath(msg));
        let k = path.pairs.len();
        if k == 0 || path.middleboxes.len() != k {
            return bad(format!(
                "{} middleboxes and {} pairs do not alternate",
                path.middleboxes.len(),
                k
            ));
        }
        let mut positions = Vec::with_capacity(k);
        for &m in &path.middleboxes {
            match self.fs.position(m) {
                Some(i) if self.active[i] => positions.push(i),
                Some(_) => return bad(format!("middlebox {m} is not active")),
                None => return bad(format!("node {m} is not a candidate")),
            }
        }
        if self.load[positions[0]] >= self.capacity {
            return bad(format!(
                "start {} has no spare capacity",
                path.middleboxes[0]
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, (&m, &p)) in positions.iter().zip(&path.pairs).enumerate() {
            if p >= self.mate.len() {
                return bad(format!("pair {p} out of range"));
            }
            if !seen.insert(p) {
                return bad(format!("pair {p} repeats"));
            }
            if !self.fs.contains(m, p) {
                return bad(format!(
                    "pair {p} is not feasible for {}",
                    path.middleboxes[i]
                ));
            }
            if self.mate[p] == Some(m) {
                return bad(format!(
                    "edge ({}, {p}) is already an assignment edge",
                    path.middleboxes[i]
                ));
            }
            let expected = positions.get(i + 1).copied();
            if self.mate[p] != expected {
                return match expected {
                    Some(_) => bad(format!(
                        "pair {p} is not assigned to {}",
                        path.middleboxes[i + 1]
                    )),
                    None => bad(format!("final pair {p} is not free")),
                };
            }
        }
        if positions
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            != k
        {
            return bad("middlebox repeats".to_string());
        }
        self.flip(&positions, &path.pairs);
        Ok(())
    }

    /// Re-checks every invariant from scratch.
    pub fn validate(&self) -> Result<(), MatchingError> {
        let mut load = vec![0u32; self.load.len()];
        let mut assigned = 0;
        for (p, m) in self.mate.iter().enumerate() {
            if let Some(m) = *m {
                if !self.active[m] {
                    return Err(MatchingError::Invariant(format!(
                        "pair {p} on inactive middlebox"
                    )));
                }
                if !self.fs.contains(m, p) {
                    return Err(MatchingError::Invariant(format!(
                        "pair {p} infeasible at its middlebox"
                    )));
                }
                load[m] += 1;
                assigned += 1;
            }
        }
        if load != self.load {
            return Err(MatchingError::Invariant("load bookkeeping mismatch".into()));
        }
        if let Some(i) = load.iter().position(|&l| l > self.capacity) {
            return Err(MatchingError::Invariant(format!(
                "middlebox {} over capacity",
                self.fs.candidates()[i]
            )));
        }
        if assigned != self.assigned {
            return Err(MatchingError::Invariant("assigned count mismatch".into()));
        }
        Ok(())
    }
}

/// `φ(M)`: the maximum number of pairs assignable to `middleboxes`.
///
/// Nodes that are not candidates, and repeated nodes, are ignored.
pub fn phi(middleboxes: &[NodeId], fs: &FeasibilitySets, capacity: u32) -> usize {
    max_assignment(middleboxes, fs, capacity).assigned_count()
}

/// A maximum assignment for `middleboxes`, built by adding them in order.
pub fn max_assignment<'a>(
    middleboxes: &[NodeId],
    fs: &'a FeasibilitySets,
    capacity: u32,
) -> Assignment<'a> {
    let mut state = Assignment::new(fs, capacity);
    for &m in middleboxes {
        let _ = state.add_middlebox(m);
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive maximum over all partial assignments.
    fn brute_phi(active: &[usize], sets: &[Vec<usize>], pairs: usize, cap: u32) -> usize {
        fn go(p: usize, pairs: usize, opts: &[Vec<usize>], load: &mut Vec<u32>, cap: u32) -> usize {
            if p == pairs {
                return 0;
            }
            let mut best = go(p + 1, pairs, opts, load, cap);
            for &m in &opts[p] {
                if load[m] < cap {
                    load[m] += 1;
                    best = best.max(1 + go(p + 1, pairs, opts, load, cap));
                    load[m] -= 1;
                }
            }
            best
        }
        let opts: Vec<Vec<usize>> = (0..pairs)
            .map(|p| {
                active
                    .iter()
                    .copied()
                    .filter(|&m| sets[m].contains(&p))
                    .collect()
            })
            .collect();
        go(0, pairs, &opts, &mut vec![0; sets.len()], cap)
    }

    /// Three candidates (nodes 10, 11, 12), five pairs, capacity 2.
    ///
    /// The first middlebox takes pairs 0 and 1, the second takes 2 and 3 and
    /// could also serve pair 4. Pair 4 is only reachable through a handover:
    /// the bottom middlebox takes over pair 3 from the middle one.
    fn handover_fixture() -> FeasibilitySets {
        FeasibilitySets::from_candidate_sets(
            vec![10, 11, 12],
            5,
            vec![vec![0, 1], vec![2, 3, 4], vec![3]],
        )
    }

    #[test]
    fn empty_set_serves_nothing() {
        let fs = handover_fixture();
        assert_eq!(phi(&[], &fs, 2), 0);
    }

    #[test]
    fn single_middlebox_is_capped() {
        let fs = FeasibilitySets::from_candidate_sets(vec![0], 3, vec![vec![0, 1, 2]]);
        assert_eq!(phi(&[0], &fs, 2), 2);
    }

    #[test]
    fn handover_scenario() {
        let fs = handover_fixture();
        let mut a = Assignment::new(&fs, 2);
        assert_eq!(a.add_middlebox(10).unwrap(), 2);
        assert_eq!(a.pairs_served_by(10), vec![0, 1]);
        assert_eq!(a.add_middlebox(11).unwrap(), 2);
        assert_eq!(a.pairs_served_by(11), vec![2, 3]);
        assert_eq!(a.middlebox_of(4), None);

        // The only way to serve pair 4 is to hand pair 3 over.
        let path = a.find_augmenting_path(12);
        assert_eq!(path, None, "inactive middlebox has no path");
        assert_eq!(a.add_middlebox(12).unwrap(), 1);
        assert_eq!(a.middlebox_of(3), Some(12));
        assert_eq!(a.middlebox_of(4), Some(11));
        assert_eq!(a.load(11), 2);
        assert_eq!(a.load(12), 1);
        assert!(a.is_complete());
        a.validate().unwrap();
    }

    #[test]
    fn three_edge_path_through_assigned_pair() {
        let fs = handover_fixture();
        let mut a = Assignment::new(&fs, 2);
        a.add_middlebox(10).unwrap();
        a.add_middlebox(11).unwrap();
        // activate 12 without augmenting, then ask for the path
        let pos = fs.position(12).unwrap();
        a.active[pos] = true;
        let path = a.find_augmenting_path(12).unwrap();
        assert_eq!(path.middleboxes, vec![12, 11]);
        assert_eq!(path.pairs, vec![3, 4]);
        assert_eq!(path.edge_count(), 3);

        let before: Vec<usize> = (0..5).filter(|&p| a.middlebox_of(p).is_some()).collect();
        a.apply_augmenting_path(&path).unwrap();
        a.validate().unwrap();
        for p in before {
            assert!(a.middlebox_of(p).is_some(), "pair {p} lost its middlebox");
        }
        for m in [10, 11, 12] {
            assert!(a.load(m) <= 2);
        }
        assert_eq!(a.assigned_count(), 5);
    }

    #[test]
    fn adjacent_free_pair_gives_single_edge_path() {
        let fs = handover_fixture();
        let mut a = Assignment::new(&fs, 2);
        a.active[0] = true;
        let path = a.find_augmenting_path(10).unwrap();
        assert_eq!(path.edge_count(), 1);
        assert_eq!(path.pairs, vec![0]);
        a.apply_augmenting_path(&path).unwrap();
        assert_eq!(a.middlebox_of(0), Some(10));
        assert_eq!(a.load(10), 1);
    }

    #[test]
    fn middlebox_without_edges_gains_nothing() {
        let fs = FeasibilitySets::from_candidate_sets(vec![0, 1], 2, vec![vec![0, 1], vec![]]);
        let mut a = Assignment::new(&fs, 1);
        a.add_middlebox(0).unwrap();
        let before = a.mapping();
        assert_eq!(a.add_middlebox(1).unwrap(), 0);
        assert_eq!(a.mapping(), before);
    }

    #[test]
    fn add_errors() {
        let fs = handover_fixture();
        let mut a = Assignment::new(&fs, 2);
        a.add_middlebox(10).unwrap();
        assert_eq!(a.add_middlebox(10), Err(MatchingError::AlreadyActive(10)));
        assert_eq!(a.add_middlebox(3), Err(MatchingError::NotCandidate(3)));
    }

    #[test]
    fn invalid_paths_are_rejected() {
        let fs = handover_fixture();
        let mut a = Assignment::new(&fs, 2);
        a.add_middlebox(10).unwrap();
        a.add_middlebox(11).unwrap();
        a.active[2] = true;
        let cases = [
            AugmentingPath {
                middleboxes: vec![],
                pairs: vec![],
            },
            // 12 cannot serve pair 4
            AugmentingPath {
                middleboxes: vec![12],
                pairs: vec![4],
            },
            // pair 3 is assigned, not free
            AugmentingPath {
                middleboxes: vec![12],
                pairs: vec![3],
            },
            // pair 3 is assigned to 11, not 10
            AugmentingPath {
                middleboxes: vec![12, 10],
                pairs: vec![3, 4],
            },
            // 10 is full
            AugmentingPath {
                middleboxes: vec![10],
                pairs: vec![2],
            },
            // existing assignment edge in an odd position
            AugmentingPath {
                middleboxes: vec![12, 11, 11],
                pairs: vec![3, 3, 4],
            },
        ];
        for path in cases {
            let snapshot = a.mapping();
            assert!(
                matches!(
                    a.apply_augmenting_path(&path),
                    Err(MatchingError::InvalidPath(_))
                ),
                "{path:?} accepted"
            );
            assert_eq!(a.mapping(), snapshot);
        }
    }

    #[test]
    fn saturated_instance_has_no_path() {
        // two middleboxes with capacity 1 competing for one pair
        let fs = FeasibilitySets::from_candidate_sets(vec![0, 1], 2, vec![vec![0], vec![0]]);
        let mut a = Assignment::new(&fs, 1);
        a.add_middlebox(0).unwrap();
        a.add_middlebox(1).unwrap();
        assert_eq!(a.assigned_count(), 1);
        assert_eq!(brute_phi(&[0, 1], &[vec![0], vec![0]], 2, 1), 1);
        assert_eq!(a.find_augmenting_path(1), None);
    }

    #[test]
    fn projection_counts_subsets() {
        let fs = handover_fixture();
        let a = max_assignment(&[10, 11, 12], &fs, 2);
        assert_eq!(a.projection_count(&[10]), 2);
        assert_eq!(a.projection_count(&[10, 11]), 4);
        assert_eq!(a.projection_count(&[]), 0);
    }

    #[test]
    fn matches_brute_force_on_small_grid() {
        // deterministic enumeration of all 2^3 subsets on a denser fixture
        let sets = vec![vec![0, 1, 2], vec![1, 2, 3, 4], vec![0, 4, 5]];
        let fs = FeasibilitySets::from_candidate_sets(vec![0, 1, 2], 6, sets.clone());
        for cap in 1..=3 {
            for mask in 0u32..8 {
                let active: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
                assert_eq!(
                    phi(&active, &fs, cap),
                    brute_phi(&active, &sets, 6, cap),
                    "mask {mask:b} cap {cap}"
                );
            }
        }
    }
}
