//! Independent reference implementations and random fixtures for the
//! integration and acceptance tests. Nothing here calls into the solver code
//! it is compared against.

#![allow(dead_code)]

use std::collections::VecDeque;

use nfplace::{
    FeasibilitySets, GeoCoord, Metric, Network, NodeId, Pair, PlacementInstance, RouteConstraint,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[self.below(items.len())]
    }

    /// `k` distinct values from `0..n`, sorted.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            all.swap(i, j);
        }
        let mut out = all[..k].to_vec();
        out.sort_unstable();
        out
    }
}

// ---- distances -------------------------------------------------------------

pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn network_edges(net: &Network) -> Vec<(usize, usize, f64)> {
    net.edges().iter().map(|e| (e.a, e.b, e.weight)).collect()
}

/// Great-circle distance from the chord between unit vectors.
pub fn chord_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let v = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (a, b) = (v(lat1, lon1), v(lat2, lon2));
    let chord = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    2.0 * 6371.0 * (chord / 2.0).min(1.0).asin()
}

/// `S_u` lists evaluated straight from a distance table.
pub fn brute_sets(
    dist: &[Vec<f64>],
    pairs: &[(usize, usize)],
    candidates: &[usize],
    rho: f64,
) -> Vec<Vec<usize>> {
    candidates
        .iter()
        .map(|&u| {
            pairs
                .iter()
                .enumerate()
                .filter(|(_, &(s, t))| {
                    let via = dist[s][u] + dist[u][t];
                    via.is_finite() && via <= rho * dist[s][t] * (1.0 + 1e-9)
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

// ---- assignment ------------------------------------------------------------

/// Largest assignment by exhaustive search over every pair's choice.
pub fn brute_force_phi(
    sets: &[Vec<usize>],
    pair_count: usize,
    capacity: usize,
    subset: &[usize],
) -> usize {
    let options: Vec<Vec<usize>> = (0..pair_count)
        .map(|p| {
            subset
                .iter()
                .copied()
                .filter(|&i| sets[i].contains(&p))
                .collect()
        })
        .collect();
    let mut load = vec![0usize; sets.len()];
    let mut best = 0;
    fn go(
        p: usize,
        served: usize,
        options: &[Vec<usize>],
        load: &mut [usize],
        cap: usize,
        best: &mut usize,
    ) {
        if served + (options.len() - p) <= *best {
            return;
        }
        if p == options.len() {
            *best = served;
            return;
        }
        for &i in &options[p] {
            if load[i] < cap {
                load[i] += 1;
                go(p + 1, served + 1, options, load, cap, best);
                load[i] -= 1;
            }
        }
        go(p + 1, served, options, load, cap, best);
    }
    go(0, 0, &options, &mut load, capacity, &mut best);
    best
}

/// Edmonds-Karp max flow with every middlebox cloned `capacity` times
/// (unit capacities everywhere).
pub fn clone_flow_phi(
    sets: &[Vec<usize>],
    pair_count: usize,
    capacity: usize,
    subset: &[usize],
) -> usize {
    let clones = subset.len() * capacity;
    let n = 2 + pair_count + clones;
    let (src, snk) = (0, n - 1);
    let mut cap = vec![vec![0i32; n]; n];
    for p in 0..pair_count {
        cap[src][1 + p] = 1;
    }
    for (k, &i) in subset.iter().enumerate() {
        for c in 0..capacity {
            let node = 1 + pair_count + k * capacity + c;
            cap[node][snk] = 1;
            for &p in &sets[i] {
                cap[1 + p][node] = 1;
            }
        }
    }
    let mut flow = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[snk] == usize::MAX {
            return flow;
        }
        let mut v = snk;
        while v != src {
            let u = prev[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
}

// ---- linear programming ----------------------------------------------------

/// Maximizes `c·x` subject to `A x <= b`, `x >= 0`, with `b >= 0`, by the
/// dense tableau simplex method with Bland's rule.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        assert!(b[i] >= 0.0);
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -1e-12) else {
            break;
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > 1e-12 {
                let ratio = t[i][width - 1] / t[i][col];
                if ratio < best - 1e-12
                    || (ratio <= best + 1e-12 && row.is_some_and(|r: usize| basis[i] < basis[r]))
                {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let r = row.expect("LP is bounded");
        let pivot = t[r][col];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        for i in 0..=m {
            if i != r {
                let f = t[i][col];
                if f != 0.0 {
                    for j in 0..width {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
        basis[r] = col;
    }
    t[m][width - 1]
}

/// The fractional assignment LP written out as a dense program.
pub fn assignment_lp(demands: &[f64], allowed: &[Vec<usize>], capacity: f64) -> f64 {
    let vars: Vec<(usize, usize)> = allowed
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
        .collect();
    if vars.is_empty() {
        return 0.0;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..demands.len() {
        a.push(
            vars.iter()
                .map(|&(_, jj)| f64::from(u8::from(jj == j)))
                .collect(),
        );
        b.push(1.0);
    }
    for i in 0..allowed.len() {
        a.push(
            vars.iter()
                .map(|&(ii, jj)| if ii == i { demands[jj] } else { 0.0 })
                .collect(),
        );
        b.push(capacity);
    }
    simplex_max(&a, &b, &vec![1.0; vars.len()])
}

// ---- fixtures --------------------------------------------------------------

/// A connected random graph: a random spanning tree plus extra edges, with
/// integer weights in `1..=max_weight`.
pub fn random_network(rng: &mut TestRng, n: usize, extra: usize, max_weight: usize) -> Network {
    let mut net = Network::with_nodes(n);
    for v in 1..n {
        let u = rng.below(v);
        net.add_edge(u, v, rng.range(1, max_weight) as f64).unwrap();
    }
    for _ in 0..extra {
        let (a, b) = (rng.below(n), rng.below(n));
        if a != b {
            net.add_edge(a, b, rng.range(1, max_weight) as f64).unwrap();
        }
    }
    net
}

pub fn random_pairs(rng: &mut TestRng, n: usize, count: usize) -> Vec<Pair> {
    let mut pairs = Vec::new();
    let mut tries = 0;
    while pairs.len() < count && tries < 50 * count + 50 {
        tries += 1;
        let (a, b) = (rng.below(n), rng.below(n));
        if a == b {
            continue;
        }
        let p = Pair::new(a, b).unwrap();
        if !pairs.contains(&p) {
            pairs.push(p);
        }
    }
    pairs
}

/// A random unweighted instance; pairs no candidate can serve are removed.
pub struct RandomCase {
    pub instance: PlacementInstance,
    pub fs: FeasibilitySets,
}

pub fn random_instance(
    rng: &mut TestRng,
    nodes: usize,
    candidates: usize,
    pairs: usize,
    capacity: u32,
    rho: f64,
) -> RandomCase {
    let extra = rng.below(nodes + 1);
    let net = random_network(rng, nodes, extra, 6);
    let cand = rng.subset(nodes, candidates.min(nodes));
    let pairs = random_pairs(rng, nodes, pairs);
    let inst = PlacementInstance::new(
        net,
        Metric::EdgeWeight,
        pairs,
        cand.clone(),
        capacity,
        RouteConstraint::Stretch(rho),
    )
    .unwrap();
    let fs = FeasibilitySets::compute(&inst);
    let uncoverable = fs.uncoverable_pairs();
    if uncoverable.is_empty() {
        return RandomCase { instance: inst, fs };
    }
    let kept: Vec<Pair> = inst
        .pairs()
        .iter()
        .enumerate()
        .filter(|(i, _)| !uncoverable.contains(i))
        .map(|(_, p)| *p)
        .collect();
    let inst = PlacementInstance::with_distances(
        inst.network().clone(),
        Metric::EdgeWeight,
        inst.distances().clone(),
        kept,
        cand,
        capacity,
        RouteConstraint::Stretch(rho),
    )
    .unwrap();
    let fs = FeasibilitySets::compute(&inst);
    RandomCase { instance: inst, fs }
}

/// Star of `n` pairs: a center at distance `c/2` from every endpoint and a
/// direct unit edge between `s_i` and `t_i`. Candidates are the center and
/// every `s_i`.
pub fn star(n: usize, c: f64, rho: f64, capacity: u32) -> PlacementInstance {
    let mut net = Network::with_nodes(1 + 2 * n);
    let mut pairs = Vec::new();
    for i in 0..n {
        let (s, t) = (1 + i, 1 + n + i);
        net.add_edge(0, s, c / 2.0).unwrap();
        net.add_edge(0, t, c / 2.0).unwrap();
        net.add_edge(s, t, 1.0).unwrap();
        pairs.push(Pair::new(s, t).unwrap());
    }
    let candidates: Vec<NodeId> = (0..=n).collect();
    PlacementInstance::new(
        net,
        Metric::EdgeWeight,
        pairs,
        candidates,
        capacity,
        RouteConstraint::Stretch(rho),
    )
    .unwrap()
}

pub fn geo_ring(n: usize) -> Network {
    let mut net = Network::new();
    for i in 0..n {
        let angle = i as f64 / n as f64 * std::f64::consts::TAU;
        net.add_node(
            Some(format!("r{i}")),
            Some(GeoCoord::new(45.0 + 3.0 * angle.sin(), 10.0 + 4.0 * angle.cos()).unwrap()),
        );
    }
    for i in 0..n {
        net.add_edge(i, (i + 1) % n, 1.0).unwrap();
    }
    net
}

pub fn data_file(name: &str) -> Vec<u8> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
