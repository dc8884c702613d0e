//! Min-cost flow by successive shortest paths with node potentials.
//!
//! Real-valued capacities and costs. The solver stops as soon as the
//! cheapest augmenting path has nonnegative cost, so it minimizes cost over
//! all flow values (maximum profit when costs are negative), not cost at
//! maximum flow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    residual: f64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
}

/// Handle to a forward arc, for reading its flow back.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArcRef {
    from: usize,
    index: usize,
    capacity: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64, cost: f64) -> ArcRef {
        let index = self.graph[from].len();
        let rev = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc {
            to,
            rev,
            residual: capacity,
            cost,
        });
        self.graph[to].push(Arc {
            to: from,
            rev: index,
            residual: 0.0,
            cost: -cost,
        });
        ArcRef {
            from,
            index,
            capacity,
        }
    }

    pub fn flow(&self, arc: ArcRef) -> f64 {
        (arc.capacity - self.graph[arc.from][arc.index].residual).max(0.0)
    }

    /// Bellman-Ford potentials from `source` over arcs with residual capacity.
    fn initial_potentials(&self, source: usize) -> Vec<f64> {
        let n = self.graph.len();
        let mut pot = vec![f64::INFINITY; n];
        pot[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if !pot[u].is_finite() {
                    continue;
                }
                for a in &self.graph[u] {
                    if a.residual > EPS && pot[u] + a.cost < pot[a.to] - EPS {
                        pot[a.to] = pot[u] + a.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        pot
    }

    /// Pushes flow from `source` to `sink` along cheapest paths while they
    /// have negative cost. Returns `(flow, cost)`.
    pub fn run(&mut self, source: usize, sink: usize) -> (f64, f64) {
        let n = self.graph.len();
        let mut pot = self.initial_potentials(source);
        let mut total_flow = 0.0;
        let mut total_cost = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut heap = BinaryHeap::new();
            dist[source] = 0.0;
            heap.push(Entry(0.0, source));
            while let Some(Entry(d, u)) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (i, a) in self.graph[u].iter().enumerate() {
                    if a.residual <= EPS || !pot[a.to].is_finite() {
                        continue;
                    }
                    let reduced = (a.cost + pot[u] - pot[a.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[a.to] {
                        dist[a.to] = nd;
                        parent[a.to] = Some((u, i));
                        heap.push(Entry(nd, a.to));
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            let path_cost = pot[sink] - pot[source];
            if path_cost >= -EPS {
                break;
            }
            let mut push = f64::INFINITY;
            let mut v = sink;
            while let Some((u, i)) = parent[v] {
                push = push.min(self.graph[u][i].residual);
                v = u;
            }
            if push <= EPS {
                break;
            }
            let mut v = sink;
            let mut cost = 0.0;
            while let Some((u, i)) = parent[v] {
                let (to, rev) = (self.graph[u][i].to, self.graph[u][i].rev);
                self.graph[u][i].residual -= push;
                self.graph[to][rev].residual += push;
                cost += self.graph[u][i].cost;
                v = u;
            }
            total_flow += push;
            total_cost += push * cost;
        }
        (total_flow, total_cost)
    }
}
