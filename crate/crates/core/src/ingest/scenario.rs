//! Seeded random scenarios.
//!
//! The generator is ChaCha20 keyed with the seed (little-endian in the first
//! eight key bytes, the rest zero) and using the replication index as stream
//! id. A uniform draw is `(next_u64 >> 11) · 2⁻⁵³`. Pairs `s < t` are visited
//! in lexicographic order and each is kept if its draw is below `p`; weighted
//! demands are visited in file order and kept if their draw is below the keep
//! probability. Every candidate pair or demand consumes exactly one draw.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::sndlib::SndlibInstance;
use super::IngestError;
use crate::graph::{compute_apsp, Metric, Network};
use crate::instance::{Pair, PlacementInstance, RouteConstraint};
use crate::weighted::{Request, WeightedInstance};

pub const STRETCH_GRID_LEN: usize = 31;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Inclusion probability of each pair, in `(0, 1]`.
    pub p: f64,
    pub stretch: f64,
    pub metric: Metric,
    pub seed: u64,
    pub replication: u64,
    /// Replaces the capacity formula when set.
    pub capacity: Option<u32>,
    /// Keep probability of each demand in weighted scenarios.
    pub keep_probability: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            p: 0.2,
            stretch: 1.0,
            metric: Metric::Geo,
            seed: 0,
            replication: 0,
            capacity: None,
            keep_probability: 0.5,
        }
    }
}

pub fn scenario_rng(seed: u64, replication: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `⌈2(|V| − 1)p⌉`, at least 1.
pub fn capacity_for(nodes: usize, p: f64) -> u32 {
    let raw = 2.0 * (nodes.saturating_sub(1)) as f64 * p;
    ((raw - 1e-9).ceil() as u32).max(1)
}

/// `4D / |V|`.
pub fn weighted_capacity(total_demand: f64, nodes: usize) -> f64 {
    4.0 * total_demand / nodes as f64
}

/// `1.00, 1.05, …, 2.50`.
pub fn stretch_grid() -> Vec<f64> {
    (0..STRETCH_GRID_LEN)
        .map(|k| (100 + 5 * k) as f64 / 100.0)
        .collect()
}

/// All pairs selected by the draw sequence of `rng`.
pub fn sample_pairs(nodes: usize, p: f64, rng: &mut impl RngCore) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for s in 0..nodes {
        for t in s + 1..nodes {
            if uniform_f64(rng) < p {
                pairs.push(Pair::new(s, t).expect("s < t"));
            }
        }
    }
    pairs
}

fn check_probability(name: &str, p: f64) -> Result<(), IngestError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(IngestError::Schema(format!(
            "{name} {p} must lie in (0, 1]"
        )))
    }
}

/// Random pairs on `network` with `U = V`.
///
/// Pairs between disconnected nodes are drawn but dropped.
pub fn generate_unweighted_scenario(
    network: &Network,
    cfg: &ScenarioConfig,
) -> Result<PlacementInstance, IngestError> {
    check_probability("pair probability", cfg.p)?;
    let n = network.node_count();
    let distances = compute_apsp(network, cfg.metric)?;
    let mut rng = scenario_rng(cfg.seed, cfg.replication);
    let pairs: Vec<Pair> = sample_pairs(n, cfg.p, &mut rng)
        .into_iter()
        .filter(|p| {
            let ok = distances.is_reachable(p.s(), p.t());
            if !ok {
                log::warn!("pair {p} is disconnected and dropped");
            }
            ok
        })
        .collect();
    let capacity = cfg.capacity.unwrap_or_else(|| capacity_for(n, cfg.p));
    Ok(PlacementInstance::with_distances(
        network.clone(),
        cfg.metric,
        distances,
        pairs,
        (0..n).collect(),
        capacity,
        RouteConstraint::Stretch(cfg.stretch),
    )?)
}

#[derive(Debug, Clone)]
pub struct WeightedScenario {
    pub instance: WeightedInstance,
    /// Indices of the kept SNDlib demands.
    pub kept: Vec<usize>,
    pub total_demand: f64,
}

/// Subsampled SNDlib demands with `κ = 4D/|V|`, `U = V`.
pub fn generate_weighted_scenario(
    sndlib: &SndlibInstance,
    cfg: &ScenarioConfig,
) -> Result<WeightedScenario, IngestError> {
    check_probability("keep probability", cfg.keep_probability)?;
    let mut rng = scenario_rng(cfg.seed, cfg.replication);
    let kept: Vec<usize> = (0..sndlib.demands.len())
        .filter(|_| uniform_f64(&mut rng) < cfg.keep_probability)
        .collect();
    let total_demand: f64 = kept.iter().map(|&i| sndlib.demands[i].value).sum();
    let requests = kept
        .iter()
        .map(|&i| {
            let d = &sndlib.demands[i];
            Request::pair(d.s, d.t, d.value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = sndlib.network.node_count();
    let instance = WeightedInstance::new(
        sndlib.network.clone(),
        cfg.metric,
        requests,
        (0..n).collect(),
        weighted_capacity(total_demand, n),
        RouteConstraint::Stretch(cfg.stretch),
    )?;
    Ok(WeightedScenario {
        instance,
        kept,
        total_demand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_formula() {
        assert_eq!(capacity_for(50, 0.3), 30);
        assert_eq!(capacity_for(50, 0.2), 20);
        assert_eq!(capacity_for(11, 0.25), 5);
        assert_eq!(capacity_for(1, 0.5), 1);
        assert_eq!(weighted_capacity(140.0, 28), 20.0);
    }

    #[test]
    fn grid_values() {
        let g = stretch_grid();
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 1.05);
        assert_eq!(g[30], 2.5);
    }

    #[test]
    fn streams_differ_by_replication() {
        let a: Vec<u64> = (0..4).map(|_| scenario_rng(7, 0).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r0 = scenario_rng(7, 0);
        let mut r1 = scenario_rng(7, 1);
        assert_ne!(r0.next_u64(), r1.next_u64());
    }

    #[test]
    fn uniform_range() {
        let mut rng = scenario_rng(1, 0);
        for _ in 0..1000 {
            let u = uniform_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn full_probability_takes_everything() {
        let mut rng = scenario_rng(3, 0);
        let pairs = sample_pairs(3, 1.0, &mut rng);
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn rejects_bad_probability() {
        let net = Network::with_nodes(2);
        let cfg = ScenarioConfig {
            p: 0.0,
            metric: Metric::HopCount,
            ..ScenarioConfig::default()
        };
        assert!(generate_unweighted_scenario(&net, &cfg).is_err());
    }
}
