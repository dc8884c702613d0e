mod common;

use common::*;
use nfplace::weighted::{
    gain, generalized_greedy, round_solution, solve_fractional, AllMemberPairs, RequestPredicate,
};
use nfplace::{
    compute_apsp, exact_weighted_min_middleboxes, solve_weighted, Metric, OracleError, Request,
    RouteConstraint, WeightedError, WeightedInstance, WeightedProblem,
};
use proptest::prelude::*;

fn arb_problem() -> impl Strategy<Value = WeightedProblem> {
    (1usize..5, 1usize..7).prop_flat_map(|(u, n)| {
        (
            prop::collection::vec(0.1f64..3.0, n),
            prop::collection::vec(prop::collection::vec(any::<bool>(), n), u),
            0.5f64..4.0,
        )
            .prop_map(move |(demands, mask, kappa)| {
                let sets = mask
                    .iter()
                    .map(|row| (0..row.len()).filter(|&j| row[j]).collect())
                    .collect();
                WeightedProblem::from_parts((0..u).collect(), demands, sets, kappa)
            })
    })
}

fn dense_lp(pb: &WeightedProblem, chosen: &[usize]) -> f64 {
    let allowed: Vec<Vec<usize>> = chosen.iter().map(|&i| pb.allowed(i).to_vec()).collect();
    assignment_lp(pb.demands(), &allowed, pb.capacity())
}

proptest! {
    #[test]
    fn flow_matches_simplex(pb in arb_problem(), mask in any::<u8>()) {
        let chosen: Vec<usize> = (0..pb.candidates().len()).filter(|b| mask >> b & 1 == 1).collect();
        let flow = solve_fractional(&pb, &chosen);
        prop_assert!((flow.objective - dense_lp(&pb, &chosen)).abs() < 1e-6);
    }

    #[test]
    fn fractional_solution_is_feasible(pb in arb_problem()) {
        let all: Vec<usize> = (0..pb.candidates().len()).collect();
        let f = solve_fractional(&pb, &all);
        for c in f.coverage(pb.request_count()) {
            prop_assert!(c <= 1.0 + 1e-9);
        }
        for l in f.loads(pb.demands()) {
            prop_assert!(l <= pb.capacity() + 1e-9);
        }
        for &(m, j, x) in &f.entries {
            prop_assert!(x > 0.0 && x <= 1.0);
            prop_assert!(pb.is_allowed(pb.position(m).unwrap(), j));
        }
    }

    #[test]
    fn lp_value_is_submodular(pb in arb_problem(), a in any::<u8>(), b in any::<u8>(), m in 0usize..4) {
        let u = pb.candidates().len();
        let m = m % u;
        let small: Vec<usize> = (0..u).filter(|&i| i != m && a >> i & b >> i & 1 == 1).collect();
        let large: Vec<usize> = (0..u).filter(|&i| i != m && b >> i & 1 == 1).collect();
        prop_assert!(gain(&pb, m, &small) >= gain(&pb, m, &large) - 1e-9);
        prop_assert!(gain(&pb, m, &large) >= -1e-9);
    }

    #[test]
    fn rounding_respects_twice_capacity(pb in arb_problem()) {
        match generalized_greedy(&pb) {
            Ok(sel) => {
                let r = round_solution(&sel.fractional, &pb).unwrap();
                prop_assert!(r.max_load() <= 2.0 * pb.capacity() + 1e-9);
                prop_assert_eq!(r.assignment.len(), pb.request_count());
                let biggest = pb.demands().iter().copied().fold(0.0, f64::max);
                prop_assert!(r.max_load() <= pb.capacity() + biggest + 1e-9);
            }
            Err(WeightedError::Infeasible { .. }) => {
                prop_assert_eq!(exact_weighted_min_middleboxes(&pb).unwrap_err(), OracleError::Infeasible);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn unit_demands_reduce_to_the_unweighted_problem() {
    let mut rng = TestRng::new(17);
    for _ in 0..40 {
        let case = random_instance(&mut rng, 9, 6, 10, 2, 1.4);
        let fs = &case.fs;
        let sets: Vec<Vec<usize>> = (0..fs.candidate_count())
            .map(|i| fs.pairs_of(i).to_vec())
            .collect();
        let pb = WeightedProblem::from_parts(
            fs.candidates().to_vec(),
            vec![1.0; fs.pair_count()],
            sets,
            2.0,
        );
        let all = fs.candidates().to_vec();
        // integral capacities make the LP optimum integral
        let f = solve_fractional(&pb, &all).objective;
        assert!((f - nfplace::phi(&all, fs, 2) as f64).abs() < 1e-9);
    }
}

#[test]
fn group_requests_use_every_member_pair() {
    let net = geo_ring(8);
    let inst = WeightedInstance::new(
        net,
        Metric::Geo,
        vec![
            Request::group(vec![0, 2, 4, 6], 1.0),
            Request::pair(1, 2, 2.0).unwrap(),
        ],
        (0..8).collect(),
        3.0,
        RouteConstraint::Stretch(1.0),
    )
    .unwrap();
    let sets = inst.request_sets(&AllMemberPairs(inst.constraint()));
    // shortest 0-2 and 4-6 paths are disjoint
    assert!(sets.iter().all(|s| !s.contains(&0)));
    assert!(matches!(
        solve_weighted(&inst),
        Err(WeightedError::Infeasible { .. })
    ));

    let relaxed = WeightedInstance::new(
        inst.network().clone(),
        Metric::Geo,
        inst.requests().to_vec(),
        (0..8).collect(),
        3.0,
        RouteConstraint::Stretch(3.5),
    )
    .unwrap();
    // a box one hop off the group still sees each adjacent member pair within a factor of about 3
    let out = solve_weighted(&relaxed).unwrap();
    assert_eq!(out.rounded.assignment.len(), 2);
}

struct OnlyNode(usize);

impl RequestPredicate for OnlyNode {
    fn admits(&self, _: &nfplace::DistanceMatrix, _: &Request, u: usize) -> bool {
        u == self.0
    }
}

#[test]
fn custom_predicates_plug_in() {
    let net = geo_ring(5);
    let inst = WeightedInstance::new(
        net,
        Metric::Geo,
        vec![
            Request::pair(0, 1, 1.0).unwrap(),
            Request::pair(2, 3, 1.0).unwrap(),
        ],
        (0..5).collect(),
        2.0,
        RouteConstraint::Stretch(1.0),
    )
    .unwrap();
    let sets = inst.request_sets(&OnlyNode(4));
    assert_eq!(sets, vec![vec![], vec![], vec![], vec![], vec![0, 1]]);
}

#[test]
fn weighted_count_bound_on_random_instances() {
    let mut rng = TestRng::new(71);
    let mut compared = 0;
    while compared < 60 {
        let n = rng.range(4, 8);
        let net = random_network(&mut rng, n, 3, 4);
        let dist = compute_apsp(&net, Metric::EdgeWeight).unwrap();
        let pairs = random_pairs(&mut rng, n, 8);
        let kappa = 2.0 + 4.0 * rng.unit();
        let requests: Vec<Request> = pairs
            .iter()
            .map(|p| Request::pair(p.s(), p.t(), 0.2 + rng.unit() * kappa).unwrap())
            .collect();
        let inst = WeightedInstance::with_distances(
            net,
            Metric::EdgeWeight,
            dist,
            requests,
            (0..n).collect(),
            kappa,
            RouteConstraint::Stretch(1.3),
        )
        .unwrap();
        let pb = inst.preprocess();
        let (Ok(sel), Ok(exact)) = (generalized_greedy(&pb), exact_weighted_min_middleboxes(&pb))
        else {
            continue;
        };
        compared += 1;
        let bound = 1.0 + (pb.request_count().max(1) as f64).ln();
        assert!(sel.order.len() as f64 <= bound * exact.optimum as f64 + 1e-9);
        let witness_load = |m: usize| -> f64 {
            exact
                .assignment
                .iter()
                .enumerate()
                .filter(|(_, a)| **a == Some(m))
                .map(|(j, _)| pb.demands()[j])
                .sum()
        };
        assert!(exact
            .middleboxes
            .iter()
            .all(|&m| witness_load(m) <= kappa + 1e-9));
    }
}

#[test]
fn preprocessing_statistics() {
    let net = geo_ring(6);
    let inst = WeightedInstance::new(
        net,
        Metric::Geo,
        vec![
            Request::pair(0, 1, 1.0).unwrap(),
            Request::pair(0, 3, 9.0).unwrap(),
        ],
        vec![0, 1, 2],
        2.0,
        RouteConstraint::Stretch(1.0),
    )
    .unwrap();
    let pb = inst.preprocess();
    assert_eq!(pb.rejected, vec![1]);
    assert_eq!(pb.request_count(), 1);
    assert_eq!(pb.entry_count(), 2);
    assert_eq!(pb.deleted_by_constraint, 1);
    assert_eq!(pb.deleted_illegal, 3);
}
