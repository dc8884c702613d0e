//! Checks a finished report against the instance it claims to solve, using
//! only distances and the route constraint.

use std::collections::BTreeMap;

use anyhow::Result;
use nfplace::{NodeId, PlacementInstance, RouteConstraint, WeightedInstance};

use crate::exit::{fail, Failure};
use crate::report::RunReport;

const LOAD_SLACK: f64 = 1e-9;

fn broken(msg: String) -> anyhow::Error {
    fail(
        Failure::Other,
        format!("report failed re-validation: {msg}"),
    )
}

fn check_middleboxes(report: &RunReport, candidates: &[NodeId]) -> Result<()> {
    if report.middlebox_count != report.middleboxes.len() {
        return Err(broken("middlebox count disagrees with the list".into()));
    }
    if let Some(m) = report.middleboxes.iter().find(|m| !candidates.contains(m)) {
        return Err(broken(format!("middlebox {m} is not a candidate")));
    }
    Ok(())
}

fn route_ok(
    c: RouteConstraint,
    d: &nfplace::DistanceMatrix,
    members: &[NodeId],
    u: NodeId,
) -> bool {
    members
        .iter()
        .enumerate()
        .all(|(i, &s)| members[i + 1..].iter().all(|&t| c.admits(d, s, u, t)))
}

fn check_loads(report: &RunReport, served: &BTreeMap<NodeId, f64>, limit: f64) -> Result<()> {
    for (&m, &load) in served {
        if load > limit * (1.0 + LOAD_SLACK) {
            return Err(broken(format!(
                "middlebox {m} carries {load}, above {limit}"
            )));
        }
        let listed = report.loads.iter().find(|l| l.middlebox == m);
        if !listed.is_some_and(|l| (l.load - load).abs() <= LOAD_SLACK * load.max(1.0)) {
            return Err(broken(format!("load of middlebox {m} is misreported")));
        }
    }
    Ok(())
}

pub fn placement(report: &RunReport, inst: &PlacementInstance) -> Result<()> {
    check_middleboxes(report, inst.candidates())?;
    if report.assignment.len() != inst.pairs().len() {
        return Err(broken("assignment does not list every pair".into()));
    }
    let mut served = BTreeMap::new();
    for (entry, pair) in report.assignment.iter().zip(inst.pairs()) {
        let Some(m) = entry.middlebox else {
            return Err(broken(format!("pair {} is unserved", entry.request)));
        };
        if !report.middleboxes.contains(&m) {
            return Err(broken(format!(
                "pair {} uses closed middlebox {m}",
                entry.request
            )));
        }
        if !route_ok(
            inst.constraint(),
            inst.distances(),
            &[pair.s(), pair.t()],
            m,
        ) {
            return Err(broken(format!(
                "pair {} violates the route constraint at {m}",
                entry.request
            )));
        }
        *served.entry(m).or_insert(0.0) += 1.0;
    }
    check_loads(report, &served, inst.capacity() as f64)
}

/// Rounded weighted solutions may exceed κ by one demand, so at most 2κ.
pub fn weighted(report: &RunReport, inst: &WeightedInstance) -> Result<()> {
    check_middleboxes(report, inst.candidates())?;
    if report.assignment.len() != inst.requests().len() {
        return Err(broken("assignment does not list every request".into()));
    }
    let kappa = inst.capacity();
    let mut served = BTreeMap::new();
    let mut biggest: f64 = 0.0;
    for (entry, request) in report.assignment.iter().zip(inst.requests()) {
        let Some(m) = entry.middlebox else {
            if request.demand <= kappa {
                return Err(broken(format!("request {} is unserved", entry.request)));
            }
            continue;
        };
        if !report.middleboxes.contains(&m) {
            return Err(broken(format!(
                "request {} uses closed middlebox {m}",
                entry.request
            )));
        }
        if !route_ok(inst.constraint(), inst.distances(), &request.members(), m) {
            return Err(broken(format!(
                "request {} violates the route constraint at {m}",
                entry.request
            )));
        }
        biggest = biggest.max(request.demand);
        *served.entry(m).or_insert(0.0) += request.demand;
    }
    check_loads(report, &served, (kappa + biggest).min(2.0 * kappa))
}
