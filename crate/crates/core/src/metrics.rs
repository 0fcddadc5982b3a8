//! Evaluation quantities derived from assignments: class-average travel
//! times, fuel totals, per-segment throughput and inter-scenario demand
//! differences.
//!
//! All functions are pure post-processing over finished assignments.
//! Throughput and demand aggregate AV-only links into the original segment
//! they were extracted from, so with-lane and no-lane scenarios compare over
//! the same physical link set. Connectors never count.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::assignment::RouteAssignment;
use crate::cost::{fuel_for_trip, FuelModelParams};
use crate::demand::{Population, VehicleClass};
use crate::error::{Error, Result};
use crate::network::{ClassPartition, LanePolicy, LinkId, RoadClass, RoadNetwork};

/// Aggregates for one vehicle class. `None` when the class is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassAggregate {
    pub count: usize,
    pub avg_time_s: f64,
    pub fuel_total_l: f64,
}

/// Population-level travel time and fuel metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub all: ClassAggregate,
    pub av: Option<ClassAggregate>,
    pub cv: Option<ClassAggregate>,
}

/// Per-class mean travel times and fuel totals. Classes with no members are
/// reported as absent rather than zero.
pub fn class_metrics(
    assign: &RouteAssignment,
    pop: &Population,
    fuel: &FuelModelParams,
) -> Result<ClassMetrics> {
    if assign.agent_count() != pop.len() {
        return Err(Error::Validation(format!(
            "assignment covers {} agents but population has {}",
            assign.agent_count(),
            pop.len()
        )));
    }
    if assign.population_fingerprint() != pop.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: assign.population_fingerprint().to_string(),
            actual: pop.fingerprint(),
        });
    }
    let mut time = BTreeMap::from([(VehicleClass::Av, 0.0f64), (VehicleClass::Cv, 0.0f64)]);
    let mut fuel_sum = time.clone();
    let mut count = BTreeMap::from([(VehicleClass::Av, 0usize), (VehicleClass::Cv, 0usize)]);
    for (idx, agent) in pop.agents().iter().enumerate() {
        let t = assign.agent_time(idx);
        let d = assign.agent_distance(idx);
        *time.get_mut(&agent.vclass).unwrap() += t;
        *fuel_sum.get_mut(&agent.vclass).unwrap() += fuel_for_trip(d, t, fuel);
        *count.get_mut(&agent.vclass).unwrap() += 1;
    }
    let aggregate = |class: VehicleClass| {
        let c = count[&class];
        (c > 0).then(|| ClassAggregate {
            count: c,
            avg_time_s: time[&class] / c as f64,
            fuel_total_l: fuel_sum[&class],
        })
    };
    let av = aggregate(VehicleClass::Av);
    let cv = aggregate(VehicleClass::Cv);
    let total_count = pop.len();
    let total_time = time[&VehicleClass::Av] + time[&VehicleClass::Cv];
    let total_fuel = fuel_sum[&VehicleClass::Av] + fuel_sum[&VehicleClass::Cv];
    Ok(ClassMetrics {
        all: ClassAggregate {
            count: total_count,
            avg_time_s: total_time / total_count as f64,
            fuel_total_l: total_fuel,
        },
        av,
        cv,
    })
}

/// Vehicles per period on each original segment, with AV-lane siblings
/// folded back onto the segment they were extracted from.
pub fn segment_flows(assign: &RouteAssignment, net: &RoadNetwork) -> BTreeMap<LinkId, f64> {
    let mut flows = BTreeMap::new();
    for link in net.links() {
        if link.lane_policy == LanePolicy::Connector {
            continue;
        }
        let state = &assign.link_states()[link.id.index()];
        *flows.entry(link.segment()).or_insert(0.0) += state.total_flow() as f64;
    }
    flows
}

/// Number of agent routes containing each original segment (route
/// membership, not traversal-weighted flow), AV-lane siblings folded in.
pub fn segment_demand(assign: &RouteAssignment, net: &RoadNetwork) -> BTreeMap<LinkId, f64> {
    let mut demand = BTreeMap::new();
    let mut seen: Vec<u64> = vec![u64::MAX; net.link_count()];
    for (idx, route) in assign.routes().iter().enumerate() {
        for lid in route {
            let link = net.link(*lid);
            if link.lane_policy == LanePolicy::Connector {
                continue;
            }
            let segment = link.segment();
            // count each segment once per route even if both siblings appear
            if seen[segment.index()] != idx as u64 {
                seen[segment.index()] = idx as u64;
                *demand.entry(segment).or_insert(0.0) += 1.0;
            }
        }
    }
    demand
}

fn class_sum(partition_links: &[LinkId], per_segment: &BTreeMap<LinkId, f64>) -> f64 {
    partition_links
        .iter()
        .filter_map(|lid| per_segment.get(lid))
        .sum()
}

/// Relative throughput change per road class:
/// `(sum of a-flows - sum of b-flows) / sum of b-flows` over the segments of
/// each class. `None` where the baseline class carries no flow.
///
/// The partition must be built on the untransformed network so its link ids
/// are segment ids valid for both assignments.
pub fn throughput_by_class(
    a: &RouteAssignment,
    net_a: &RoadNetwork,
    b: &RouteAssignment,
    net_b: &RoadNetwork,
    classes: &ClassPartition,
) -> BTreeMap<RoadClass, Option<f64>> {
    let flows_a = segment_flows(a, net_a);
    let flows_b = segment_flows(b, net_b);
    classes
        .iter()
        .map(|(class, links)| {
            let sum_a = class_sum(links, &flows_a);
            let sum_b = class_sum(links, &flows_b);
            let change = (sum_b > 0.0).then(|| (sum_a - sum_b) / sum_b);
            (*class, change)
        })
        .collect()
}

/// Per-class relative demand difference between the AV-lane scenario and the
/// benchmark without the lane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandDelta {
    /// `(sum_i D_i^a - sum_i D_i^b) / sum_i D_i^a` per class; negative means
    /// the class sees less demand when AV lanes are introduced. `None` where
    /// the AV-lane scenario demand is zero.
    pub by_class: BTreeMap<RoadClass, Option<f64>>,
}

/// Demand difference between a with-AV-lane assignment and a no-lane
/// benchmark built from the same population (enforced via fingerprints).
pub fn demand_delta(
    with_lane: &RouteAssignment,
    net_with: &RoadNetwork,
    without_lane: &RouteAssignment,
    net_without: &RoadNetwork,
    classes: &ClassPartition,
) -> Result<DemandDelta> {
    if with_lane.population_fingerprint() != without_lane.population_fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: with_lane.population_fingerprint().to_string(),
            actual: without_lane.population_fingerprint().to_string(),
        });
    }
    let demand_a = segment_demand(with_lane, net_with);
    let demand_b = segment_demand(without_lane, net_without);
    let by_class = classes
        .iter()
        .map(|(class, links)| {
            let sum_a = class_sum(links, &demand_a);
            let sum_b = class_sum(links, &demand_b);
            let delta = (sum_a > 0.0).then(|| (sum_a - sum_b) / sum_a);
            (*class, delta)
        })
        .collect();
    Ok(DemandDelta { by_class })
}
