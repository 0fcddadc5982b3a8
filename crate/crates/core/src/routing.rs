//! Class-restricted shortest paths.
//!
//! Conventional vehicles must not use AV-only links. The restriction is a
//! class filter on the adjacency scan, so no sentinel "infinite" weight ever
//! enters the arithmetic. Ties between equal-cost paths are broken towards
//! the lexicographically smallest link-id sequence: Dijkstra fixes the
//! distance labels, and the route is then extracted by walking the
//! shortest-path DAG greedily over ascending link ids (restricted to DAG
//! nodes that can still reach the destination).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::network::{LanePolicy, LinkId, NodeId, RoadNetwork};

/// An origin-to-destination path as an ordered list of link ids.
pub type Route = Vec<LinkId>;

#[inline]
pub fn link_admissible(policy: LanePolicy, vclass: VehicleClass) -> bool {
    match policy {
        LanePolicy::Mixed | LanePolicy::Connector => true,
        LanePolicy::AvOnly => vclass == VehicleClass::Av,
    }
}

#[derive(PartialEq)]
struct QueueEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance; node id as a deterministic secondary key
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.0.cmp(&self.node.0))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distance labels for one vehicle class.
pub struct DistanceField {
    pub origin: NodeId,
    pub vclass: VehicleClass,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn distance_to(&self, node: NodeId) -> Option<f64> {
        let d = self.dist[node.index()];
        d.is_finite().then_some(d)
    }
}

/// Runs Dijkstra from `origin` over links admissible for `vclass`, using
/// `times` (seconds per link) as weights. Times must be finite and >= 0 on
/// admissible links.
pub fn shortest_distances(
    net: &RoadNetwork,
    times: &[f64],
    origin: NodeId,
    vclass: VehicleClass,
) -> DistanceField {
    debug_assert_eq!(times.len(), net.link_count());
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut settled = vec![false; net.node_count()];
    let mut heap = BinaryHeap::new();
    dist[origin.index()] = 0.0;
    heap.push(QueueEntry {
        dist: 0.0,
        node: origin,
    });
    while let Some(QueueEntry { dist: d, node }) = heap.pop() {
        if settled[node.index()] {
            continue;
        }
        settled[node.index()] = true;
        for &lid in net.outgoing(node) {
            let link = net.link(lid);
            if !link_admissible(link.lane_policy, vclass) {
                continue;
            }
            let candidate = d + times[lid.index()];
            if candidate < dist[link.to.index()] {
                dist[link.to.index()] = candidate;
                heap.push(QueueEntry {
                    dist: candidate,
                    node: link.to,
                });
            }
        }
    }
    DistanceField {
        origin,
        vclass,
        dist,
    }
}

impl DistanceField {
    /// Extracts the minimum-time route to `dest`, breaking ties towards the
    /// lexicographically smallest link-id sequence.
    pub fn route_to(&self, net: &RoadNetwork, times: &[f64], dest: NodeId) -> Result<Route> {
        if self.distance_to(dest).is_none() {
            return Err(Error::Routing {
                agent: None,
                message: format!(
                    "no {} route from {} to {}",
                    self.vclass.as_str(),
                    self.origin,
                    dest
                ),
            });
        }
        if dest == self.origin {
            return Ok(Vec::new());
        }

        // Nodes of the shortest-path DAG from which `dest` is reachable,
        // found by walking DAG edges backwards from `dest`.
        let mut reaches_dest = vec![false; net.node_count()];
        reaches_dest[dest.index()] = true;
        let mut stack = vec![dest];
        while let Some(node) = stack.pop() {
            let d_node = self.dist[node.index()];
            for &lid in net.incoming(node) {
                let link = net.link(lid);
                if !link_admissible(link.lane_policy, self.vclass) {
                    continue;
                }
                let d_from = self.dist[link.from.index()];
                if d_from.is_finite()
                    && d_from + times[lid.index()] == d_node
                    && !reaches_dest[link.from.index()]
                {
                    reaches_dest[link.from.index()] = true;
                    stack.push(link.from);
                }
            }
        }

        // Greedy walk: at each node take the smallest admissible DAG link
        // that keeps the destination reachable.
        let mut route = Vec::new();
        let mut current = self.origin;
        while current != dest {
            let d_cur = self.dist[current.index()];
            let next = net
                .outgoing(current)
                .iter()
                .copied()
                .filter(|&lid| {
                    let link = net.link(lid);
                    link_admissible(link.lane_policy, self.vclass)
                        && reaches_dest[link.to.index()]
                        && d_cur + times[lid.index()] == self.dist[link.to.index()]
                })
                .min();
            let Some(lid) = next else {
                return Err(Error::Routing {
                    agent: None,
                    message: format!(
                        "internal: shortest-path DAG walk stuck at node {current}"
                    ),
                });
            };
            route.push(lid);
            current = net.link(lid).to;
            if route.len() > net.link_count() {
                return Err(Error::Routing {
                    agent: None,
                    message: "internal: shortest-path walk exceeded link count".into(),
                });
            }
        }
        Ok(route)
    }
}

/// Minimum-travel-time route for one query. AV-only links are treated as
/// non-traversable for conventional vehicles; connector links cost whatever
/// `times` says (0 under BPR evaluation).
pub fn restricted_shortest_path(
    net: &RoadNetwork,
    times: &[f64],
    origin: NodeId,
    dest: NodeId,
    vclass: VehicleClass,
) -> Result<Route> {
    shortest_distances(net, times, origin, vclass).route_to(net, times, dest)
}

/// Sum of link times along a route.
pub fn route_time(route: &Route, times: &[f64]) -> f64 {
    route.iter().map(|lid| times[lid.index()]).sum()
}

/// Sum of link lengths along a route, in meters. Connectors contribute 0.
pub fn route_distance(route: &Route, net: &RoadNetwork) -> f64 {
    route.iter().map(|lid| net.link(*lid).length_m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{tests::diamond, Link, RoadClass, RoadNetwork};

    fn parallel_pair(policy_fast: LanePolicy) -> RoadNetwork {
        let mk = |id: u32, policy: LanePolicy| Link {
            id: LinkId(id),
            from: NodeId(0),
            to: NodeId(1),
            length_m: 1000.0,
            lanes: 1,
            free_flow_speed: 20.0,
            road_class: RoadClass::Highway,
            alpha: 0.15,
            beta: 4.0,
            lane_policy: policy,
            source_link: None,
            external_id: id as i64,
        };
        RoadNetwork::new(vec![0, 1], vec![mk(0, policy_fast), mk(1, LanePolicy::Mixed)]).unwrap()
    }

    #[test]
    fn av_takes_faster_link() {
        let net = parallel_pair(LanePolicy::Mixed);
        let times = vec![10.0, 20.0];
        let route =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(1), VehicleClass::Av).unwrap();
        assert_eq!(route, vec![LinkId(0)]);
    }

    #[test]
    fn cv_is_masked_from_av_only_link() {
        let net = parallel_pair(LanePolicy::AvOnly);
        let times = vec![10.0, 20.0];
        let cv =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(1), VehicleClass::Cv).unwrap();
        assert_eq!(cv, vec![LinkId(1)], "CV must use the slower mixed link");
        let av =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(1), VehicleClass::Av).unwrap();
        assert_eq!(av, vec![LinkId(0)]);
    }

    #[test]
    fn diamond_tie_breaks_lexicographically() {
        let net = diamond();
        let times = vec![50.0, 50.0, 50.0, 50.0];
        // Brute-force the two candidate paths and their costs.
        let paths = [vec![LinkId(0), LinkId(1)], vec![LinkId(2), LinkId(3)]];
        let costs: Vec<f64> = paths.iter().map(|p| route_time(p, &times)).collect();
        assert_eq!(costs[0], costs[1], "branches must tie for this test");
        let expected = paths
            .iter()
            .min_by(|a, b| {
                let ka: Vec<u32> = a.iter().map(|l| l.0).collect();
                let kb: Vec<u32> = b.iter().map(|l| l.0).collect();
                ka.cmp(&kb)
            })
            .unwrap()
            .clone();
        let got =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(3), VehicleClass::Cv).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn tie_break_prefers_smaller_id_even_when_found_later() {
        // Same diamond but make the higher-id branch strictly faster on the
        // first hop, equal in total: path [2,3] = 40 + 60, path [0,1] = 50 + 50.
        let net = diamond();
        let times = vec![50.0, 50.0, 40.0, 60.0];
        let got =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(3), VehicleClass::Cv).unwrap();
        assert_eq!(got, vec![LinkId(0), LinkId(1)]);
    }

    #[test]
    fn unreachable_destination_errors() {
        let net = parallel_pair(LanePolicy::Mixed);
        let times = vec![10.0, 20.0];
        let err = restricted_shortest_path(&net, &times, NodeId(1), NodeId(0), VehicleClass::Av);
        assert!(matches!(err, Err(Error::Routing { .. })));
    }

    #[test]
    fn zero_cost_connectors_are_traversable() {
        let net = crate::network::transform_av_lane_default(
            &crate::network::tests::single_highway(2),
            0.0,
        )
        .unwrap();
        let times: Vec<f64> = net.links().iter().map(|l| l.free_flow_time()).collect();
        let av =
            restricted_shortest_path(&net, &times, NodeId(0), NodeId(1), VehicleClass::Av).unwrap();
        // Equal free-flow times on both branches: the direct mixed link wins
        // the lexicographic tie (id 0 < connector ids).
        assert_eq!(av, vec![LinkId(0)]);
        // Make the mixed link slower: the AV hops through the connectors.
        let mut slow = times.clone();
        slow[0] = 1e6;
        let via_av_lane =
            restricted_shortest_path(&net, &slow, NodeId(0), NodeId(1), VehicleClass::Av).unwrap();
        assert_eq!(via_av_lane.len(), 3);
        let cv =
            restricted_shortest_path(&net, &slow, NodeId(0), NodeId(1), VehicleClass::Cv).unwrap();
        assert_eq!(cv, vec![LinkId(0)], "CV cannot reach the AV lane");
    }
}
