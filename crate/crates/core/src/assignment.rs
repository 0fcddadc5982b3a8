//! Incremental user-equilibrium assignment.
//!
//! Demand is loaded in shuffled batches; link weights are refreshed after
//! every batch from the class flows (capacity via the headway mix, traverse
//! time via BPR). After the initial loading pass, re-equilibration passes
//! pull one batch at a time out of the network, reroute it against everyone
//! else's flows and reinsert it, until the relative gap drops under the
//! configured tolerance or the pass budget runs out.
//!
//! Agents are atomic: one vehicle is one unit of flow, so per-link class
//! flows are exact integer counts of the routes that traverse the link.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{bpr_time, link_p_av, mixed_capacity_unchecked, HeadwayConfig, LinkState};
use crate::demand::{Population, VehicleClass};
use crate::error::{Error, Result};
use crate::network::{NodeId, RoadNetwork};
use crate::routing::{route_distance, route_time, shortest_distances, Route};

/// Which AV share feeds the capacity formula on each link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMixMode {
    /// Measured per-link class flows (zero-flow links fall back to the
    /// ambient fraction).
    #[default]
    LinkLevel,
    /// The scenario-wide AV fraction everywhere.
    SystemLevel,
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignmentConfig {
    pub batch_count: u32,
    pub max_passes: u32,
    pub gap_tolerance: f64,
    /// Modeled period in hours (the BPR denominator).
    pub period_h: f64,
    pub headways: HeadwayConfig,
    pub capacity_mix: CapacityMixMode,
}

impl Default for AssignmentConfig {
    fn default() -> Self {
        AssignmentConfig {
            batch_count: 20,
            max_passes: 5,
            gap_tolerance: 1e-3,
            period_h: 1.0,
            headways: HeadwayConfig::default(),
            capacity_mix: CapacityMixMode::LinkLevel,
        }
    }
}

impl AssignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_count < 1 {
            return Err(Error::Config("batch_count must be >= 1".into()));
        }
        if self.max_passes < 1 {
            return Err(Error::Config("max_passes must be >= 1".into()));
        }
        if !self.gap_tolerance.is_finite() || self.gap_tolerance <= 0.0 {
            return Err(Error::Config("gap_tolerance must be > 0".into()));
        }
        if !self.period_h.is_finite() || self.period_h <= 0.0 {
            return Err(Error::Config("period_h must be > 0".into()));
        }
        HeadwayConfig::new(self.headways.h_av, self.headways.h_cv)?;
        Ok(())
    }
}

/// Converged (or best-effort) assignment for one scenario cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteAssignment {
    routes: Vec<Route>,
    classes: Vec<VehicleClass>,
    origins: Vec<NodeId>,
    destinations: Vec<NodeId>,
    agent_times: Vec<f64>,
    agent_distances: Vec<f64>,
    link_states: Vec<LinkState>,
    iteration_count: u32,
    relative_gap: f64,
    converged: bool,
    population_fingerprint: String,
}

impl RouteAssignment {
    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn agent_class(&self, agent: usize) -> VehicleClass {
        self.classes[agent]
    }

    pub fn agent_time(&self, agent: usize) -> f64 {
        self.agent_times[agent]
    }

    pub fn agent_distance(&self, agent: usize) -> f64 {
        self.agent_distances[agent]
    }

    pub fn agent_count(&self) -> usize {
        self.routes.len()
    }

    pub fn link_states(&self) -> &[LinkState] {
        &self.link_states
    }

    pub fn link_times(&self) -> Vec<f64> {
        self.link_states.iter().map(|s| s.travel_time).collect()
    }

    pub fn iteration_count(&self) -> u32 {
        self.iteration_count
    }

    pub fn relative_gap(&self) -> f64 {
        self.relative_gap
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn population_fingerprint(&self) -> &str {
        &self.population_fingerprint
    }
}

// ---------------------------------------------------------------------------
// Flow bookkeeping
// ---------------------------------------------------------------------------

struct FlowTable {
    av: Vec<u32>,
    cv: Vec<u32>,
    times: Vec<f64>,
}

impl FlowTable {
    fn new(link_count: usize) -> Self {
        FlowTable {
            av: vec![0; link_count],
            cv: vec![0; link_count],
            times: vec![0.0; link_count],
        }
    }

    fn add_route(&mut self, route: &Route, vclass: VehicleClass) {
        let slot = match vclass {
            VehicleClass::Av => &mut self.av,
            VehicleClass::Cv => &mut self.cv,
        };
        for lid in route {
            slot[lid.index()] += 1;
        }
    }

    fn remove_route(&mut self, route: &Route, vclass: VehicleClass) {
        let slot = match vclass {
            VehicleClass::Av => &mut self.av,
            VehicleClass::Cv => &mut self.cv,
        };
        for lid in route {
            debug_assert!(slot[lid.index()] > 0, "flow underflow on link {lid}");
            slot[lid.index()] -= 1;
        }
    }

    fn recompute_times(&mut self, net: &RoadNetwork, cfg: &AssignmentConfig, ambient: f64) {
        for link in net.links() {
            let i = link.id.index();
            let p_av = match cfg.capacity_mix {
                CapacityMixMode::LinkLevel => link_p_av(self.av[i], self.cv[i], ambient),
                CapacityMixMode::SystemLevel => ambient,
            };
            let total = (self.av[i] + self.cv[i]) as f64;
            self.times[i] = bpr_time(link, total, p_av, &cfg.headways, cfg.period_h);
        }
    }

    fn snapshot_states(
        &self,
        net: &RoadNetwork,
        cfg: &AssignmentConfig,
        ambient: f64,
    ) -> Vec<LinkState> {
        net.links()
            .iter()
            .map(|link| {
                let i = link.id.index();
                let p_av = match cfg.capacity_mix {
                    CapacityMixMode::LinkLevel => link_p_av(self.av[i], self.cv[i], ambient),
                    CapacityMixMode::SystemLevel => ambient,
                };
                LinkState {
                    flow_av: self.av[i],
                    flow_cv: self.cv[i],
                    p_av,
                    capacity_per_lane: mixed_capacity_unchecked(p_av, &cfg.headways),
                    travel_time: self.times[i],
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Batch routing
// ---------------------------------------------------------------------------

/// Routes every listed agent on the given weights. Queries are grouped by
/// (origin, class) so one Dijkstra serves all destinations of a group; the
/// groups run in parallel and results are merged back in agent order.
fn route_agents(
    net: &RoadNetwork,
    times: &[f64],
    pop: &Population,
    agent_indices: &[usize],
) -> Result<Vec<(usize, Route)>> {
    let mut groups: BTreeMap<(NodeId, VehicleClass), Vec<usize>> = BTreeMap::new();
    for &idx in agent_indices {
        let a = &pop.agents()[idx];
        groups.entry((a.origin, a.vclass)).or_default().push(idx);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let routed: Vec<Result<Vec<(usize, Route)>>> = groups
        .par_iter()
        .map(|((origin, vclass), members)| {
            let field = shortest_distances(net, times, *origin, *vclass);
            let mut by_dest: BTreeMap<NodeId, Route> = BTreeMap::new();
            let mut out = Vec::with_capacity(members.len());
            for &idx in members {
                let agent = &pop.agents()[idx];
                let route = match by_dest.get(&agent.destination) {
                    Some(r) => r.clone(),
                    None => {
                        let r = field
                            .route_to(net, times, agent.destination)
                            .map_err(|e| match e {
                                Error::Routing { message, .. } => Error::Routing {
                                    agent: Some(agent.id),
                                    message,
                                },
                                other => other,
                            })?;
                        by_dest.insert(agent.destination, r.clone());
                        r
                    }
                };
                out.push((idx, route));
            }
            Ok(out)
        })
        .collect();
    let mut merged = Vec::with_capacity(agent_indices.len());
    for group in routed {
        merged.extend(group?);
    }
    merged.sort_unstable_by_key(|(idx, _)| *idx);
    Ok(merged)
}

/// Confirms every agent can be routed for its class before any state is
/// mutated. Reported against the lowest-id offending agent.
fn validate_routability(net: &RoadNetwork, pop: &Population) -> Result<()> {
    let free_flow: Vec<f64> = net.links().iter().map(|l| l.free_flow_time()).collect();
    let mut fields: BTreeMap<(NodeId, VehicleClass), crate::routing::DistanceField> =
        BTreeMap::new();
    for agent in pop.agents() {
        let field = fields
            .entry((agent.origin, agent.vclass))
            .or_insert_with(|| shortest_distances(net, &free_flow, agent.origin, agent.vclass));
        if field.distance_to(agent.destination).is_none() {
            return Err(Error::Routing {
                agent: Some(agent.id),
                message: format!(
                    "destination {} unreachable from {} for class {}",
                    agent.destination,
                    agent.origin,
                    agent.vclass.as_str()
                ),
            });
        }
    }
    Ok(())
}

fn pass_seed(seed: u64, pass: u32) -> u64 {
    seed.wrapping_add(0xD1B5_4A32_D192_ED03u64.wrapping_mul(pass as u64 + 1))
}

/// Relative UE gap of `routes` under `times`:
/// `(sum of current-route times - sum of shortest-route times) / sum of shortest-route times`.
fn gap_of(
    net: &RoadNetwork,
    times: &[f64],
    pop: &Population,
    routes: &[Route],
) -> f64 {
    let mut groups: BTreeMap<(NodeId, VehicleClass), Vec<usize>> = BTreeMap::new();
    for (idx, agent) in pop.agents().iter().enumerate() {
        groups
            .entry((agent.origin, agent.vclass))
            .or_default()
            .push(idx);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let fields: Vec<crate::routing::DistanceField> = groups
        .par_iter()
        .map(|((origin, vclass), _)| shortest_distances(net, times, *origin, *vclass))
        .collect();
    let mut shortest = vec![0.0f64; pop.len()];
    for ((_, members), field) in groups.iter().zip(fields.iter()) {
        for &idx in members {
            let dest = pop.agents()[idx].destination;
            shortest[idx] = field.distance_to(dest).unwrap_or(f64::INFINITY);
        }
    }
    let mut current_sum = 0.0;
    let mut shortest_sum = 0.0;
    for idx in 0..pop.len() {
        current_sum += route_time(&routes[idx], times);
        shortest_sum += shortest[idx];
    }
    if shortest_sum <= 0.0 {
        return 0.0;
    }
    ((current_sum - shortest_sum) / shortest_sum).max(0.0)
}

/// Computes the relative gap of a finished assignment against its own final
/// weights. Always >= 0; 0 means every agent is on a currently-shortest route.
pub fn relative_gap(assign: &RouteAssignment, net: &RoadNetwork) -> f64 {
    let times = assign.link_times();
    let mut groups: BTreeMap<(NodeId, VehicleClass), Vec<usize>> = BTreeMap::new();
    for idx in 0..assign.agent_count() {
        groups
            .entry((assign.origins[idx], assign.classes[idx]))
            .or_default()
            .push(idx);
    }
    let mut current_sum = 0.0;
    let mut shortest_sum = 0.0;
    let mut per_agent_shortest = vec![0.0f64; assign.agent_count()];
    for ((origin, vclass), members) in groups {
        let field = shortest_distances(net, &times, origin, vclass);
        for &idx in &members {
            per_agent_shortest[idx] = field
                .distance_to(assign.destinations[idx])
                .unwrap_or(f64::INFINITY);
        }
    }
    for (route, shortest) in assign.routes.iter().zip(&per_agent_shortest) {
        current_sum += route_time(route, &times);
        shortest_sum += shortest;
    }
    if shortest_sum <= 0.0 {
        return 0.0;
    }
    ((current_sum - shortest_sum) / shortest_sum).max(0.0)
}

/// Builds a [`RouteAssignment`] from explicit routes without running the
/// solver. Link flows and times are derived from the routes; intended for
/// tests and for recomputing metrics from dumped routes.
pub fn assignment_from_routes(
    net: &RoadNetwork,
    pop: &Population,
    routes: Vec<Route>,
    cfg: &AssignmentConfig,
) -> Result<RouteAssignment> {
    if routes.len() != pop.len() {
        return Err(Error::Validation(format!(
            "route count {} does not match population size {}",
            routes.len(),
            pop.len()
        )));
    }
    let mut flows = FlowTable::new(net.link_count());
    for (idx, route) in routes.iter().enumerate() {
        flows.add_route(route, pop.agents()[idx].vclass);
    }
    flows.recompute_times(net, cfg, pop.av_fraction());
    let gap = gap_of(net, &flows.times, pop, &routes);
    Ok(finish_assignment(net, pop, cfg, flows, routes, 0, gap))
}

fn finish_assignment(
    net: &RoadNetwork,
    pop: &Population,
    cfg: &AssignmentConfig,
    flows: FlowTable,
    routes: Vec<Route>,
    iteration_count: u32,
    gap: f64,
) -> RouteAssignment {
    let agent_times: Vec<f64> = routes.iter().map(|r| route_time(r, &flows.times)).collect();
    let agent_distances: Vec<f64> = routes.iter().map(|r| route_distance(r, net)).collect();
    let link_states = flows.snapshot_states(net, cfg, pop.av_fraction());
    RouteAssignment {
        classes: pop.agents().iter().map(|a| a.vclass).collect(),
        origins: pop.agents().iter().map(|a| a.origin).collect(),
        destinations: pop.agents().iter().map(|a| a.destination).collect(),
        routes,
        agent_times,
        agent_distances,
        link_states,
        iteration_count,
        relative_gap: gap,
        converged: gap <= cfg.gap_tolerance,
        population_fingerprint: pop.fingerprint(),
    }
}

/// Runs the incremental user-equilibrium assignment.
///
/// Determinism: identical `(net, pop, cfg)` produce identical results. The
/// batch partition is drawn from the population seed, batch order is
/// reshuffled per pass with a pass-derived seed, and all merges happen in
/// agent-id order.
pub fn assign_incremental(
    net: &RoadNetwork,
    pop: &Population,
    cfg: &AssignmentConfig,
) -> Result<RouteAssignment> {
    cfg.validate()?;
    if pop.is_empty() {
        return Err(Error::Validation("population is empty".into()));
    }
    validate_routability(net, pop)?;

    let n = pop.len();
    let ambient = pop.av_fraction();
    let seed = pop.seed();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(pass_seed(seed, 0));
    order.shuffle(&mut rng);
    let quantum = n.div_ceil(cfg.batch_count as usize);
    let batches: Vec<Vec<usize>> = order.chunks(quantum).map(|c| c.to_vec()).collect();

    let mut flows = FlowTable::new(net.link_count());
    flows.recompute_times(net, cfg, ambient);
    let mut routes: Vec<Route> = vec![Vec::new(); n];

    // Initial loading pass: batches enter one by one on current weights.
    for batch in &batches {
        for (idx, route) in route_agents(net, &flows.times, pop, batch)? {
            flows.add_route(&route, pop.agents()[idx].vclass);
            routes[idx] = route;
        }
        flows.recompute_times(net, cfg, ambient);
    }
    let mut passes = 1;
    let mut gap = gap_of(net, &flows.times, pop, &routes);

    // Re-equilibration passes: remove a batch, reroute it against everyone
    // else, reinsert.
    while gap > cfg.gap_tolerance && passes < cfg.max_passes {
        let mut batch_order: Vec<usize> = (0..batches.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(pass_seed(seed, passes));
        batch_order.shuffle(&mut rng);
        for &b in &batch_order {
            let batch = &batches[b];
            for &idx in batch {
                flows.remove_route(&routes[idx], pop.agents()[idx].vclass);
            }
            flows.recompute_times(net, cfg, ambient);
            for (idx, route) in route_agents(net, &flows.times, pop, batch)? {
                flows.add_route(&route, pop.agents()[idx].vclass);
                routes[idx] = route;
            }
            flows.recompute_times(net, cfg, ambient);
        }
        passes += 1;
        gap = gap_of(net, &flows.times, pop, &routes);
    }

    Ok(finish_assignment(net, pop, cfg, flows, routes, passes, gap))
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// Writes `link_id,flow_av,flow_cv,p_av,capacity,travel_time`.
pub fn links_to_csv<W: std::io::Write>(assign: &RouteAssignment, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["link_id", "flow_av", "flow_cv", "p_av", "capacity", "travel_time"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for (i, s) in assign.link_states.iter().enumerate() {
        wtr.write_record(&[
            i.to_string(),
            s.flow_av.to_string(),
            s.flow_cv.to_string(),
            s.p_av.to_string(),
            s.capacity_per_lane.to_string(),
            s.travel_time.to_string(),
        ])
        .map_err(|e| Error::Validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `agent_id,class,travel_time_s,distance_m,route` with the route as
/// `|`-joined link ids.
pub fn agents_to_csv<W: std::io::Write>(assign: &RouteAssignment, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["agent_id", "class", "travel_time_s", "distance_m", "route"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for idx in 0..assign.agent_count() {
        let route = assign.routes[idx]
            .iter()
            .map(|l| l.0.to_string())
            .collect::<Vec<_>>()
            .join("|");
        wtr.write_record(&[
            idx.to_string(),
            assign.classes[idx].as_str().to_string(),
            assign.agent_times[idx].to_string(),
            assign.agent_distances[idx].to_string(),
            route,
        ])
        .map_err(|e| Error::Validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
