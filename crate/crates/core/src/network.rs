//! Road-network graph: loading, validation, classification and the
//! dedicated-AV-lane transformation.
//!
//! Networks are directed multigraphs. Node and link ids are dense integers
//! assigned at load time; the ids found in the input file are kept as
//! external metadata only. After construction a [`RoadNetwork`] is immutable,
//! so it can be shared freely across routing workers.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier, stable within one network value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Dense link identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Functional road classification. Only highways are eligible for AV-lane
/// extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadClass {
    Highway,
    MajorRoad,
    OtherRoad,
}

impl RoadClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RoadClass::Highway => "highway",
            RoadClass::MajorRoad => "major",
            RoadClass::OtherRoad => "other",
        }
    }

    pub fn parse(s: &str) -> Option<RoadClass> {
        match s {
            "highway" => Some(RoadClass::Highway),
            "major" => Some(RoadClass::MajorRoad),
            "other" => Some(RoadClass::OtherRoad),
            _ => None,
        }
    }

    pub const ALL: [RoadClass; 3] = [RoadClass::Highway, RoadClass::MajorRoad, RoadClass::OtherRoad];
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who may use a link. `Connector` links are the zero-cost joints inserted by
/// the AV-lane transformation; they carry no BPR cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanePolicy {
    Mixed,
    AvOnly,
    Connector,
}

impl LanePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            LanePolicy::Mixed => "mixed",
            LanePolicy::AvOnly => "av_only",
            LanePolicy::Connector => "connector",
        }
    }

    pub fn parse(s: &str) -> Option<LanePolicy> {
        match s {
            "mixed" => Some(LanePolicy::Mixed),
            "av_only" => Some(LanePolicy::AvOnly),
            "connector" => Some(LanePolicy::Connector),
            _ => None,
        }
    }
}

/// One directed road segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// Segment length in meters. Exactly 0 for connectors, > 0 otherwise.
    pub length_m: f64,
    pub lanes: u32,
    /// Free-flow speed in m/s.
    pub free_flow_speed: f64,
    pub road_class: RoadClass,
    /// BPR parameters.
    pub alpha: f64,
    pub beta: f64,
    pub lane_policy: LanePolicy,
    /// For links created by the AV-lane transformation: the original segment.
    pub source_link: Option<LinkId>,
    /// Id carried by the input file, kept as metadata.
    pub external_id: i64,
}

impl Link {
    /// Traverse time at zero flow, in seconds. Connectors cost exactly 0.
    pub fn free_flow_time(&self) -> f64 {
        if self.lane_policy == LanePolicy::Connector {
            0.0
        } else {
            self.length_m / self.free_flow_speed
        }
    }

    /// The original segment this link physically belongs to.
    pub fn segment(&self) -> LinkId {
        self.source_link.unwrap_or(self.id)
    }

    fn validate(&self) -> Result<()> {
        let id = self.id;
        if self.lane_policy == LanePolicy::Connector {
            if self.length_m != 0.0 {
                return Err(Error::Validation(format!(
                    "link {id}: connector links must have length 0, got {}",
                    self.length_m
                )));
            }
        } else if !self.length_m.is_finite() || self.length_m <= 0.0 {
            return Err(Error::Validation(format!(
                "link {id}: length_m must be positive and finite, got {}",
                self.length_m
            )));
        }
        if self.lanes < 1 {
            return Err(Error::Validation(format!("link {id}: lanes must be >= 1")));
        }
        if self.lane_policy == LanePolicy::AvOnly && self.lanes != 1 {
            return Err(Error::Validation(format!(
                "link {id}: av_only links must have exactly 1 lane, got {}",
                self.lanes
            )));
        }
        if !self.free_flow_speed.is_finite() || self.free_flow_speed <= 0.0 {
            return Err(Error::Validation(format!(
                "link {id}: free_flow_speed must be positive and finite"
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::Validation(format!(
                "link {id}: alpha must be finite and >= 0"
            )));
        }
        if !self.beta.is_finite() || self.beta < 1.0 {
            return Err(Error::Validation(format!(
                "link {id}: beta must be finite and >= 1"
            )));
        }
        Ok(())
    }
}

/// Default BPR parameters applied when an input file omits alpha/beta.
pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_BETA: f64 = 4.0;

/// Immutable directed road-network graph with per-node adjacency indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    links: Vec<Link>,
    /// Outgoing link ids per node.
    out_adj: Vec<Vec<LinkId>>,
    /// Incoming link ids per node.
    in_adj: Vec<Vec<LinkId>>,
    /// For nodes duplicated by the AV-lane transformation: the source node.
    node_source: Vec<Option<NodeId>>,
    /// Id carried by the input file, kept as metadata.
    node_external_ids: Vec<i64>,
    external_lookup: BTreeMap<i64, NodeId>,
}

impl RoadNetwork {
    /// Builds a network from parts, checking every structural invariant.
    pub fn new(node_external_ids: Vec<i64>, links: Vec<Link>) -> Result<RoadNetwork> {
        let node_source = vec![None; node_external_ids.len()];
        Self::with_sources(node_external_ids, node_source, links)
    }

    fn with_sources(
        node_external_ids: Vec<i64>,
        node_source: Vec<Option<NodeId>>,
        links: Vec<Link>,
    ) -> Result<RoadNetwork> {
        let n = node_external_ids.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (i, link) in links.iter().enumerate() {
            if link.id.index() != i {
                return Err(Error::Validation(format!(
                    "link ids must be dense and ordered: found {} at position {i}",
                    link.id
                )));
            }
            link.validate()?;
            for (end, name) in [(link.from, "from"), (link.to, "to")] {
                if end.index() >= n {
                    return Err(Error::Validation(format!(
                        "link {} (external id {}): {name} endpoint {} does not exist",
                        link.id, link.external_id, end
                    )));
                }
            }
            out_adj[link.from.index()].push(link.id);
            in_adj[link.to.index()].push(link.id);
        }
        let external_lookup = node_external_ids
            .iter()
            .enumerate()
            .map(|(i, &ext)| (ext, NodeId(i as u32)))
            .collect();
        Ok(RoadNetwork {
            links,
            out_adj,
            in_adj,
            node_source,
            node_external_ids,
            external_lookup,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_external_ids.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count() as u32).map(NodeId)
    }

    pub fn outgoing(&self, node: NodeId) -> &[LinkId] {
        &self.out_adj[node.index()]
    }

    pub fn incoming(&self, node: NodeId) -> &[LinkId] {
        &self.in_adj[node.index()]
    }

    /// Source node for duplicates created by the AV-lane transformation.
    pub fn node_source(&self, node: NodeId) -> Option<NodeId> {
        self.node_source[node.index()]
    }

    pub fn node_external_id(&self, node: NodeId) -> i64 {
        self.node_external_ids[node.index()]
    }

    /// Resolves an external (file) node id to the dense id.
    pub fn resolve_external_node(&self, external: i64) -> Option<NodeId> {
        self.external_lookup.get(&external).copied()
    }

    /// Validation pass: every node reaches and is reached by node 0.
    /// Not enforced at construction; call it when a scenario requires a
    /// strongly connected network.
    pub fn validate_strongly_connected(&self) -> Result<()> {
        let n = self.node_count();
        if n == 0 {
            return Err(Error::Validation("network has no nodes".into()));
        }
        let fwd = self.reach_from(NodeId(0), Direction::Forward);
        let bwd = self.reach_from(NodeId(0), Direction::Backward);
        for i in 0..n {
            if !fwd[i] || !bwd[i] {
                return Err(Error::Validation(format!(
                    "network is not strongly connected: node {i} (external id {})",
                    self.node_external_ids[i]
                )));
            }
        }
        Ok(())
    }

    fn reach_from(&self, start: NodeId, dir: Direction) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start.index()] = true;
        while let Some(node) = stack.pop() {
            let adjacent = match dir {
                Direction::Forward => &self.out_adj[node.index()],
                Direction::Backward => &self.in_adj[node.index()],
            };
            for &lid in adjacent {
                let link = self.link(lid);
                let next = match dir {
                    Direction::Forward => link.to,
                    Direction::Backward => link.from,
                };
                if !seen[next.index()] {
                    seen[next.index()] = true;
                    stack.push(next);
                }
            }
        }
        seen
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

// ---------------------------------------------------------------------------
// AV-lane transformation
// ---------------------------------------------------------------------------

/// Default eligibility used by [`transform_av_lane_default`]: highway links
/// with at least 2 lanes and at least `min_length_m` meters of length.
pub fn default_av_lane_eligibility(min_length_m: f64) -> impl Fn(&Link) -> bool {
    move |link: &Link| {
        link.road_class == RoadClass::Highway
            && link.lane_policy == LanePolicy::Mixed
            && link.lanes >= 2
            && link.length_m >= min_length_m
    }
}

/// Applies the AV-lane transformation with the default eligibility rule.
/// One-lane highway segments are skipped with a warning instead of failing
/// the whole transform.
pub fn transform_av_lane_default(net: &RoadNetwork, min_length_m: f64) -> Result<RoadNetwork> {
    for link in net.links() {
        if link.road_class == RoadClass::Highway
            && link.lane_policy == LanePolicy::Mixed
            && link.lanes < 2
        {
            warn!(
                "skipping AV-lane extraction on 1-lane highway link {} (external id {})",
                link.id, link.external_id
            );
        }
    }
    transform_av_lane(net, default_av_lane_eligibility(min_length_m))
}

/// Reserves one lane of every eligible link for autonomous vehicles.
///
/// Each eligible link keeps `lanes - 1` mixed lanes; a parallel one-lane
/// `AvOnly` link with identical geometry and BPR parameters is added between
/// duplicated endpoint nodes, and zero-cost connectors join the duplicates to
/// the original endpoints so vehicles can switch at segment boundaries.
/// The input network is left untouched.
pub fn transform_av_lane<F>(net: &RoadNetwork, eligible: F) -> Result<RoadNetwork>
where
    F: Fn(&Link) -> bool,
{
    let mut links = net.links.clone();
    let mut node_external_ids = net.node_external_ids.clone();
    let mut node_source = net.node_source.clone();

    let mut next_node = net.node_count() as u32;
    let mut next_link = net.link_count() as u32;
    // Synthetic nodes/links get negative external ids so they cannot collide
    // with file-assigned ids.
    let mut next_ext = -1i64;

    for lid in 0..net.link_count() {
        let original = net.links[lid].clone();
        if !eligible(&original) {
            continue;
        }
        if original.lane_policy != LanePolicy::Mixed || original.road_class != RoadClass::Highway {
            return Err(Error::Transform(format!(
                "link {} is not a mixed highway link",
                original.id
            )));
        }
        if original.lanes < 2 {
            return Err(Error::Transform(format!(
                "link {} has a single lane; cannot strip the only mixed lane",
                original.id
            )));
        }

        let from_dup = NodeId(next_node);
        let to_dup = NodeId(next_node + 1);
        next_node += 2;
        for src in [original.from, original.to] {
            node_external_ids.push(next_ext);
            next_ext -= 1;
            node_source.push(Some(src));
        }

        links[lid].lanes -= 1;

        let av_lane = Link {
            id: LinkId(next_link),
            from: from_dup,
            to: to_dup,
            length_m: original.length_m,
            lanes: 1,
            free_flow_speed: original.free_flow_speed,
            road_class: original.road_class,
            alpha: original.alpha,
            beta: original.beta,
            lane_policy: LanePolicy::AvOnly,
            source_link: Some(original.id),
            external_id: next_ext,
        };
        next_ext -= 1;
        let entry = Link {
            id: LinkId(next_link + 1),
            from: original.from,
            to: from_dup,
            length_m: 0.0,
            lanes: 1,
            free_flow_speed: original.free_flow_speed,
            road_class: original.road_class,
            alpha: original.alpha,
            beta: original.beta,
            lane_policy: LanePolicy::Connector,
            source_link: Some(original.id),
            external_id: next_ext,
        };
        next_ext -= 1;
        let exit = Link {
            id: LinkId(next_link + 2),
            from: to_dup,
            to: original.to,
            length_m: 0.0,
            lanes: 1,
            free_flow_speed: original.free_flow_speed,
            road_class: original.road_class,
            alpha: original.alpha,
            beta: original.beta,
            lane_policy: LanePolicy::Connector,
            source_link: Some(original.id),
            external_id: next_ext,
        };
        next_ext -= 1;
        next_link += 3;
        links.extend([av_lane, entry, exit]);
    }

    RoadNetwork::with_sources(node_external_ids, node_source, links)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Per-class partition of link ids. Connectors are excluded; AV-only links
/// count toward the class of the segment they were extracted from (always
/// highway).
pub type ClassPartition = BTreeMap<RoadClass, Vec<LinkId>>;

pub fn classify_links(net: &RoadNetwork) -> ClassPartition {
    let mut partition = ClassPartition::new();
    for class in RoadClass::ALL {
        partition.insert(class, Vec::new());
    }
    for link in net.links() {
        if link.lane_policy == LanePolicy::Connector {
            continue;
        }
        partition.get_mut(&link.road_class).unwrap().push(link.id);
    }
    partition
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

const CSV_HEADER: [&str; 11] = [
    "type", "id", "from", "to", "length_m", "lanes", "speed_mps", "class", "alpha", "beta",
    "policy",
];

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonLink {
    id: i64,
    from: i64,
    to: i64,
    length_m: f64,
    lanes: u32,
    speed_mps: f64,
    class: RoadClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<LanePolicy>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNetwork {
    nodes: Vec<JsonNode>,
    links: Vec<JsonLink>,
}

struct NetworkAccumulator {
    node_ids: Vec<i64>,
    node_lookup: BTreeMap<i64, NodeId>,
    links: Vec<Link>,
}

impl NetworkAccumulator {
    fn new() -> Self {
        NetworkAccumulator {
            node_ids: Vec::new(),
            node_lookup: BTreeMap::new(),
            links: Vec::new(),
        }
    }

    fn add_node(&mut self, external: i64, record: usize) -> Result<()> {
        let dense = NodeId(self.node_ids.len() as u32);
        if self.node_lookup.insert(external, dense).is_some() {
            return Err(Error::Parse {
                line: record,
                message: format!("duplicate node id {external}"),
            });
        }
        self.node_ids.push(external);
        Ok(())
    }

    fn resolve(&self, external: i64, record: usize, link_ext: i64) -> Result<NodeId> {
        self.node_lookup.get(&external).copied().ok_or_else(|| {
            Error::Validation(format!(
                "link {link_ext} (record {record}) references undeclared node id {external}"
            ))
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn add_link(
        &mut self,
        record: usize,
        external: i64,
        from_ext: i64,
        to_ext: i64,
        length_m: f64,
        lanes: u32,
        speed_mps: f64,
        class: RoadClass,
        alpha: Option<f64>,
        beta: Option<f64>,
        policy: Option<LanePolicy>,
    ) -> Result<()> {
        let from = self.resolve(from_ext, record, external)?;
        let to = self.resolve(to_ext, record, external)?;
        self.links.push(Link {
            id: LinkId(self.links.len() as u32),
            from,
            to,
            length_m,
            lanes,
            free_flow_speed: speed_mps,
            road_class: class,
            alpha: alpha.unwrap_or(DEFAULT_ALPHA),
            beta: beta.unwrap_or(DEFAULT_BETA),
            lane_policy: policy.unwrap_or(LanePolicy::Mixed),
            source_link: None,
            external_id: external,
        });
        Ok(())
    }

    fn finish(self) -> Result<RoadNetwork> {
        RoadNetwork::new(self.node_ids, self.links)
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &str, record: usize) -> Result<&'a str> {
    rec.get(idx)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Parse {
            line: record,
            message: format!("missing field `{name}`"),
        })
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str, record: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line: record,
        message: format!("invalid {name}: `{s}`"),
    })
}

/// Parses the CSV network format. Records are `node,<id>` and
/// `link,<id>,<from>,<to>,<length_m>,<lanes>,<speed_mps>,<class>[,alpha,beta[,policy]]`
/// after a header row.
pub fn network_from_csv<R: Read>(reader: R) -> Result<RoadNetwork> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let mut acc = NetworkAccumulator::new();
    for (idx, rec) in rdr.records().enumerate() {
        let record = idx + 2; // 1-based, after the header row
        let rec = rec.map_err(|e| Error::Parse {
            line: record,
            message: e.to_string(),
        })?;
        let kind = field(&rec, 0, "type", record)?;
        match kind {
            "node" => {
                let id: i64 = parse_num(field(&rec, 1, "id", record)?, "node id", record)?;
                acc.add_node(id, record)?;
            }
            "link" => {
                let id: i64 = parse_num(field(&rec, 1, "id", record)?, "link id", record)?;
                let from: i64 = parse_num(field(&rec, 2, "from", record)?, "from", record)?;
                let to: i64 = parse_num(field(&rec, 3, "to", record)?, "to", record)?;
                let length: f64 =
                    parse_num(field(&rec, 4, "length_m", record)?, "length_m", record)?;
                let lanes: u32 = parse_num(field(&rec, 5, "lanes", record)?, "lanes", record)?;
                let speed: f64 =
                    parse_num(field(&rec, 6, "speed_mps", record)?, "speed_mps", record)?;
                let class_s = field(&rec, 7, "class", record)?;
                let class = RoadClass::parse(class_s).ok_or_else(|| Error::Parse {
                    line: record,
                    message: format!("unknown road class `{class_s}`"),
                })?;
                let opt = |i: usize| rec.get(i).map(str::trim).filter(|s| !s.is_empty());
                let alpha = opt(8).map(|s| parse_num(s, "alpha", record)).transpose()?;
                let beta = opt(9).map(|s| parse_num(s, "beta", record)).transpose()?;
                let policy = opt(10)
                    .map(|s| {
                        LanePolicy::parse(s).ok_or_else(|| Error::Parse {
                            line: record,
                            message: format!("unknown lane policy `{s}`"),
                        })
                    })
                    .transpose()?;
                acc.add_link(
                    record, id, from, to, length, lanes, speed, class, alpha, beta, policy,
                )?;
            }
            other => {
                return Err(Error::Parse {
                    line: record,
                    message: format!("unknown record type `{other}`"),
                });
            }
        }
    }
    acc.finish()
}

/// Parses the JSON network format (same field names as the CSV columns).
pub fn network_from_json<R: Read>(reader: R) -> Result<RoadNetwork> {
    let parsed: JsonNetwork = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut acc = NetworkAccumulator::new();
    for (i, node) in parsed.nodes.iter().enumerate() {
        acc.add_node(node.id, i + 1)?;
    }
    for (i, link) in parsed.links.into_iter().enumerate() {
        acc.add_link(
            i + 1,
            link.id,
            link.from,
            link.to,
            link.length_m,
            link.lanes,
            link.speed_mps,
            link.class,
            link.alpha,
            link.beta,
            link.policy,
        )?;
    }
    acc.finish()
}

/// Loads a network file, dispatching on the `.csv` / `.json` extension.
pub fn load_network<P: AsRef<Path>>(path: P) -> Result<RoadNetwork> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => network_from_json(std::io::BufReader::new(file)),
        _ => network_from_csv(std::io::BufReader::new(file)),
    }
}

/// Writes the CSV network format, including the `policy` column so
/// transformed networks round-trip.
pub fn network_to_csv<W: Write>(net: &RoadNetwork, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    wtr.write_record(CSV_HEADER).map_err(csv_io)?;
    for node in net.nodes() {
        wtr.write_record(&["node".to_string(), net.node_external_id(node).to_string()])
            .map_err(csv_io)?;
    }
    for link in net.links() {
        wtr.write_record(&[
            "link".to_string(),
            link.external_id.to_string(),
            net.node_external_id(link.from).to_string(),
            net.node_external_id(link.to).to_string(),
            link.length_m.to_string(),
            link.lanes.to_string(),
            link.free_flow_speed.to_string(),
            link.road_class.as_str().to_string(),
            link.alpha.to_string(),
            link.beta.to_string(),
            link.lane_policy.as_str().to_string(),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the JSON network format.
pub fn network_to_json<W: Write>(net: &RoadNetwork, writer: W) -> Result<()> {
    let doc = JsonNetwork {
        nodes: net
            .nodes()
            .map(|n| JsonNode {
                id: net.node_external_id(n),
            })
            .collect(),
        links: net
            .links()
            .iter()
            .map(|l| JsonLink {
                id: l.external_id,
                from: net.node_external_id(l.from),
                to: net.node_external_id(l.to),
                length_m: l.length_m,
                lanes: l.lanes,
                speed_mps: l.free_flow_speed,
                class: l.road_class,
                alpha: Some(l.alpha),
                beta: Some(l.beta),
                policy: Some(l.lane_policy),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &doc).map_err(|e| Error::Validation(e.to_string()))
}

/// Saves a network, dispatching on the `.csv` / `.json` extension.
pub fn save_network<P: AsRef<Path>>(net: &RoadNetwork, path: P) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => network_to_json(net, std::io::BufWriter::new(file)),
        _ => network_to_csv(net, std::io::BufWriter::new(file)),
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Validation(format!("csv write failed: {e}"))
}
