//! Synthetic grid networks for benchmarks and tests.
//!
//! Nodes form a rows x cols lattice joined by one-lane streets in both
//! directions. With the corridor enabled, the middle row becomes a multi-lane
//! highway and its neighbor rows become major roads, giving the classic
//! "fast corridor with parallel arterials" layout.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::demand::OdEntry;
use crate::error::{Error, Result};
use crate::network::{
    LanePolicy, Link, LinkId, NodeId, RoadClass, RoadNetwork, DEFAULT_ALPHA, DEFAULT_BETA,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub rows: u32,
    pub cols: u32,
    /// Distance between adjacent nodes, meters.
    pub spacing_m: f64,
    /// One-lane street speed (50 km/h).
    pub street_speed_mps: f64,
    /// Turn the middle row into a multi-lane highway corridor with major
    /// roads on the neighboring rows.
    pub highway_corridor: bool,
    pub highway_lanes: u32,
    /// 100 km/h.
    pub highway_speed_mps: f64,
    pub major_lanes: u32,
    /// 60 km/h.
    pub major_speed_mps: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            rows: 8,
            cols: 8,
            spacing_m: 500.0,
            street_speed_mps: 13.89,
            highway_corridor: true,
            highway_lanes: 3,
            highway_speed_mps: 27.78,
            major_lanes: 2,
            major_speed_mps: 16.67,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Config("grid needs at least 2 rows and 2 cols".into()));
        }
        if !self.spacing_m.is_finite() || self.spacing_m <= 0.0 {
            return Err(Error::Config("spacing_m must be > 0".into()));
        }
        for (v, name) in [
            (self.street_speed_mps, "street_speed_mps"),
            (self.highway_speed_mps, "highway_speed_mps"),
            (self.major_speed_mps, "major_speed_mps"),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        if self.highway_lanes < 2 {
            return Err(Error::Config(
                "highway_lanes must be >= 2 so a lane can be dedicated".into(),
            ));
        }
        Ok(())
    }

    pub fn corridor_row(&self) -> u32 {
        self.rows / 2
    }

    fn node_id(&self, row: u32, col: u32) -> i64 {
        (row * self.cols + col) as i64
    }

    fn row_parameters(&self, row: u32) -> (RoadClass, u32, f64) {
        let corridor = self.corridor_row();
        if !self.highway_corridor {
            return (RoadClass::OtherRoad, 1, self.street_speed_mps);
        }
        if row == corridor {
            (RoadClass::Highway, self.highway_lanes, self.highway_speed_mps)
        } else if row + 1 == corridor || row == corridor + 1 {
            (RoadClass::MajorRoad, self.major_lanes, self.major_speed_mps)
        } else {
            (RoadClass::OtherRoad, 1, self.street_speed_mps)
        }
    }
}

/// Builds the grid network. Node external ids are `row * cols + col`.
pub fn generate_grid(cfg: &GridConfig) -> Result<RoadNetwork> {
    cfg.validate()?;
    let node_ids: Vec<i64> = (0..cfg.rows)
        .flat_map(|r| (0..cfg.cols).map(move |c| (r, c)))
        .map(|(r, c)| cfg.node_id(r, c))
        .collect();

    let mut links = Vec::new();
    let mut push = |from: i64, to: i64, class: RoadClass, lanes: u32, speed: f64| {
        let id = LinkId(links.len() as u32);
        links.push(Link {
            id,
            from: NodeId(from as u32),
            to: NodeId(to as u32),
            length_m: cfg.spacing_m,
            lanes,
            free_flow_speed: speed,
            road_class: class,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            lane_policy: LanePolicy::Mixed,
            source_link: None,
            external_id: id.0 as i64,
        });
    };

    // Horizontal links per row, both directions.
    for r in 0..cfg.rows {
        let (class, lanes, speed) = cfg.row_parameters(r);
        for c in 0..cfg.cols - 1 {
            let a = cfg.node_id(r, c);
            let b = cfg.node_id(r, c + 1);
            push(a, b, class, lanes, speed);
            push(b, a, class, lanes, speed);
        }
    }
    // Vertical links per column, both directions: always one-lane streets.
    for c in 0..cfg.cols {
        for r in 0..cfg.rows - 1 {
            let a = cfg.node_id(r, c);
            let b = cfg.node_id(r + 1, c);
            push(a, b, RoadClass::OtherRoad, 1, cfg.street_speed_mps);
            push(b, a, RoadClass::OtherRoad, 1, cfg.street_speed_mps);
        }
    }

    RoadNetwork::new(node_ids, links)
}

/// West-to-east demand: every west-column node to every east-column node,
/// uniform weights.
pub fn west_east_od(cfg: &GridConfig, net: &RoadNetwork) -> Result<Vec<OdEntry>> {
    let mut entries = Vec::new();
    for r_from in 0..cfg.rows {
        for r_to in 0..cfg.rows {
            let origin = net
                .resolve_external_node(cfg.node_id(r_from, 0))
                .ok_or_else(|| Error::Validation("grid node missing".into()))?;
            let destination = net
                .resolve_external_node(cfg.node_id(r_to, cfg.cols - 1))
                .ok_or_else(|| Error::Validation("grid node missing".into()))?;
            entries.push(OdEntry {
                origin,
                destination,
                weight: 1.0,
            });
        }
    }
    Ok(entries)
}

/// Writes an OD matrix as `origin,destination,weight` CSV using the
/// network's external node ids.
pub fn od_to_csv<W: Write>(entries: &[OdEntry], net: &RoadNetwork, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["origin", "destination", "weight"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for e in entries {
        wtr.write_record(&[
            net.node_external_id(e.origin).to_string(),
            net.node_external_id(e.destination).to_string(),
            e.weight.to_string(),
        ])
        .map_err(|e| Error::Validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
