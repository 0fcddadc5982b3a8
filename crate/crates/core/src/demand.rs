//! Agent population generation from an OD matrix.
//!
//! Populations are deterministic for a fixed (matrix, count, seed) triple,
//! and AV membership is assigned through a seed-derived priority permutation
//! so that the AV sets are nested across increasing fractions. This keeps
//! sweep cells comparable: raising the AV percentage converts existing
//! agents instead of resampling the demand.

use std::io::{Read, Write};

use log::warn;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{NodeId, RoadNetwork};

/// Vehicle class of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VehicleClass {
    Av,
    Cv,
}

impl VehicleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Av => "av",
            VehicleClass::Cv => "cv",
        }
    }
}

/// One weighted origin-destination entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdEntry {
    pub origin: NodeId,
    pub destination: NodeId,
    pub weight: f64,
}

/// Travel demand as weighted OD pairs. Entries with `origin == destination`
/// or non-positive weight are dropped at construction with a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    entries: Vec<OdEntry>,
}

impl OdMatrix {
    pub fn new(entries: Vec<OdEntry>) -> Result<OdMatrix> {
        let mut kept = Vec::with_capacity(entries.len());
        for e in entries {
            if e.origin == e.destination {
                warn!("skipping OD entry with origin == destination ({})", e.origin);
                continue;
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::Validation(format!(
                    "OD weight must be finite and >= 0, got {} for {} -> {}",
                    e.weight, e.origin, e.destination
                )));
            }
            if e.weight == 0.0 {
                continue;
            }
            kept.push(e);
        }
        if kept.is_empty() || kept.iter().map(|e| e.weight).sum::<f64>() <= 0.0 {
            return Err(Error::Validation(
                "OD matrix has no usable entries (weights must sum > 0)".into(),
            ));
        }
        Ok(OdMatrix { entries: kept })
    }

    pub fn entries(&self) -> &[OdEntry] {
        &self.entries
    }

    /// Checks that all endpoints exist in `net`.
    pub fn validate_against(&self, net: &RoadNetwork) -> Result<()> {
        let n = net.node_count() as u32;
        for e in &self.entries {
            for node in [e.origin, e.destination] {
                if node.0 >= n {
                    return Err(Error::Validation(format!(
                        "OD entry references node {node} outside the network"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads `origin,destination,weight` CSV. Node ids are the external ids of
/// the given network.
pub fn od_from_csv<R: Read>(reader: R, net: &RoadNetwork) -> Result<OdMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut entries = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let record = idx + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line: record,
            message: e.to_string(),
        })?;
        let get = |i: usize, name: &str| {
            rec.get(i)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Parse {
                    line: record,
                    message: format!("missing field `{name}`"),
                })
        };
        let origin_ext: i64 = get(0, "origin")?.parse().map_err(|_| Error::Parse {
            line: record,
            message: "invalid origin".into(),
        })?;
        let dest_ext: i64 = get(1, "destination")?.parse().map_err(|_| Error::Parse {
            line: record,
            message: "invalid destination".into(),
        })?;
        let weight: f64 = get(2, "weight")?.parse().map_err(|_| Error::Parse {
            line: record,
            message: "invalid weight".into(),
        })?;
        let resolve = |ext: i64| {
            net.resolve_external_node(ext).ok_or_else(|| {
                Error::Validation(format!("OD record {record} references unknown node id {ext}"))
            })
        };
        entries.push(OdEntry {
            origin: resolve(origin_ext)?,
            destination: resolve(dest_ext)?,
            weight,
        });
    }
    OdMatrix::new(entries)
}

pub fn load_od<P: AsRef<std::path::Path>>(path: P, net: &RoadNetwork) -> Result<OdMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    od_from_csv(std::io::BufReader::new(file), net)
}

/// One trip to be routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: u64,
    pub origin: NodeId,
    pub destination: NodeId,
    pub vclass: VehicleClass,
}

/// An ordered, immutable agent population.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    agents: Vec<Agent>,
    av_fraction: f64,
    seed: u64,
}

// Stream separation between OD sampling and the AV priority permutation.
const PRIORITY_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Number of AV agents for a fraction: round-half-up of `f * n`.
pub fn av_count(n: usize, av_fraction: f64) -> usize {
    (av_fraction * n as f64 + 0.5).floor() as usize
}

fn priority_ranks(n: usize, seed: u64) -> Vec<u32> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PRIORITY_SEED_SALT);
    order.shuffle(&mut rng);
    // rank[agent] = position of the agent in the shuffled priority order
    let mut rank = vec![0u32; n];
    for (pos, &agent) in order.iter().enumerate() {
        rank[agent as usize] = pos as u32;
    }
    rank
}

/// Samples `n` agents with OD pairs drawn proportionally to the matrix
/// weights and labels `round(av_fraction * n)` of them AV.
pub fn generate_population(
    od: &OdMatrix,
    n: usize,
    av_fraction: f64,
    seed: u64,
) -> Result<Population> {
    if n == 0 {
        return Err(Error::Validation("population size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&av_fraction) {
        return Err(Error::Domain(format!(
            "av_fraction must be within [0, 1], got {av_fraction}"
        )));
    }
    let weights: Vec<f64> = od.entries().iter().map(|e| e.weight).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Validation(format!("invalid OD weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks = priority_ranks(n, seed);
    let cutoff = av_count(n, av_fraction) as u32;
    let agents = (0..n)
        .map(|i| {
            let entry = od.entries()[dist.sample(&mut rng)];
            Agent {
                id: i as u64,
                origin: entry.origin,
                destination: entry.destination,
                vclass: if ranks[i] < cutoff {
                    VehicleClass::Av
                } else {
                    VehicleClass::Cv
                },
            }
        })
        .collect();
    Ok(Population {
        agents,
        av_fraction,
        seed,
    })
}

/// Relabels vehicle classes for a new AV fraction, leaving OD pairs and
/// ordering untouched. AV sets are nested across increasing fractions
/// because membership follows the fixed seed-derived priority order.
pub fn reclass_population(pop: &Population, new_av_fraction: f64) -> Result<Population> {
    if !(0.0..=1.0).contains(&new_av_fraction) {
        return Err(Error::Domain(format!(
            "av_fraction must be within [0, 1], got {new_av_fraction}"
        )));
    }
    let n = pop.agents.len();
    let ranks = priority_ranks(n, pop.seed);
    let cutoff = av_count(n, new_av_fraction) as u32;
    let agents = pop
        .agents
        .iter()
        .map(|a| Agent {
            vclass: if ranks[a.id as usize] < cutoff {
                VehicleClass::Av
            } else {
                VehicleClass::Cv
            },
            ..*a
        })
        .collect();
    Ok(Population {
        agents,
        av_fraction: new_av_fraction,
        seed: pop.seed,
    })
}

impl Population {
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn av_fraction(&self) -> f64 {
        self.av_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count_of(&self, class: VehicleClass) -> usize {
        self.agents.iter().filter(|a| a.vclass == class).count()
    }

    /// Content hash over agents, labels and seed. Two assignments may only
    /// be compared when their populations carry the same fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.av_fraction.to_le_bytes());
        for a in &self.agents {
            hasher.update(a.origin.0.to_le_bytes());
            hasher.update(a.destination.0.to_le_bytes());
            hasher.update([match a.vclass {
                VehicleClass::Av => 1u8,
                VehicleClass::Cv => 0u8,
            }]);
        }
        let digest = hasher.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Debug dump: `agent_id,origin,destination,class` with external node ids.
pub fn population_to_csv<W: Write>(pop: &Population, net: &RoadNetwork, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["agent_id", "origin", "destination", "class"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for a in pop.agents() {
        wtr.write_record(&[
            a.id.to_string(),
            net.node_external_id(a.origin).to_string(),
            net.node_external_id(a.destination).to_string(),
            a.vclass.as_str().to_string(),
        ])
        .map_err(|e| Error::Validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
