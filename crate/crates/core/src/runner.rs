//! Sweep orchestration: runs both lane policies over an AV-percentage grid
//! on one shared demand and emits the comparison tables.
//!
//! One population is generated up front and relabeled per cell, so every
//! cell of a sweep sees the exact same trips and cross-cell differences come
//! from the lane policy and the AV share alone. Cells are independent jobs;
//! the optional parallel mode produces byte-identical reports because each
//! cell is deterministic and results are assembled in configuration order.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{assign_incremental, AssignmentConfig, RouteAssignment};
use crate::cost::{FuelModelParams, HeadwayConfig};
use crate::demand::{generate_population, load_od, reclass_population, Population};
use crate::error::{Error, Result};
use crate::metrics::{
    class_metrics, demand_delta, segment_flows, throughput_by_class, ClassMetrics, DemandDelta,
};
use crate::network::{
    classify_links, load_network, transform_av_lane_default, ClassPartition, LinkId, RoadClass,
    RoadNetwork,
};

/// Lane policy under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    WithAvLane,
    NoAvLane,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::WithAvLane => "with_av_lane",
            Scenario::NoAvLane => "no_av_lane",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_av_percents() -> Vec<u32> {
    (0..=100).step_by(10).collect()
}

fn default_headways_av() -> Vec<f64> {
    vec![1.0]
}

fn default_headway_cv() -> f64 {
    1.8
}

fn default_scenarios() -> Vec<Scenario> {
    vec![Scenario::WithAvLane, Scenario::NoAvLane]
}

/// Full sweep specification; mirrors the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub network: PathBuf,
    pub od: PathBuf,
    pub agents: usize,
    #[serde(default = "default_av_percents")]
    pub av_percents: Vec<u32>,
    #[serde(default = "default_headways_av")]
    pub headways_av: Vec<f64>,
    #[serde(default = "default_headway_cv")]
    pub headway_cv: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    /// Run cells in parallel. Output is identical either way.
    #[serde(default)]
    pub parallel: bool,
    /// Highway links shorter than this keep all their lanes mixed.
    #[serde(default)]
    pub min_highway_length_m: f64,
    /// Also record per-segment flows for map plotting.
    #[serde(default)]
    pub per_link: bool,
    #[serde(default)]
    pub assignment: AssignmentConfig,
    #[serde(default)]
    pub fuel: FuelModelParams,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<SweepConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad sweep config: {e}")))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<SweepConfig> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::Config("agents must be >= 1".into()));
        }
        if self.av_percents.is_empty() {
            return Err(Error::Config("av_percents must not be empty".into()));
        }
        if let Some(p) = self.av_percents.iter().find(|&&p| p > 100) {
            return Err(Error::Config(format!("av_percent {p} outside [0, 100]")));
        }
        if self.headways_av.is_empty() {
            return Err(Error::Config("headways_av must not be empty".into()));
        }
        for &h in &self.headways_av {
            HeadwayConfig::new(h, self.headway_cv)?;
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("scenarios must not be empty".into()));
        }
        let mut dedup = self.scenarios.clone();
        dedup.dedup();
        if dedup.len() != self.scenarios.len() {
            return Err(Error::Config("duplicate scenario entries".into()));
        }
        self.assignment.validate()?;
        Ok(())
    }
}

/// Identifies one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub scenario: Scenario,
    pub av_percent: u32,
    pub h_av: f64,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}% AV, h_av={})",
            self.scenario, self.av_percent, self.h_av
        )
    }
}

/// Metrics and solver diagnostics for one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub key: CellKey,
    pub metrics: ClassMetrics,
    pub relative_gap: f64,
    pub converged: bool,
    pub population_fingerprint: String,
}

/// Everything a sweep produces, ready for CSV emission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub cells: Vec<CellReport>,
    /// `(av_percent, h_av)` -> with-lane vs no-lane demand difference.
    pub demand_deltas: Vec<(u32, f64, DemandDelta)>,
    /// Per-cell throughput change against the 0% cell of the same scenario
    /// and headway (present only when the grid contains 0%).
    pub throughput: Vec<(CellKey, BTreeMap<RoadClass, Option<f64>>)>,
    /// Per-segment flows per cell, when requested.
    pub per_link_flows: Option<Vec<(CellKey, BTreeMap<LinkId, f64>)>>,
    pub config: SweepConfig,
}

fn with_cell_context(err: Error, key: CellKey) -> Error {
    let prefix = format!("cell {key}");
    match err {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{prefix}: {message}"),
        },
        Error::Validation(m) => Error::Validation(format!("{prefix}: {m}")),
        Error::Transform(m) => Error::Transform(format!("{prefix}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{prefix}: {m}")),
        Error::Routing { agent, message } => Error::Routing {
            agent,
            message: format!("{prefix}: {message}"),
        },
        Error::Config(m) => Error::Config(format!("{prefix}: {m}")),
        other => other,
    }
}

struct CellOutcome {
    key: CellKey,
    assignment: RouteAssignment,
    metrics: ClassMetrics,
}

/// Runs the sweep and returns the report plus the per-cell assignments (in
/// cell order) for callers that need route-level detail.
pub fn run_sweep_detailed(
    cfg: &SweepConfig,
) -> Result<(SweepReport, Vec<(CellKey, RouteAssignment)>)> {
    cfg.validate()?;
    let base_net = load_network(&cfg.network)?;
    let od = load_od(&cfg.od, &base_net)?;
    od.validate_against(&base_net)?;
    let transformed = if cfg.scenarios.contains(&Scenario::WithAvLane) {
        Some(transform_av_lane_default(&base_net, cfg.min_highway_length_m)?)
    } else {
        None
    };
    let base_pop = generate_population(&od, cfg.agents, 0.0, cfg.seed)?;
    run_sweep_prepared(cfg, &base_net, transformed.as_ref(), &base_pop)
}

/// As [`run_sweep_detailed`] but on pre-built inputs; used by tests and by
/// callers that construct networks programmatically.
pub fn run_sweep_prepared(
    cfg: &SweepConfig,
    base_net: &RoadNetwork,
    transformed: Option<&RoadNetwork>,
    base_pop: &Population,
) -> Result<(SweepReport, Vec<(CellKey, RouteAssignment)>)> {
    cfg.validate()?;
    if cfg.scenarios.contains(&Scenario::WithAvLane) && transformed.is_none() {
        return Err(Error::Config(
            "with-av-lane scenario requires a transformed network".into(),
        ));
    }

    // One relabeled population per AV percentage, shared across scenarios.
    let mut pops: BTreeMap<u32, Population> = BTreeMap::new();
    for &percent in &cfg.av_percents {
        pops.entry(percent)
            .or_insert(reclass_population(base_pop, percent as f64 / 100.0)?);
    }

    let mut keys = Vec::new();
    for &scenario in &cfg.scenarios {
        for &percent in &cfg.av_percents {
            for &h_av in &cfg.headways_av {
                keys.push(CellKey {
                    scenario,
                    av_percent: percent,
                    h_av,
                });
            }
        }
    }

    let run_cell = |key: &CellKey| -> Result<CellOutcome> {
        let net = match key.scenario {
            Scenario::WithAvLane => transformed.unwrap(),
            Scenario::NoAvLane => base_net,
        };
        let pop = &pops[&key.av_percent];
        let acfg = AssignmentConfig {
            headways: HeadwayConfig::new(key.h_av, cfg.headway_cv)?,
            ..cfg.assignment
        };
        let assignment =
            assign_incremental(net, pop, &acfg).map_err(|e| with_cell_context(e, *key))?;
        let metrics = class_metrics(&assignment, pop, &cfg.fuel)
            .map_err(|e| with_cell_context(e, *key))?;
        Ok(CellOutcome {
            key: *key,
            assignment,
            metrics,
        })
    };

    let outcomes: Vec<Result<CellOutcome>> = if cfg.parallel {
        keys.par_iter().map(run_cell).collect()
    } else {
        keys.iter().map(run_cell).collect()
    };
    let mut cells = Vec::with_capacity(keys.len());
    for outcome in outcomes {
        cells.push(outcome?);
    }

    let classes = classify_links(base_net);
    let demand_deltas = compute_demand_deltas(cfg, &cells, base_net, transformed, &classes)?;
    let throughput = compute_throughput(cfg, &cells, base_net, transformed, &classes);
    let per_link_flows = cfg.per_link.then(|| {
        cells
            .iter()
            .map(|c| {
                let net = cell_net(c.key.scenario, base_net, transformed);
                (c.key, segment_flows(&c.assignment, net))
            })
            .collect()
    });

    let report = SweepReport {
        cells: cells
            .iter()
            .map(|c| CellReport {
                key: c.key,
                metrics: c.metrics,
                relative_gap: c.assignment.relative_gap(),
                converged: c.assignment.converged(),
                population_fingerprint: c.assignment.population_fingerprint().to_string(),
            })
            .collect(),
        demand_deltas,
        throughput,
        per_link_flows,
        config: cfg.clone(),
    };
    let assignments = cells.into_iter().map(|c| (c.key, c.assignment)).collect();
    Ok((report, assignments))
}

/// Runs the sweep, keeping only the report.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep_detailed(cfg).map(|(report, _)| report)
}

fn cell_net<'a>(
    scenario: Scenario,
    base: &'a RoadNetwork,
    transformed: Option<&'a RoadNetwork>,
) -> &'a RoadNetwork {
    match scenario {
        Scenario::WithAvLane => transformed.unwrap(),
        Scenario::NoAvLane => base,
    }
}

fn find_cell<'a>(cells: &'a [CellOutcome], key: &CellKey) -> Option<&'a CellOutcome> {
    cells
        .iter()
        .find(|c| c.key.scenario == key.scenario && c.key.av_percent == key.av_percent && c.key.h_av == key.h_av)
}

fn compute_demand_deltas(
    cfg: &SweepConfig,
    cells: &[CellOutcome],
    base_net: &RoadNetwork,
    transformed: Option<&RoadNetwork>,
    classes: &ClassPartition,
) -> Result<Vec<(u32, f64, DemandDelta)>> {
    let both = cfg.scenarios.contains(&Scenario::WithAvLane)
        && cfg.scenarios.contains(&Scenario::NoAvLane);
    if !both {
        return Ok(Vec::new());
    }
    let mut deltas = Vec::new();
    for &percent in &cfg.av_percents {
        for &h_av in &cfg.headways_av {
            let with = find_cell(
                cells,
                &CellKey {
                    scenario: Scenario::WithAvLane,
                    av_percent: percent,
                    h_av,
                },
            )
            .expect("configured cell present");
            let without = find_cell(
                cells,
                &CellKey {
                    scenario: Scenario::NoAvLane,
                    av_percent: percent,
                    h_av,
                },
            )
            .expect("configured cell present");
            let delta = demand_delta(
                &with.assignment,
                transformed.unwrap(),
                &without.assignment,
                base_net,
                classes,
            )?;
            deltas.push((percent, h_av, delta));
        }
    }
    Ok(deltas)
}

fn compute_throughput(
    cfg: &SweepConfig,
    cells: &[CellOutcome],
    base_net: &RoadNetwork,
    transformed: Option<&RoadNetwork>,
    classes: &ClassPartition,
) -> Vec<(CellKey, BTreeMap<RoadClass, Option<f64>>)> {
    if !cfg.av_percents.contains(&0) {
        return Vec::new();
    }
    let mut rows = Vec::new();
    for cell in cells {
        let baseline_key = CellKey {
            av_percent: 0,
            ..cell.key
        };
        let Some(baseline) = find_cell(cells, &baseline_key) else {
            continue;
        };
        let net = cell_net(cell.key.scenario, base_net, transformed);
        let change = throughput_by_class(
            &cell.assignment,
            net,
            &baseline.assignment,
            net,
            classes,
        );
        rows.push((cell.key, change));
    }
    rows
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    seed: u64,
    created_unix_ms: u128,
    population_fingerprints: Vec<&'a str>,
    config: &'a SweepConfig,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `summary.csv`, `demand_delta.csv`, `throughput.csv`, plot-ready
/// `series/*.csv` and `manifest.json` into `out_dir`.
///
/// All CSVs are byte-deterministic for a fixed report; only the manifest
/// carries a timestamp. The manifest is written atomically via a temp file so
/// an existing one is never left partially overwritten.
pub fn emit_report<P: AsRef<Path>>(report: &SweepReport, out_dir: P) -> Result<()> {
    if report.cells.is_empty() {
        return Err(Error::Config("refusing to emit an empty sweep report".into()));
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;

    write_summary(report, &dir.join("summary.csv"))?;
    write_demand_delta(report, &dir.join("demand_delta.csv"))?;
    write_throughput(report, &dir.join("throughput.csv"))?;
    write_series(report, &dir.join("series"))?;
    if let Some(per_link) = &report.per_link_flows {
        write_per_link(per_link, &dir.join("per_link_throughput.csv"))?;
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: report.config.seed,
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        population_fingerprints: report
            .cells
            .iter()
            .map(|c| c.population_fingerprint.as_str())
            .collect(),
        config: &report.config,
    };
    let tmp = dir.join("manifest.json.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, &manifest)
            .map_err(|e| Error::Validation(format!("manifest serialization failed: {e}")))?;
        f.flush()?;
    }
    fs::rename(&tmp, dir.join("manifest.json"))?;
    Ok(())
}

fn write_summary(report: &SweepReport, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record([
        "scenario",
        "av_percent",
        "h_av",
        "agents",
        "av_agents",
        "cv_agents",
        "avg_time_all_s",
        "avg_time_av_s",
        "avg_time_cv_s",
        "fuel_total_all_l",
        "fuel_total_av_l",
        "fuel_total_cv_l",
        "relative_gap",
        "converged",
    ])
    .map_err(|e| Error::Validation(e.to_string()))?;
    for cell in &report.cells {
        let m = &cell.metrics;
        wtr.write_record(&[
            cell.key.scenario.as_str().to_string(),
            cell.key.av_percent.to_string(),
            cell.key.h_av.to_string(),
            m.all.count.to_string(),
            m.av.map(|a| a.count).unwrap_or(0).to_string(),
            m.cv.map(|a| a.count).unwrap_or(0).to_string(),
            m.all.avg_time_s.to_string(),
            fmt_opt(m.av.map(|a| a.avg_time_s)),
            fmt_opt(m.cv.map(|a| a.avg_time_s)),
            m.all.fuel_total_l.to_string(),
            fmt_opt(m.av.map(|a| a.fuel_total_l)),
            fmt_opt(m.cv.map(|a| a.fuel_total_l)),
            cell.relative_gap.to_string(),
            cell.converged.to_string(),
        ])
        .map_err(|e| Error::Validation(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_demand_delta(report: &SweepReport, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["av_percent", "h_av", "road_class", "delta"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for (percent, h_av, delta) in &report.demand_deltas {
        for (class, value) in &delta.by_class {
            wtr.write_record(&[
                percent.to_string(),
                h_av.to_string(),
                class.as_str().to_string(),
                fmt_opt(*value),
            ])
            .map_err(|e| Error::Validation(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_throughput(report: &SweepReport, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["scenario", "av_percent", "h_av", "road_class", "change_vs_0"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for (key, by_class) in &report.throughput {
        for (class, value) in by_class {
            wtr.write_record(&[
                key.scenario.as_str().to_string(),
                key.av_percent.to_string(),
                key.h_av.to_string(),
                class.as_str().to_string(),
                fmt_opt(*value),
            ])
            .map_err(|e| Error::Validation(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_per_link(
    per_link: &[(CellKey, BTreeMap<LinkId, f64>)],
    path: &Path,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["scenario", "av_percent", "h_av", "segment_id", "flow"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for (key, flows) in per_link {
        for (segment, flow) in flows {
            wtr.write_record(&[
                key.scenario.as_str().to_string(),
                key.av_percent.to_string(),
                key.h_av.to_string(),
                segment.to_string(),
                flow.to_string(),
            ])
            .map_err(|e| Error::Validation(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// One file per metric: rows are AV percentages, one column per
/// (scenario, h_av) combination.
fn write_series(report: &SweepReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut combos: Vec<(Scenario, f64)> = Vec::new();
    for cell in &report.cells {
        let combo = (cell.key.scenario, cell.key.h_av);
        if !combos.contains(&combo) {
            combos.push(combo);
        }
    }
    let mut percents: Vec<u32> = report.cells.iter().map(|c| c.key.av_percent).collect();
    percents.sort_unstable();
    percents.dedup();

    type Extract = fn(&ClassMetrics) -> Option<f64>;
    let metrics: [(&str, Extract); 4] = [
        ("avg_time_all", |m| Some(m.all.avg_time_s)),
        ("avg_time_av", |m| m.av.map(|a| a.avg_time_s)),
        ("avg_time_cv", |m| m.cv.map(|a| a.avg_time_s)),
        ("fuel_total_all", |m| Some(m.all.fuel_total_l)),
    ];
    for (name, extract) in metrics {
        let mut wtr =
            csv::Writer::from_writer(fs::File::create(dir.join(format!("{name}.csv")))?);
        let mut header = vec!["av_percent".to_string()];
        header.extend(
            combos
                .iter()
                .map(|(s, h)| format!("{}_h{}", s.as_str(), h)),
        );
        wtr.write_record(&header)
            .map_err(|e| Error::Validation(e.to_string()))?;
        for &percent in &percents {
            let mut row = vec![percent.to_string()];
            for &(scenario, h_av) in &combos {
                let value = report
                    .cells
                    .iter()
                    .find(|c| {
                        c.key.scenario == scenario
                            && c.key.av_percent == percent
                            && c.key.h_av == h_av
                    })
                    .and_then(|c| extract(&c.metrics));
                row.push(fmt_opt(value));
            }
            wtr.write_record(&row)
                .map_err(|e| Error::Validation(e.to_string()))?;
        }
        wtr.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_grid, od_to_csv, west_east_od, GridConfig};
    use crate::network::save_network;

    fn tiny_sweep_config(dir: &Path) -> SweepConfig {
        let grid = GridConfig {
            rows: 4,
            cols: 4,
            ..GridConfig::default()
        };
        let net = generate_grid(&grid).unwrap();
        let net_path = dir.join("net.csv");
        save_network(&net, &net_path).unwrap();
        let od = west_east_od(&grid, &net).unwrap();
        let od_path = dir.join("od.csv");
        od_to_csv(&od, &net, fs::File::create(&od_path).unwrap()).unwrap();
        SweepConfig {
            network: net_path,
            od: od_path,
            agents: 200,
            av_percents: vec![0, 50, 100],
            headways_av: vec![1.0],
            headway_cv: 1.8,
            seed: 42,
            scenarios: vec![Scenario::WithAvLane, Scenario::NoAvLane],
            parallel: false,
            min_highway_length_m: 0.0,
            per_link: false,
            assignment: AssignmentConfig {
                batch_count: 10,
                max_passes: 6,
                ..AssignmentConfig::default()
            },
            fuel: FuelModelParams::default(),
        }
    }

    #[test]
    fn degenerate_single_cell_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep_config(dir.path());
        cfg.av_percents = vec![0];
        cfg.scenarios = vec![Scenario::NoAvLane];
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].key.av_percent, 0);
        assert!(report.demand_deltas.is_empty());
    }

    #[test]
    fn summary_row_count_is_grid_product() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep_config(dir.path());
        cfg.headways_av = vec![0.75, 1.0];
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(
            report.cells.len(),
            cfg.scenarios.len() * cfg.av_percents.len() * cfg.headways_av.len()
        );
    }

    #[test]
    fn populations_match_across_scenarios_per_percent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep_config(dir.path());
        let report = run_sweep(&cfg).unwrap();
        for &percent in &cfg.av_percents {
            let prints: Vec<&str> = report
                .cells
                .iter()
                .filter(|c| c.key.av_percent == percent)
                .map(|c| c.population_fingerprint.as_str())
                .collect();
            assert_eq!(prints.len(), 2);
            assert_eq!(prints[0], prints[1]);
        }
    }

    #[test]
    fn parallel_mode_matches_sequential() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep_config(dir.path());
        let sequential = run_sweep(&cfg).unwrap();
        cfg.parallel = true;
        let parallel = run_sweep(&cfg).unwrap();
        assert_eq!(sequential.cells, parallel.cells);
        assert_eq!(sequential.demand_deltas, parallel.demand_deltas);
        assert_eq!(sequential.throughput, parallel.throughput);
    }

    #[test]
    fn empty_scenarios_rejected_before_any_io() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep_config(dir.path());
        cfg.scenarios = vec![];
        assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))));
        let out = dir.path().join("out");
        assert!(!out.exists());
    }

    #[test]
    fn emit_rejects_empty_report_without_writing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep_config(dir.path());
        let mut report = run_sweep(&cfg).unwrap();
        report.cells.clear();
        let out = dir.path().join("out");
        assert!(emit_report(&report, &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn emitted_files_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep_config(dir.path());
        let report_a = run_sweep(&cfg).unwrap();
        let report_b = run_sweep(&cfg).unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        emit_report(&report_a, &out_a).unwrap();
        emit_report(&report_b, &out_b).unwrap();
        for name in ["summary.csv", "demand_delta.csv", "throughput.csv"] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
        for name in [
            "avg_time_all.csv",
            "avg_time_av.csv",
            "avg_time_cv.csv",
            "fuel_total_all.csv",
        ] {
            let a = fs::read(out_a.join("series").join(name)).unwrap();
            let b = fs::read(out_b.join("series").join(name)).unwrap();
            assert_eq!(a, b, "series/{name} differs between runs");
        }
        assert!(out_a.join("manifest.json").exists());
    }

    #[test]
    fn per_link_flows_are_emitted_on_request() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep_config(dir.path());
        cfg.av_percents = vec![0, 100];
        cfg.per_link = true;
        let report = run_sweep(&cfg).unwrap();
        let flows = report.per_link_flows.as_ref().unwrap();
        assert_eq!(flows.len(), report.cells.len());
        let out = dir.path().join("out");
        emit_report(&report, &out).unwrap();
        let text = fs::read_to_string(out.join("per_link_throughput.csv")).unwrap();
        assert!(text.starts_with("scenario,av_percent,h_av,segment_id,flow"));
        assert!(text.lines().count() > 1);
    }

    #[test]
    fn toml_roundtrip() {
        let text = r#"
            network = "net.csv"
            od = "od.csv"
            agents = 1000
            av_percents = [0, 50, 100]
            seed = 7
            scenarios = ["with-av-lane", "no-av-lane"]

            [assignment]
            batch_count = 10
            max_passes = 4
            capacity_mix = "system_level"

            [fuel]
            idle_rate_l_per_h = 0.6
            distance_rate_l_per_km = 0.08
        "#;
        let cfg = SweepConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.agents, 1000);
        assert_eq!(cfg.av_percents, vec![0, 50, 100]);
        assert_eq!(cfg.headways_av, vec![1.0]); // default
        assert_eq!(cfg.assignment.batch_count, 10);
        assert_eq!(cfg.assignment.gap_tolerance, 1e-3); // default
        assert_eq!(
            cfg.assignment.capacity_mix,
            crate::assignment::CapacityMixMode::SystemLevel
        );
        assert_eq!(cfg.fuel.idle_rate_l_per_h, 0.6);
        assert_eq!(cfg.scenarios, vec![Scenario::WithAvLane, Scenario::NoAvLane]);
        cfg.validate().unwrap();
    }
}
