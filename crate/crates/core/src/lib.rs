//! Macroscopic traffic assignment with dedicated AV-lane policies.
//!
//! The crate models a road network as a directed multigraph whose link
//! traverse times follow the BPR volume-delay function, with lane capacity
//! driven by the headway mix of autonomous and conventional vehicles. It can
//! reserve one highway lane for autonomous vehicles via a graph
//! transformation, route an agent population to user equilibrium with
//! class-restricted shortest paths, and sweep the AV share from 0 to 100%
//! under both lane policies. A closed-form solver for the single-road case
//! acts as an independent oracle for the numeric pipeline.
//!
//! Modules:
//! - [`network`]: graph model, file formats, AV-lane transformation.
//! - [`cost`]: capacity, BPR times, fuel.
//! - [`demand`]: OD matrices and reproducible agent populations.
//! - [`routing`]: class-restricted shortest paths.
//! - [`assignment`]: incremental user-equilibrium solver.
//! - [`analytic`]: closed-form two-lane equilibrium and saturation threshold.
//! - [`metrics`]: travel-time/fuel/throughput/demand evaluation.
//! - [`runner`]: sweep orchestration and CSV reports.
//! - [`grid`]: synthetic benchmark networks.

pub mod analytic;
pub mod assignment;
pub mod cost;
pub mod demand;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod network;
pub mod routing;
pub mod runner;

pub use error::{Error, Result};
