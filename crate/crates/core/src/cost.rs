//! Mixed-traffic lane capacity, BPR traverse times and fuel consumption.
//!
//! All functions here are pure; they can be called concurrently without
//! restriction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LanePolicy, Link};

/// Headway times (seconds to the leading vehicle) per vehicle class.
/// Autonomous vehicles never require more headway than conventional ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadwayConfig {
    pub h_av: f64,
    pub h_cv: f64,
}

impl HeadwayConfig {
    pub const H_AV_RANGE: (f64, f64) = (0.3, 3.0);
    pub const H_CV_RANGE: (f64, f64) = (0.3, 5.0);

    pub fn new(h_av: f64, h_cv: f64) -> Result<HeadwayConfig> {
        if !(Self::H_AV_RANGE.0..=Self::H_AV_RANGE.1).contains(&h_av) {
            return Err(Error::Domain(format!(
                "h_av must be within [{}, {}] s, got {h_av}",
                Self::H_AV_RANGE.0,
                Self::H_AV_RANGE.1
            )));
        }
        if !(Self::H_CV_RANGE.0..=Self::H_CV_RANGE.1).contains(&h_cv) {
            return Err(Error::Domain(format!(
                "h_cv must be within [{}, {}] s, got {h_cv}",
                Self::H_CV_RANGE.0,
                Self::H_CV_RANGE.1
            )));
        }
        if h_av > h_cv {
            return Err(Error::Domain(format!(
                "h_av ({h_av}) must not exceed h_cv ({h_cv})"
            )));
        }
        Ok(HeadwayConfig { h_av, h_cv })
    }
}

impl Default for HeadwayConfig {
    fn default() -> Self {
        HeadwayConfig {
            h_av: 1.0,
            h_cv: 1.8,
        }
    }
}

/// Per-link flow state after an assignment step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub flow_av: u32,
    pub flow_cv: u32,
    /// AV share used for the capacity computation. For zero-flow links this
    /// is the ambient scenario AV fraction, see [`link_p_av`].
    pub p_av: f64,
    /// Vehicles per hour per lane.
    pub capacity_per_lane: f64,
    /// Traverse time in seconds.
    pub travel_time: f64,
}

impl LinkState {
    pub fn total_flow(&self) -> u32 {
        self.flow_av + self.flow_cv
    }
}

/// Simple idle-plus-running fuel model. The coefficients are artifact
/// configuration, not measured values; only qualitative trends should be
/// asserted against them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelModelParams {
    /// Liters per hour spent traveling.
    pub idle_rate_l_per_h: f64,
    /// Liters per kilometer driven.
    pub distance_rate_l_per_km: f64,
}

impl FuelModelParams {
    pub fn new(idle_rate_l_per_h: f64, distance_rate_l_per_km: f64) -> Result<FuelModelParams> {
        for (v, name) in [
            (idle_rate_l_per_h, "idle_rate_l_per_h"),
            (distance_rate_l_per_km, "distance_rate_l_per_km"),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(FuelModelParams {
            idle_rate_l_per_h,
            distance_rate_l_per_km,
        })
    }
}

impl Default for FuelModelParams {
    fn default() -> Self {
        FuelModelParams {
            idle_rate_l_per_h: 0.5,
            distance_rate_l_per_km: 0.07,
        }
    }
}

/// Lane capacity in vehicles per hour per lane for a traffic mix with AV
/// share `p_av`: `3600 / (h_av * p_av + h_cv * (1 - p_av))`.
///
/// Strictly increasing in `p_av` whenever `h_av < h_cv`.
pub fn mixed_capacity(p_av: f64, hw: &HeadwayConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_av) {
        return Err(Error::Domain(format!(
            "p_av must be within [0, 1], got {p_av}"
        )));
    }
    Ok(mixed_capacity_unchecked(p_av, hw))
}

/// As [`mixed_capacity`] for callers that guarantee `p_av` is in range.
#[inline]
pub fn mixed_capacity_unchecked(p_av: f64, hw: &HeadwayConfig) -> f64 {
    3600.0 / (hw.h_av * p_av + hw.h_cv * (1.0 - p_av))
}

/// BPR traverse time in seconds for `total_flow` vehicles over a period of
/// `period_h` hours: `(l/v) * (1 + alpha * (F / (C * w * t))^beta)` with the
/// capacity taken from [`mixed_capacity`] at the link's AV share.
///
/// Returns exactly the free-flow time when `total_flow` is 0, and exactly 0
/// for connector links (their length is 0).
pub fn bpr_time(
    link: &Link,
    total_flow: f64,
    p_av: f64,
    hw: &HeadwayConfig,
    period_h: f64,
) -> f64 {
    debug_assert!(total_flow >= 0.0);
    debug_assert!(period_h > 0.0);
    let free_flow = link.free_flow_time();
    if total_flow == 0.0 || link.lane_policy == LanePolicy::Connector {
        return free_flow;
    }
    let capacity = mixed_capacity_unchecked(p_av, hw);
    let saturation = total_flow / (capacity * link.lanes as f64 * period_h);
    free_flow * (1.0 + link.alpha * saturation.powf(link.beta))
}

/// AV share of a link given its class flows. Zero-flow links fall back to
/// the ambient scenario AV fraction so the capacity stays defined.
#[inline]
pub fn link_p_av(flow_av: u32, flow_cv: u32, ambient_av_fraction: f64) -> f64 {
    let total = flow_av + flow_cv;
    if total == 0 {
        ambient_av_fraction
    } else {
        flow_av as f64 / total as f64
    }
}

/// Fuel burned by one trip: an idle term linear in travel time plus a
/// running term linear in distance.
pub fn fuel_for_trip(distance_m: f64, travel_time_s: f64, params: &FuelModelParams) -> f64 {
    debug_assert!(distance_m >= 0.0);
    debug_assert!(travel_time_s >= 0.0);
    params.idle_rate_l_per_h * (travel_time_s / 3600.0)
        + params.distance_rate_l_per_km * (distance_m / 1000.0)
}
