//! Per-technology traffic statistics from classified bursts.

pub mod cdf;
pub mod stats;

pub use cdf::{ks_distance, EmpiricalCdf};
pub use stats::{interarrivals, ks_sweep, label_traffic_stats, ClassifiedBurst, KsSweep, TrafficOutcome, TrafficStats};
