use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cdf::{ks_distance, EmpiricalCdf};
use crate::error::{Error, Result};
use crate::label::Class;

/// A detected burst after classification. Bursts too short for a complete
/// feature vector carry no label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedBurst {
    pub start_us: f64,
    pub oat_us: f64,
    /// Mean power over the burst, dBm.
    pub mean_dbm: f64,
    pub channel: u8,
    pub label: Option<Class>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub label: Class,
    pub channel: u8,
    pub min_rssi_dbm: f64,
    pub min_oat_us: f64,
    pub count: usize,
    /// Absent for hopping technologies and for a single burst.
    pub it_cdf: Option<EmpiricalCdf>,
    pub oat_cdf: EmpiricalCdf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrafficOutcome {
    Stats(TrafficStats),
    /// No burst passed the filters.
    Empty,
}

impl TrafficOutcome {
    pub fn stats(&self) -> Option<&TrafficStats> {
        match self {
            TrafficOutcome::Stats(s) => Some(s),
            TrafficOutcome::Empty => None,
        }
    }
}

/// Differences between consecutive start times, after sorting.
pub fn interarrivals(starts: &[f64]) -> Vec<f64> {
    let mut s = starts.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).map(|w| w[1] - w[0]).collect()
}

fn retained<'a>(bursts: &'a [ClassifiedBurst], label: Class, min_rssi: f64, min_oat: f64) -> impl Iterator<Item = &'a ClassifiedBurst> {
    bursts
        .iter()
        .filter(move |b| b.label == Some(label) && b.mean_dbm >= min_rssi && b.oat_us >= min_oat)
}

/// Traffic statistics of the bursts classified as `label` on one sensing
/// channel, keeping those with mean power `≥ min_rssi` and OAT `≥ min_oat`.
pub fn label_traffic_stats(
    bursts: &[ClassifiedBurst],
    label: Class,
    channel: u8,
    min_rssi_dbm: f64,
    min_oat_us: f64,
) -> Result<TrafficOutcome> {
    let kept: Vec<&ClassifiedBurst> = retained(bursts, label, min_rssi_dbm, min_oat_us)
        .filter(|b| b.channel == channel)
        .collect();
    if kept.is_empty() {
        return Ok(TrafficOutcome::Empty);
    }
    let oats: Vec<f64> = kept.iter().map(|b| b.oat_us).collect();
    // hopping sources land on a sensing channel only now and then
    let hopping = matches!(label, Class::B | Class::L);
    let starts: Vec<f64> = kept.iter().map(|b| b.start_us).collect();
    let it = interarrivals(&starts);
    let it_cdf = if hopping || it.is_empty() { None } else { Some(EmpiricalCdf::new(&it)?) };
    Ok(TrafficOutcome::Stats(TrafficStats {
        label,
        channel,
        min_rssi_dbm,
        min_oat_us,
        count: kept.len(),
        it_cdf,
        oat_cdf: EmpiricalCdf::new(&oats)?,
    }))
}

/// K-S distance between the filtered IT-CDF of `label` and a reference, over
/// a grid of minimum power and minimum OAT.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsSweep {
    pub rssi_grid: Vec<f64>,
    pub oat_grid: Vec<f64>,
    /// `distance[r][o]`; `None` where fewer than two bursts survive.
    pub distance: Vec<Vec<Option<f64>>>,
    /// Smallest distance; ties go to the most selective cell (highest OAT
    /// threshold, then highest power threshold).
    pub argmin: Option<(usize, usize)>,
}

impl KsSweep {
    pub fn best(&self) -> Option<(f64, f64, f64)> {
        self.argmin
            .map(|(r, o)| (self.rssi_grid[r], self.oat_grid[o], self.distance[r][o].unwrap()))
    }

    /// Matrix with power thresholds down the rows and OAT thresholds across;
    /// empty cells read `NaN`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("min_rssi_dbm");
        for o in &self.oat_grid {
            let _ = write!(s, ",{o}");
        }
        s.push('\n');
        for (r, row) in self.rssi_grid.iter().zip(&self.distance) {
            let _ = write!(s, "{r}");
            for d in row {
                match d {
                    Some(d) => {
                        let _ = write!(s, ",{d:.6}");
                    }
                    None => s.push_str(",NaN"),
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn ks_sweep(
    bursts: &[ClassifiedBurst],
    label: Class,
    reference: &EmpiricalCdf,
    rssi_grid: &[f64],
    oat_grid: &[f64],
) -> Result<KsSweep> {
    if rssi_grid.is_empty() || oat_grid.is_empty() {
        return Err(Error::invalid("sweep grids must be non-empty"));
    }
    let mut distance = vec![vec![None; oat_grid.len()]; rssi_grid.len()];
    let mut argmin: Option<(usize, usize, f64)> = None;
    for (r, &min_rssi) in rssi_grid.iter().enumerate() {
        for (o, &min_oat) in oat_grid.iter().enumerate() {
            let starts: Vec<f64> = retained(bursts, label, min_rssi, min_oat).map(|b| b.start_us).collect();
            let it = interarrivals(&starts);
            if it.is_empty() {
                continue;
            }
            let d = ks_distance(&EmpiricalCdf::new(&it)?, reference);
            distance[r][o] = Some(d);
            let better = match argmin {
                None => true,
                Some((br, bo, bd)) => {
                    d < bd || (d == bd && (min_oat, min_rssi) > (oat_grid[bo], rssi_grid[br]))
                }
            };
            if better {
                argmin = Some((r, o, d));
            }
        }
    }
    Ok(KsSweep {
        rssi_grid: rssi_grid.to_vec(),
        oat_grid: oat_grid.to_vec(),
        distance,
        argmin: argmin.map(|(r, o, _)| (r, o)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(start: f64, oat: f64, label: Class) -> ClassifiedBurst {
        ClassifiedBurst {
            start_us: start,
            oat_us: oat,
            mean_dbm: -60.0,
            channel: 15,
            label: Some(label),
        }
    }

    #[test]
    fn periodic_stream_is_a_step() {
        let bursts: Vec<_> = (0..20).rev().map(|k| burst(k as f64 * 60_000.0, 800.0, Class::Z)).collect();
        let s = label_traffic_stats(&bursts, Class::Z, 15, -100.0, 0.0).unwrap();
        let it = s.stats().unwrap().it_cdf.as_ref().unwrap();
        assert_eq!(it.breakpoints(), &[60_000.0]);
    }

    #[test]
    fn oat_filter_empties() {
        let bursts = vec![burst(0.0, 400.0, Class::W), burst(1000.0, 500.0, Class::W)];
        let s = label_traffic_stats(&bursts, Class::W, 15, -100.0, 600.0).unwrap();
        assert_eq!(s, TrafficOutcome::Empty);
    }

    #[test]
    fn hopping_has_no_it() {
        let bursts = vec![burst(0.0, 400.0, Class::B), burst(1000.0, 500.0, Class::B)];
        let s = label_traffic_stats(&bursts, Class::B, 15, -100.0, 0.0).unwrap();
        assert!(s.stats().unwrap().it_cdf.is_none());
    }

    #[test]
    fn all_pass_cell_matches_self() {
        let bursts: Vec<_> = [0.0, 700.0, 2100.0, 2500.0].iter().map(|&t| burst(t, 400.0, Class::W)).collect();
        let reference = EmpiricalCdf::new(&interarrivals(&[0.0, 700.0, 2100.0, 2500.0])).unwrap();
        let sw = ks_sweep(&bursts, Class::W, &reference, &[-100.0, -50.0], &[0.0, 500.0]).unwrap();
        assert_eq!(sw.distance.len(), 2);
        assert_eq!(sw.distance[0].len(), 2);
        assert_eq!(sw.distance[0][0], Some(0.0));
        assert_eq!(sw.distance[1][0], None);
        assert_eq!(sw.argmin, Some((0, 0)));
        assert!(sw.to_csv().contains("NaN"));
    }
}
