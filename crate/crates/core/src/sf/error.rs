use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::overlap::gaussian_overlap;
use super::variation::{check_range, coupling_profile, reading_dbm, span, variation_from_profile, OffsetRange, Variation};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::signal::{MaskTable, NoiseModel, Spectrum};

/// Error values within this distance of the minimum count as optimal.
pub const NEAR_OPTIMAL: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfErrorGrid {
    pub j: i64,
    pub gamma_t_db: f64,
    pub grid_a: Vec<f64>,
    pub grid_b: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    /// Overlap per INR pair, `similarity[m][n]`.
    pub similarity: Vec<Vec<f64>>,
    pub error: f64,
}

fn pair_similarity(a: &Variation, b: &Variation) -> Result<f64> {
    match (a.stats(), b.stats()) {
        (Some(a), Some(b)) => gaussian_overlap(a.mean, a.sigma(), b.mean, b.sigma()),
        // invisible bursts cannot be told apart
        _ => Ok(1.0),
    }
}

/// SF error between shapes `x_a` and `x_b` for shift `j`.
///
/// `weights` defaults to all ones. A pair where either side has no retained
/// offsets contributes a similarity of 1.
#[allow(clippy::too_many_arguments)]
pub fn sf_error(
    x_a: &Spectrum,
    x_b: &Spectrum,
    h: &Spectrum,
    j: i64,
    grid_a: &[f64],
    grid_b: &[f64],
    weights: Option<&[Vec<f64>]>,
    gamma_t_db: f64,
    noise: &NoiseModel,
    range: OffsetRange,
) -> Result<SfErrorGrid> {
    if grid_a.is_empty() || grid_b.is_empty() {
        return Err(Error::invalid("INR grids must be non-empty"));
    }
    let weights = match weights {
        Some(w) => {
            if w.len() != grid_a.len() || w.iter().any(|r| r.len() != grid_b.len()) {
                return Err(Error::invalid("weight matrix does not match the INR grids"));
            }
            if w.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("weights must lie in [0, 1]"));
            }
            w.to_vec()
        }
        None => vec![vec![1.0; grid_b.len()]; grid_a.len()],
    };
    check_range(range)?;
    let (lo, hi) = span(range, j);
    let pa = coupling_profile(x_a, h, range.step_mhz, lo, hi)?;
    let pb = coupling_profile(x_b, h, range.step_mhz, lo, hi)?;
    let stats = |p: &[f64], grid: &[f64]| -> Vec<Variation> {
        grid.iter()
            .map(|&g| variation_from_profile(p, lo, j, g, gamma_t_db, noise, range))
            .collect()
    };
    let va = stats(&pa, grid_a);
    let vb = stats(&pb, grid_b);
    let mut similarity = vec![vec![0.0; grid_b.len()]; grid_a.len()];
    let mut total = 0.0;
    for (m, a) in va.iter().enumerate() {
        for (n, b) in vb.iter().enumerate() {
            let s = pair_similarity(a, b)?;
            similarity[m][n] = s;
            total += weights[m][n] * s;
        }
    }
    let error = (total / (grid_a.len() * grid_b.len()) as f64).clamp(0.0, 1.0);
    Ok(SfErrorGrid {
        j,
        gamma_t_db,
        grid_a: grid_a.to_vec(),
        grid_b: grid_b.to_vec(),
        weights,
        similarity,
        error,
    })
}

/// INR values of `grid` at which an emission reads above `P_T + γ_T` when
/// tuned to its center, i.e. the part of the grid that survives thresholding.
pub fn visible_grid(grid: &[f64], gamma_t_db: f64, noise: &NoiseModel) -> Vec<f64> {
    let gate = noise.threshold_dbm() + gamma_t_db;
    grid.iter().copied().filter(|&g| reading_dbm(0.0, g, noise) > gate).collect()
}

/// `Â = A0 + (1 − A0)(1 − E)`.
pub fn mia_upper_bound(a0: f64, error: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a0) || !(0.0..=1.0).contains(&error) {
        return Err(Error::invalid(format!("A0 = {a0} and E = {error} must lie in [0, 1]")));
    }
    Ok(a0 + (1.0 - a0) * (1.0 - error))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub a: Label,
    pub b: Label,
    pub gamma_t_db: f64,
    pub j: i64,
    pub shift_mhz: f64,
    pub error: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub rows: Vec<ShiftRow>,
}

impl ShiftReport {
    pub fn curve(&self, a: Label, b: Label, gamma_t_db: f64) -> Vec<(i64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.a == a && r.b == b && r.gamma_t_db == gamma_t_db)
            .map(|r| (r.j, r.error))
            .collect()
    }

    pub fn flagged(&self, a: Label, b: Label, gamma_t_db: f64) -> Option<&ShiftRow> {
        self.rows
            .iter()
            .find(|r| r.flagged && r.a == a && r.b == b && r.gamma_t_db == gamma_t_db)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label_a,label_b,gamma_t_db,j,shift_mhz,error,flagged\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.6},{}",
                r.a.code(),
                r.b.code(),
                r.gamma_t_db,
                r.j,
                r.shift_mhz,
                r.error,
                u8::from(r.flagged)
            );
        }
        s
    }
}

/// SF error curves over shifts `js` for each label pair and threshold.
///
/// Both INR grids are `inr_grid` restricted to the values visible at each
/// `γ_T`. Within a curve the smallest `j` whose error is within
/// [`NEAR_OPTIMAL`] of the curve minimum is flagged.
pub fn shift_selection_report(
    pairs: &[(Label, Label)],
    masks: &MaskTable,
    h: &Spectrum,
    js: &[i64],
    gamma_ts: &[f64],
    inr_grid: &[f64],
    noise: &NoiseModel,
    range: OffsetRange,
) -> Result<ShiftReport> {
    let mut rows = Vec::new();
    for &(a, b) in pairs {
        let (xa, xb) = (masks.shape(a), masks.shape(b));
        for &gt in gamma_ts {
            let ga = visible_grid(inr_grid, gt, noise);
            let gb = ga.clone();
            let start = rows.len();
            for &j in js {
                let error = if ga.is_empty() || gb.is_empty() {
                    1.0
                } else {
                    sf_error(&xa, &xb, h, j, &ga, &gb, None, gt, noise, range)?.error
                };
                rows.push(ShiftRow {
                    a,
                    b,
                    gamma_t_db: gt,
                    j,
                    shift_mhz: j as f64 * range.step_mhz,
                    error,
                    flagged: false,
                });
            }
            let curve = &mut rows[start..];
            let min = curve.iter().map(|r| r.error).fold(f64::INFINITY, f64::min);
            if let Some(r) = curve
                .iter_mut()
                .filter(|r| r.error <= min + NEAR_OPTIMAL)
                .min_by_key(|r| r.j.abs())
            {
                r.flagged = true;
            }
        }
    }
    Ok(ShiftReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_arithmetic() {
        assert!((mia_upper_bound(0.8, 0.5).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(mia_upper_bound(1.0, 0.3).unwrap(), 1.0);
        assert_eq!(mia_upper_bound(0.4, 1.0).unwrap(), 0.4);
        assert!(mia_upper_bound(1.2, 0.3).is_err());
        assert!(mia_upper_bound(0.2, -0.1).is_err());
    }
}
