use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::spectrum::{db_to_lin, lin_to_db, received_power};
use crate::signal::{NoiseModel, Spectrum};

/// Floor on the standard deviation of a variation sample.
pub const SIGMA_FLOOR_DB: f64 = 1e-6;

/// Tuning offsets `iδ_f` for `i` in `[-half_width, half_width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetRange {
    pub half_width: i64,
    pub step_mhz: f64,
}

impl Default for OffsetRange {
    fn default() -> Self {
        OffsetRange {
            half_width: 40,
            step_mhz: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationStats {
    pub j: i64,
    pub inr_db: f64,
    pub gamma_t_db: f64,
    /// Offsets `i` that passed the threshold, with `v(i)` alongside.
    pub offsets: Vec<i64>,
    pub v: Vec<f64>,
    pub mean: f64,
    pub var: f64,
}

impl VariationStats {
    /// Standard deviation, floored.
    pub fn sigma(&self) -> f64 {
        self.var.sqrt().max(SIGMA_FLOOR_DB)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variation {
    Stats(VariationStats),
    /// No offset read above `P_T + γ_T`.
    Empty,
}

impl Variation {
    pub fn stats(&self) -> Option<&VariationStats> {
        match self {
            Variation::Stats(s) => Some(s),
            Variation::Empty => None,
        }
    }
}

/// Coupling `C(iδ_f)` in dB relative to zero offset, for `i` in `lo..=hi`.
pub fn coupling_profile(x: &Spectrum, h: &Spectrum, step_mhz: f64, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let peak = received_power(x, h, 0.0, 0.0)?;
    (lo..=hi)
        .map(|i| Ok(received_power(x, h, i as f64 * step_mhz, 0.0)? - peak))
        .collect()
}

/// Expected reading (dBm) for a coupling of `c_db` at INR `inr_db`.
pub fn reading_dbm(c_db: f64, inr_db: f64, noise: &NoiseModel) -> f64 {
    lin_to_db(db_to_lin(noise.mean_dbm() + inr_db + c_db) + db_to_lin(noise.mean_dbm()))
}

pub(crate) fn check_range(range: OffsetRange) -> Result<()> {
    if range.half_width < 0 || !(range.step_mhz > 0.0) {
        return Err(Error::invalid("offset range needs a non-negative width and positive step"));
    }
    Ok(())
}

/// Offsets `lo..=hi` needed to evaluate shift `j` over `range`.
pub(crate) fn span(range: OffsetRange, j: i64) -> (i64, i64) {
    let (lo, hi) = (-range.half_width, range.half_width);
    (lo.min(lo + j), hi.max(hi + j))
}

/// Variation statistics from a precomputed coupling profile starting at
/// offset `first`.
pub(crate) fn variation_from_profile(
    profile: &[f64],
    first: i64,
    j: i64,
    inr_db: f64,
    gamma_t_db: f64,
    noise: &NoiseModel,
    range: OffsetRange,
) -> Variation {
    let at = |i: i64| reading_dbm(profile[(i - first) as usize], inr_db, noise);
    let gate = noise.threshold_dbm() + gamma_t_db;
    let mut offsets = Vec::new();
    let mut v = Vec::new();
    for i in -range.half_width..=range.half_width {
        let y = at(i);
        if y > gate {
            offsets.push(i);
            v.push(y - at(i + j));
        }
    }
    if v.is_empty() {
        return Variation::Empty;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Variation::Stats(VariationStats {
        j,
        inr_db,
        gamma_t_db,
        offsets,
        v,
        mean,
        var,
    })
}

/// SF variation of shape `x` seen through `h` for a shift of `j` steps.
pub fn sf_variation(
    x: &Spectrum,
    h: &Spectrum,
    j: i64,
    inr_db: f64,
    gamma_t_db: f64,
    noise: &NoiseModel,
    range: OffsetRange,
) -> Result<Variation> {
    check_range(range)?;
    let (a, b) = span(range, j);
    let profile = coupling_profile(x, h, range.step_mhz, a, b)?;
    Ok(variation_from_profile(&profile, a, j, inr_db, gamma_t_db, noise, range))
}
