use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// Feature column names, in vector order.
pub const FEATURE_NAMES: [&str; 8] = ["f_su", "f_sd", "f_sc", "f_tl", "f_ep", "f_ec", "f_er", "f_cca"];

/// Samples gathered for one burst by the sampling schedule.
///
/// `y` starts with `x_0` and continues with the center-band tail readings
/// taken after the radio returns from the side-bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawBurstSamples {
    pub x0: i16,
    /// Lower side-band reading.
    pub x1: Option<i16>,
    /// Upper side-band reading.
    pub x2: Option<i16>,
    pub y: Vec<i16>,
    pub cca: bool,
    pub sensing_channel: u8,
    /// Schedule slots not in `y` (settle, discards, side-band readings).
    pub overhead_samples: u32,
    pub label: Option<Label>,
    pub inr_db: f64,
}

impl RawBurstSamples {
    pub fn is_complete(&self) -> bool {
        self.x1.is_some() && self.x2.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub su: f64,
    pub sd: f64,
    pub sc: u8,
    pub tl: u32,
    pub ep: f64,
    pub ec: f64,
    pub er: u32,
    pub cca: bool,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.su,
            self.sd,
            self.sc as f64,
            self.tl as f64,
            self.ep,
            self.ec,
            self.er as f64,
            if self.cca { 1.0 } else { 0.0 },
        ]
    }
}

/// Derives the eight burst features. `F_Ep` averages the dB samples directly.
pub fn extract_features(raw: &RawBurstSamples, ripple_threshold_db: f64) -> Result<FeatureVector> {
    let (Some(x1), Some(x2)) = (raw.x1, raw.x2) else {
        return Err(Error::IncompleteBurst);
    };
    if raw.y.is_empty() {
        return Err(Error::invalid("burst has no center-band samples"));
    }
    let n = raw.y.len() as f64;
    let mean = raw.y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let max = *raw.y.iter().max().unwrap() as f64;
    let min = *raw.y.iter().min().unwrap() as f64;
    let er = raw
        .y
        .windows(2)
        .filter(|w| ((w[1] - w[0]) as f64).abs() >= ripple_threshold_db)
        .count() as u32;
    Ok(FeatureVector {
        su: mean - x1 as f64,
        sd: mean - x2 as f64,
        sc: raw.sensing_channel,
        tl: raw.y.len() as u32 + raw.overhead_samples,
        ep: mean,
        ec: max - min,
        er,
        cca: raw.cca,
    })
}
