//! Constrained RSSI observation chain: per-event power coupling, trailing
//! moving average in linear power, additive reading noise, 1 dB quantization
//! and clamping to the register's dynamic range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::spectrum::{db_to_lin, lin_to_db, RadioModel};
use crate::signal::traffic_gen::BurstEvent;

/// Reading noise of the radio, described by the mean and standard deviation of
/// noise-only RSSI readings in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise")]
pub struct NoiseModel {
    mean_dbm: f64,
    std_db: f64,
}

impl NoiseModel {
    pub fn new(mean_dbm: f64, std_db: f64) -> Result<Self> {
        if !(std_db > 0.0) || !mean_dbm.is_finite() || !std_db.is_finite() {
            return Err(Error::invalid(format!("noise std must be positive, got {std_db}")));
        }
        Ok(NoiseModel { mean_dbm, std_db })
    }

    pub fn mean_dbm(&self) -> f64 {
        self.mean_dbm
    }

    pub fn std_db(&self) -> f64 {
        self.std_db
    }

    /// Detection threshold `P_T = μ_N + 2σ_N`.
    pub fn threshold_dbm(&self) -> f64 {
        self.mean_dbm + 2.0 * self.std_db
    }

    /// Mean and standard deviation in mW of a log-normal variable whose dB
    /// value has this model's moments.
    pub fn linear_moments(&self) -> (f64, f64) {
        let a = std::f64::consts::LN_10 / 10.0;
        let s2 = (a * self.std_db).powi(2);
        let mean = db_to_lin(self.mean_dbm) * (0.5 * s2).exp();
        let std = mean * (s2.exp() - 1.0).sqrt();
        (mean, std)
    }

    /// Noise power for a standard-normal draw `z`, floored to stay positive.
    pub fn noise_mw(&self, z: f64) -> f64 {
        let (m, s) = self.linear_moments();
        (m + s * z).max(m * 1e-3)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            mean_dbm: -98.0,
            std_db: 1.0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    mean_dbm: f64,
    std_db: f64,
}

impl TryFrom<RawNoise> for NoiseModel {
    type Error = Error;

    fn try_from(r: RawNoise) -> Result<Self> {
        NoiseModel::new(r.mean_dbm, r.std_db)
    }
}

/// CCA Mode 2 emulation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcaConfig {
    pub p_detect: f64,
    pub p_false: f64,
}

impl Default for CcaConfig {
    fn default() -> Self {
        CcaConfig {
            p_detect: 0.9786,
            p_false: 0.005,
        }
    }
}

/// Timing and radio parameters of the sensing node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    pub sample_period_us: f64,
    pub ma_window_us: f64,
    pub rssi_cutoff_khz: f64,
    pub side_offset_up_mhz: f64,
    pub side_offset_down_mhz: f64,
    pub freq_step_mhz: f64,
    pub switch_time_us: f64,
    pub range_min_dbm: i16,
    pub range_max_dbm: i16,
    /// Longest identifiable on-air time.
    pub max_oat_us: f64,
    /// Samples between the first over-threshold reading and `x_0`.
    pub settle_samples: u32,
    /// Samples thrown away after each retune before the side-band reading.
    pub discard_samples: u32,
    /// Ripple threshold `P_E`.
    pub ripple_threshold_db: f64,
    pub cca: CcaConfig,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            sample_period_us: 54.0,
            ma_window_us: 128.0,
            rssi_cutoff_khz: 7.8125,
            side_offset_up_mhz: 2.0,
            side_offset_down_mhz: 2.0,
            freq_step_mhz: 1.0,
            switch_time_us: 25.0,
            range_min_dbm: -100,
            range_max_dbm: 0,
            max_oat_us: 5000.0,
            settle_samples: 2,
            discard_samples: 1,
            ripple_threshold_db: 4.0,
            cca: CcaConfig::default(),
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.sample_period_us > 0.0) || !(self.ma_window_us > 0.0) {
            return bad("sample period and averaging window must be positive".into());
        }
        if !(1e3 / self.sample_period_us > 2.0 * self.rssi_cutoff_khz) {
            return bad(format!(
                "sampling rate {:.3} kHz must exceed twice the RSSI cutoff {} kHz",
                1e3 / self.sample_period_us,
                self.rssi_cutoff_khz
            ));
        }
        if !(self.switch_time_us >= 0.0 && self.switch_time_us < self.sample_period_us) {
            return bad("channel switch time must be shorter than one sample period".into());
        }
        if !(self.freq_step_mhz > 0.0) {
            return bad("frequency step must be positive".into());
        }
        for off in [self.side_offset_up_mhz, self.side_offset_down_mhz] {
            let k = off / self.freq_step_mhz;
            if !(off > 0.0) || (k - k.round()).abs() > 1e-9 {
                return bad(format!("side-band offset {off} MHz is not a positive multiple of the frequency step"));
            }
        }
        if self.range_min_dbm >= self.range_max_dbm {
            return bad("dynamic range is empty".into());
        }
        if self.settle_samples < 1 {
            return bad("at least one settle sample is required".into());
        }
        if !(self.max_oat_us > self.min_identifiable_oat_us()) {
            return bad("maximum OAT must exceed the sampling schedule span".into());
        }
        for p in [self.cca.p_detect, self.cca.p_false] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("CCA probability {p} outside [0, 1]"));
            }
        }
        if !(self.ripple_threshold_db >= 0.0) {
            return bad("ripple threshold must be non-negative".into());
        }
        Ok(())
    }

    /// Slots from the first over-threshold reading to the upper side-band
    /// reading: settle, then one retune, discards and a reading per side-band.
    pub fn schedule_samples(&self) -> u32 {
        self.settle_samples + 2 * (self.discard_samples + 1)
    }

    /// Shortest burst that stays on air through the whole schedule.
    pub fn min_identifiable_oat_us(&self) -> f64 {
        self.schedule_samples() as f64 * self.sample_period_us
    }

    /// Shortest run of over-threshold samples that reaches `x_0`.
    pub fn min_run_samples(&self) -> usize {
        self.settle_samples as usize + 1
    }
}

/// Time-integrated received power.
pub trait PowerEnvelope {
    /// Energy (mW·µs) received over `[from, to]`.
    fn energy(&self, from_us: f64, to_us: f64) -> f64;
}

/// Trailing moving average of `env` over `window_us`, restarted at `lock_us`
/// (the instant the synthesizer settled on the current frequency).
pub fn moving_average(env: &dyn PowerEnvelope, t_us: f64, window_us: f64, lock_us: f64) -> f64 {
    let from = (t_us - window_us).max(lock_us);
    if t_us <= from {
        return 0.0;
    }
    env.energy(from, t_us) / (t_us - from)
}

#[derive(Clone, Debug)]
struct Piece {
    start: f64,
    end: f64,
    mw: f64,
    event: usize,
}

/// Received power of a set of events at one tuning frequency.
#[derive(Clone, Debug)]
pub struct EventEnvelope<'a> {
    events: &'a [BurstEvent],
    pieces: Vec<Piece>,
    max_len: f64,
}

impl<'a> EventEnvelope<'a> {
    pub fn new(events: &'a [BurstEvent], radio: &RadioModel, noise: &NoiseModel, tuned_mhz: f64) -> Result<Self> {
        let mut pieces = Vec::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            let center = radio.map.emission_center(e.label, e.channel)?;
            let mw = db_to_lin(noise.mean_dbm() + e.inr_db + e.gain_db) * radio.coupling(e.label, tuned_mhz - center);
            pieces.push(Piece {
                start: e.start_us,
                end: e.start_us + e.oat_us,
                mw,
                event: i,
            });
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.event.cmp(&b.event)));
        let max_len = pieces.iter().map(|p| p.end - p.start).fold(0.0, f64::max);
        Ok(EventEnvelope { events, pieces, max_len })
    }

    fn overlapping(&self, from: f64, to: f64) -> impl Iterator<Item = &Piece> {
        let hi = self.pieces.partition_point(|p| p.start < to);
        self.pieces[..hi]
            .iter()
            .rev()
            .take_while(move |p| p.start >= from - self.max_len)
            .filter(move |p| p.end > from)
    }

    /// Event indices whose power overlaps `[from, to]` at more than `floor_mw`.
    pub fn contributors(&self, from: f64, to: f64, floor_mw: f64) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .overlapping(from, to)
            .filter(|p| p.mw * self.events[p.event].peak_ripple_lin() > floor_mw)
            .map(|p| self.events[p.event].id)
            .collect();
        v.sort_unstable();
        v
    }

    /// Index (into the event slice) of the strongest event overlapping the
    /// window, by energy.
    pub fn dominant(&self, from: f64, to: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for p in self.overlapping(from, to) {
            let e = self.piece_energy(p, from, to);
            if best.is_none_or(|(b, i)| e > b || (e == b && p.event < i)) {
                best = Some((e, p.event));
            }
        }
        best.map(|(_, i)| i)
    }

    /// Noise-free received power (mW) of event `idx` at this tuning.
    pub fn event_mw(&self, idx: usize) -> f64 {
        self.pieces.iter().find(|p| p.event == idx).map_or(0.0, |p| p.mw)
    }

    fn piece_energy(&self, p: &Piece, from: f64, to: f64) -> f64 {
        let a = from.max(p.start);
        let b = to.min(p.end);
        if b <= a {
            return 0.0;
        }
        match &self.events[p.event].ripple {
            None => p.mw * (b - a),
            Some(r) => p.mw * r.energy_factor(a - p.start, b - p.start),
        }
    }
}

impl PowerEnvelope for EventEnvelope<'_> {
    fn energy(&self, from_us: f64, to_us: f64) -> f64 {
        let mut acc = 0.0;
        for p in self.overlapping(from_us, to_us) {
            acc += self.piece_energy(p, from_us, to_us);
        }
        acc
    }
}

/// Sum of envelopes.
pub struct SumEnvelope<'a>(pub Vec<&'a dyn PowerEnvelope>);

impl PowerEnvelope for SumEnvelope<'_> {
    fn energy(&self, from_us: f64, to_us: f64) -> f64 {
        self.0.iter().map(|e| e.energy(from_us, to_us)).sum()
    }
}

/// Deterministic, random-access source of reading noise: the draw for a given
/// sample index and tuning frequency does not depend on what else was drawn.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSource {
    seed: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource { seed }
    }

    pub fn standard_normal(&self, sample: u64, tuned_mhz: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((tuned_mhz * 1000.0).round() as i64 as u64);
        rng.set_word_pos(sample as u128 * 64);
        rng.sample(StandardNormal)
    }
}

/// Converts a power reading to integer dBm: round half away from zero, clamp.
pub fn quantize(mw: f64, cfg: &SensingConfig) -> i16 {
    let db = lin_to_db(mw);
    let lo = cfg.range_min_dbm as f64;
    let hi = cfg.range_max_dbm as f64;
    if db.is_nan() || db < lo {
        return cfg.range_min_dbm;
    }
    db.round().clamp(lo, hi) as i16
}

/// Quantized, filtered RSSI samples at one tuning frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct RssiTrace {
    pub t0_us: f64,
    pub period_us: f64,
    pub tuned_mhz: f64,
    pub samples: Vec<i16>,
    /// Ids of the events contributing to each sample.
    pub truth: Vec<Vec<u32>>,
}

impl RssiTrace {
    pub fn time_us(&self, n: usize) -> f64 {
        self.t0_us + n as f64 * self.period_us
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with columns `time_us,rssi_dbm,truth_labels`; labels of
    /// concurrent events are joined with `;`.
    pub fn write_csv<W: std::io::Write>(&self, events: &[BurstEvent], out: W) -> Result<()> {
        let by_id: std::collections::HashMap<u32, &BurstEvent> = events.iter().map(|e| (e.id, e)).collect();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_us", "rssi_dbm", "truth_labels"])?;
        for (n, (s, t)) in self.samples.iter().zip(&self.truth).enumerate() {
            let labels: Vec<&str> = t.iter().filter_map(|id| by_id.get(id)).map(|e| e.label.code()).collect();
            w.write_record([format!("{}", self.time_us(n)), s.to_string(), labels.join(";")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pre-quantization readings (mW) of `env` plus noise at sample instants
/// `n * T_s`, `n = 0..count`, with the filter running uninterrupted.
pub fn render_linear(
    env: &dyn PowerEnvelope,
    cfg: &SensingConfig,
    noise: &NoiseModel,
    source: &NoiseSource,
    tuned_mhz: f64,
    count: usize,
) -> Vec<f64> {
    (0..count)
        .map(|n| {
            let t = n as f64 * cfg.sample_period_us;
            let z = source.standard_normal(n as u64, tuned_mhz);
            moving_average(env, t, cfg.ma_window_us, f64::NEG_INFINITY) + noise.noise_mw(z)
        })
        .collect()
}

/// Observes `events` through a radio parked at `tuned_mhz` for `duration_us`.
pub fn rssi_pipeline(
    events: &[BurstEvent],
    cfg: &SensingConfig,
    noise: &NoiseModel,
    radio: &RadioModel,
    tuned_mhz: f64,
    duration_us: f64,
    seed: u64,
) -> Result<RssiTrace> {
    cfg.validate()?;
    let k = tuned_mhz / cfg.freq_step_mhz;
    if (k - k.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "tuning {tuned_mhz} MHz is not on the {} MHz raster",
            cfg.freq_step_mhz
        )));
    }
    let env = EventEnvelope::new(events, radio, noise, tuned_mhz)?;
    let count = if duration_us > 0.0 {
        (duration_us / cfg.sample_period_us).floor() as usize + 1
    } else {
        0
    };
    let readings = render_linear(&env, cfg, noise, &NoiseSource::new(seed), tuned_mhz, count);
    let floor = noise.linear_moments().0 * 0.01;
    let mut samples = Vec::with_capacity(count);
    let mut truth = Vec::with_capacity(count);
    for (n, r) in readings.into_iter().enumerate() {
        let t = n as f64 * cfg.sample_period_us;
        samples.push(quantize(r, cfg));
        truth.push(env.contributors(t - cfg.ma_window_us, t, floor));
    }
    Ok(RssiTrace {
        t0_us: 0.0,
        period_us: cfg.sample_period_us,
        tuned_mhz,
        samples,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);

    impl PowerEnvelope for Constant {
        fn energy(&self, a: f64, b: f64) -> f64 {
            self.0 * (b - a)
        }
    }

    #[test]
    fn threshold_is_derived() {
        let n = NoiseModel::new(-98.0, 1.0).unwrap();
        assert_eq!(n.threshold_dbm(), -96.0);
        assert!(NoiseModel::new(-98.0, 0.0).is_err());
    }

    #[test]
    fn default_config_is_valid_and_spans_324us() {
        let c = SensingConfig::default();
        c.validate().unwrap();
        assert_eq!(c.min_identifiable_oat_us(), 324.0);
        assert_eq!(c.min_run_samples(), 3);
    }

    #[test]
    fn quantization_rounds_half_away_and_clamps() {
        let c = SensingConfig::default();
        for d in -100..=0 {
            assert_eq!(quantize(db_to_lin(d as f64), &c), d);
        }
        assert_eq!(quantize(db_to_lin(-50.5), &c), -51);
        assert_eq!(quantize(db_to_lin(-50.49), &c), -50);
        assert_eq!(quantize(db_to_lin(-120.0), &c), -100);
        assert_eq!(quantize(db_to_lin(10.0), &c), 0);
        assert_eq!(quantize(0.0, &c), -100);
    }

    #[test]
    fn constant_envelope_reaches_steady_state() {
        let c = SensingConfig::default();
        let env = Constant(db_to_lin(-50.0));
        let v = moving_average(&env, 1000.0, c.ma_window_us, f64::NEG_INFINITY);
        assert_eq!(quantize(v, &c), -50);
    }

    #[test]
    fn noise_draws_are_random_access() {
        let s = NoiseSource::new(7);
        let a = s.standard_normal(10, 2405.0);
        let _ = s.standard_normal(3, 2405.0);
        assert_eq!(a, s.standard_normal(10, 2405.0));
        assert_ne!(a, s.standard_normal(10, 2407.0));
    }

    #[test]
    fn linear_moments_match_lognormal() {
        let n = NoiseModel::new(-98.0, 1.0).unwrap();
        let (m, s) = n.linear_moments();
        assert!(m > db_to_lin(-98.0));
        assert!(s > 0.2 * m && s < 0.25 * m);
    }
}
