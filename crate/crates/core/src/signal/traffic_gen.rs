//! Burst schedules for synthetic interference sources.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Class, Label};
use crate::signal::channel::{ChannelMap, BLE_ADVERTISING};
use crate::signal::spectrum::db_to_lin;

/// 802.15.1 slot length.
pub const SLOT_US: f64 = 625.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// A frame initiated by the source.
    Frame,
    /// An immediate response (e.g. an 802.11 ACK) to the preceding frame.
    Response,
}

/// Slow power variation inside one burst, piecewise constant per segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ripple {
    pub segment_us: f64,
    pub levels_db: Vec<f64>,
}

impl Ripple {
    /// ∫ gain over `[a, b]`, times relative to the burst start.
    pub fn energy_factor(&self, a: f64, b: f64) -> f64 {
        let first = (a / self.segment_us).floor().max(0.0) as usize;
        let mut acc = 0.0;
        for (j, lvl) in self.levels_db.iter().enumerate().skip(first) {
            let s = j as f64 * self.segment_us;
            if s >= b {
                break;
            }
            let lo = a.max(s);
            let hi = b.min(s + self.segment_us);
            if hi > lo {
                acc += db_to_lin(*lvl) * (hi - lo);
            }
        }
        acc
    }
}

/// One transmission on the air.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstEvent {
    pub id: u32,
    pub source: u32,
    pub label: Label,
    pub role: Role,
    pub start_us: f64,
    pub oat_us: f64,
    pub channel: i64,
    /// INR at a receiver tuned to the emission center.
    pub inr_db: f64,
    /// Per-burst fading gain.
    pub gain_db: f64,
    /// Start-to-start time from the previous frame of the same source.
    pub interarrival_us: Option<f64>,
    pub ripple: Option<Ripple>,
}

impl BurstEvent {
    pub fn end_us(&self) -> f64 {
        self.start_us + self.oat_us
    }

    pub(crate) fn peak_ripple_lin(&self) -> f64 {
        self.ripple
            .as_ref()
            .map_or(1.0, |r| r.levels_db.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0))
            .max(1.0)
    }
}

/// Scalar distribution in a source spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dist {
    Value(f64),
    Spec(DistSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform { lo: f64, hi: f64 },
    /// Equally likely values.
    Choice { values: Vec<f64> },
    Exponential { mean: f64 },
}

impl Dist {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Dist::Value(v) => *v,
            Dist::Spec(DistSpec::Uniform { lo, hi }) => {
                if hi > lo {
                    rng.random_range(*lo..*hi)
                } else {
                    *lo
                }
            }
            Dist::Spec(DistSpec::Choice { values }) => values[rng.random_range(0..values.len())],
            Dist::Spec(DistSpec::Exponential { mean }) => Exp::new(1.0 / mean).expect("validated").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Dist::Value(v) => *v,
            Dist::Spec(DistSpec::Uniform { lo, hi }) => 0.5 * (lo + hi),
            Dist::Spec(DistSpec::Choice { values }) => values.iter().sum::<f64>() / values.len() as f64,
            Dist::Spec(DistSpec::Exponential { mean }) => *mean,
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            Dist::Value(v) => (*v, *v),
            Dist::Spec(DistSpec::Uniform { lo, hi }) => (*lo, *hi),
            Dist::Spec(DistSpec::Choice { values }) => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            Dist::Spec(DistSpec::Exponential { mean }) => (0.0, if *mean > 0.0 { f64::INFINITY } else { *mean }),
        }
    }

    fn validate(&self, what: &str, min: f64, strict: bool) -> Result<()> {
        if let Dist::Spec(DistSpec::Choice { values }) = self {
            if values.is_empty() {
                return Err(Error::invalid(format!("{what}: choice needs at least one value")));
            }
        }
        if let Dist::Spec(DistSpec::Uniform { lo, hi }) = self {
            if hi < lo {
                return Err(Error::invalid(format!("{what}: uniform bounds reversed")));
            }
        }
        if let Dist::Spec(DistSpec::Exponential { mean }) = self {
            if !(*mean > 0.0) {
                return Err(Error::invalid(format!("{what}: exponential mean must be positive")));
            }
        }
        let (lo, hi) = self.bounds();
        let ok = lo.is_finite() || lo == 0.0;
        let ok = ok && !hi.is_nan() && if strict { lo > min } else { lo >= min };
        if !ok {
            let op = if strict { ">" } else { ">=" };
            return Err(Error::invalid(format!("{what}: values must be finite and {op} {min}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pattern {
    /// Frames every `period_us`, optionally jittered by up to `jitter_us`.
    Periodic {
        period_us: f64,
        #[serde(default)]
        jitter_us: f64,
    },
    /// Poisson frame arrivals.
    Poisson { rate_hz: f64 },
    /// Poisson arrivals whose rate gives channel activity factor `rho`.
    Activity { rho: f64 },
    /// Back-to-back frames separated by `gap_us`.
    Saturated { gap_us: Dist },
    /// Advertising events: one PDU on each of channels 37, 38 and 39, the
    /// event repeating every `interval_us` plus a random delay up to `jitter_us`.
    Beacon {
        interval_us: f64,
        #[serde(default = "default_adv_jitter")]
        jitter_us: f64,
        #[serde(default = "default_pdu_gap")]
        pdu_gap_us: f64,
    },
}

fn default_adv_jitter() -> f64 {
    10_000.0
}

fn default_pdu_gap() -> f64 {
    150.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelRule {
    Fixed { channel: i64 },
    /// Pseudo-random channel in `[lo, hi]` per slot; transmissions start on
    /// slot boundaries.
    Hop { lo: i64, hi: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub gap_us: f64,
    pub oat_us: Dist,
    /// INR of the response relative to the frame.
    #[serde(default = "zero_dist")]
    pub inr_offset_db: Dist,
}

fn zero_dist() -> Dist {
    Dist::Value(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RippleSpec {
    pub sigma_db: f64,
    pub segment_us: f64,
}

/// One interference source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub label: Label,
    pub pattern: Pattern,
    pub oat_us: Dist,
    pub inr_db: Dist,
    pub channel: ChannelRule,
    #[serde(default)]
    pub response: Option<ResponseSpec>,
    #[serde(default)]
    pub start_us: f64,
    /// Standard deviation of the per-burst log-normal gain.
    #[serde(default)]
    pub fading_db: f64,
    #[serde(default)]
    pub ripple: Option<RippleSpec>,
}

impl SourceSpec {
    pub fn validate(&self, map: &ChannelMap) -> Result<()> {
        let what = |f: &str| format!("{} source {f}", self.label);
        self.oat_us.validate(&what("oat_us"), 0.0, true)?;
        self.inr_db.validate(&what("inr_db"), 0.0, false)?;
        if !(self.fading_db >= 0.0) || !(self.start_us >= 0.0) {
            return Err(Error::invalid(what("fading_db and start_us must be non-negative")));
        }
        match &self.pattern {
            Pattern::Periodic { period_us, jitter_us } => {
                if !(*period_us > 0.0) || !(*jitter_us >= 0.0) {
                    return Err(Error::invalid(what("period must be positive")));
                }
            }
            Pattern::Poisson { rate_hz } => {
                if !(*rate_hz > 0.0) {
                    return Err(Error::invalid(what("rate must be positive")));
                }
            }
            Pattern::Activity { rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::invalid(what("activity factor must lie in (0, 1)")));
                }
            }
            Pattern::Saturated { gap_us } => gap_us.validate(&what("gap_us"), 0.0, false)?,
            Pattern::Beacon {
                interval_us,
                jitter_us,
                pdu_gap_us,
            } => {
                if self.label != Label::L {
                    return Err(Error::invalid(what("beacon pattern is only defined for BLE")));
                }
                if !(*interval_us > 0.0) || !(*jitter_us >= 0.0) || !(*pdu_gap_us >= 0.0) {
                    return Err(Error::invalid(what("beacon timing must be non-negative")));
                }
            }
        }
        match &self.channel {
            ChannelRule::Fixed { channel } => {
                map.emission(self.label, *channel)?;
            }
            ChannelRule::Hop { lo, hi } => {
                if !matches!(self.label.class(), Class::B | Class::L) {
                    return Err(Error::invalid(what("hopping is only defined for 802.15.1 and BLE")));
                }
                if lo > hi {
                    return Err(Error::invalid(what("hop range reversed")));
                }
                map.emission(self.label, *lo)?;
                map.emission(self.label, *hi)?;
            }
        }
        if let Some(r) = &self.response {
            if !(r.gap_us >= 0.0) {
                return Err(Error::invalid(what("response gap must be non-negative")));
            }
            r.oat_us.validate(&what("response oat_us"), 0.0, true)?;
        }
        if let Some(r) = &self.ripple {
            if !(r.sigma_db >= 0.0) || !(r.segment_us > 0.0) {
                return Err(Error::invalid(what("ripple needs sigma >= 0 and a positive segment")));
            }
        }
        Ok(())
    }
}

struct SourceGen<'a> {
    spec: &'a SourceSpec,
    source: u32,
    rng: ChaCha8Rng,
    out: Vec<BurstEvent>,
    last_frame_start: Option<f64>,
}

impl SourceGen<'_> {
    fn channel(&mut self) -> i64 {
        match self.spec.channel {
            ChannelRule::Fixed { channel } => channel,
            ChannelRule::Hop { lo, hi } => self.rng.random_range(lo..=hi),
        }
    }

    fn aligned(&self, t: f64) -> f64 {
        match self.spec.channel {
            ChannelRule::Hop { .. } => (t / SLOT_US).ceil() * SLOT_US,
            ChannelRule::Fixed { .. } => t,
        }
    }

    fn ripple(&mut self, oat: f64) -> Option<Ripple> {
        let spec = self.spec.ripple.as_ref()?;
        let n = (oat / spec.segment_us).ceil() as usize;
        let levels_db = (0..n)
            .map(|_| spec.sigma_db * self.rng.sample::<f64, _>(StandardNormal))
            .collect();
        Some(Ripple {
            segment_us: spec.segment_us,
            levels_db,
        })
    }

    /// Emits a frame (and its response) at `start`; returns when the source
    /// is idle again.
    fn emit(&mut self, start: f64, channel: i64) -> f64 {
        let oat = self.spec.oat_us.sample(&mut self.rng);
        let inr = self.spec.inr_db.sample(&mut self.rng);
        let gain = if self.spec.fading_db > 0.0 {
            self.spec.fading_db * self.rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let ripple = self.ripple(oat);
        self.out.push(BurstEvent {
            id: 0,
            source: self.source,
            label: self.spec.label,
            role: Role::Frame,
            start_us: start,
            oat_us: oat,
            channel,
            inr_db: inr,
            gain_db: gain,
            interarrival_us: self.last_frame_start.map(|p| start - p),
            ripple,
        });
        self.last_frame_start = Some(start);
        let mut end = start + oat;
        if let Some(r) = &self.spec.response {
            let r_start = end + r.gap_us;
            let r_oat = r.oat_us.sample(&mut self.rng);
            let r_inr = (inr + r.inr_offset_db.sample(&mut self.rng)).max(0.0);
            let ripple = self.ripple(r_oat);
            self.out.push(BurstEvent {
                id: 0,
                source: self.source,
                label: self.spec.label,
                role: Role::Response,
                start_us: r_start,
                oat_us: r_oat,
                channel,
                inr_db: r_inr,
                gain_db: gain,
                interarrival_us: None,
                ripple,
            });
            end = r_start + r_oat;
        }
        end
    }

    fn run(&mut self, horizon: f64) {
        let mut t = self.spec.start_us;
        // the source must be idle before the next frame starts
        let mut idle_at = t;
        match self.spec.pattern.clone() {
            Pattern::Periodic { period_us, jitter_us } => {
                let mut k = 0u64;
                loop {
                    let nominal = self.spec.start_us + k as f64 * period_us;
                    let jitter = if jitter_us > 0.0 { self.rng.random_range(0.0..jitter_us) } else { 0.0 };
                    let start = self.aligned((nominal + jitter).max(idle_at));
                    if start >= horizon {
                        break;
                    }
                    let ch = self.channel();
                    idle_at = self.emit(start, ch);
                    k += 1;
                }
            }
            Pattern::Poisson { .. } | Pattern::Activity { .. } => {
                let rate_per_us = match self.spec.pattern {
                    Pattern::Poisson { rate_hz } => rate_hz * 1e-6,
                    Pattern::Activity { rho } => {
                        let busy = self.spec.oat_us.mean()
                            + self.spec.response.as_ref().map_or(0.0, |r| r.gap_us + r.oat_us.mean());
                        rho / busy
                    }
                    _ => unreachable!(),
                };
                let exp = Exp::new(rate_per_us).expect("validated rate");
                loop {
                    t += exp.sample(&mut self.rng);
                    let start = self.aligned(t.max(idle_at));
                    if start >= horizon {
                        break;
                    }
                    let ch = self.channel();
                    idle_at = self.emit(start, ch);
                }
            }
            Pattern::Saturated { gap_us } => loop {
                let start = self.aligned(t);
                if start >= horizon {
                    break;
                }
                let ch = self.channel();
                let end = self.emit(start, ch);
                t = end + gap_us.sample(&mut self.rng);
            },
            Pattern::Beacon {
                interval_us,
                jitter_us,
                pdu_gap_us,
            } => loop {
                if t >= horizon {
                    break;
                }
                let mut s = t;
                for ch in BLE_ADVERTISING {
                    s = self.emit(s, ch as i64) + pdu_gap_us;
                }
                let delay = if jitter_us > 0.0 { self.rng.random_range(0.0..jitter_us) } else { 0.0 };
                t += interval_us + delay;
            },
        }
    }
}

/// Generates the events of all sources over `[0, duration_ms)`. Event ids are
/// assigned in start-time order.
pub fn generate_traffic(specs: &[SourceSpec], map: &ChannelMap, duration_ms: f64, seed: u64) -> Result<Vec<BurstEvent>> {
    if !(duration_ms >= 0.0) {
        return Err(Error::invalid("duration must be non-negative"));
    }
    for s in specs {
        s.validate(map)?;
    }
    let horizon = duration_ms * 1000.0;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let mut g = SourceGen {
            spec,
            source: i as u32,
            rng: ChaCha8Rng::seed_from_u64(master.next_u64()),
            out: Vec::new(),
            last_frame_start: None,
        };
        g.run(horizon);
        events.extend(g.out);
    }
    events.sort_by(|a, b| a.start_us.total_cmp(&b.start_us).then(a.source.cmp(&b.source)));
    for (i, e) in events.iter_mut().enumerate() {
        e.id = i as u32;
    }
    Ok(events)
}
