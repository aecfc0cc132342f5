//! The intra-burst sampling schedule.
//!
//! Slot `k` is the reading `k·T_s` after the first over-threshold sample:
//!
//! | k | tuning | reading |
//! |---|--------|---------|
//! | 1 .. settle-1 | center | settle |
//! | settle | center | `x_0`, then CCA and retune down |
//! | next `discard` slots | lower | discarded |
//! | following slot | lower | `x_1`, retune up |
//! | next `discard` slots | upper | discarded |
//! | following slot | upper | `x_2`, retune back |
//! | after that | center | tail until a reading falls to `P_T` |
//!
//! Every retune charges `ΔT_sw` inside the slot that follows it: the moving
//! average restarts when the synthesizer locks, so a reading taken after a
//! retune only averages power received since the lock. With the defaults
//! (settle 2, one discard) the upper side-band reading lands `6·T_s = 324 µs`
//! after the first over-threshold sample.

use crate::error::Result;
use crate::label::Label;
use crate::sensing::cca::CcaOracle;
use crate::sensing::detect::Run;
use crate::sensing::features::RawBurstSamples;
use crate::signal::rssi::{moving_average, quantize, EventEnvelope, NoiseSource};
use crate::signal::{BurstEvent, NoiseModel, RadioModel, RssiTrace, SensingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tuning {
    Center,
    Lower,
    Upper,
}

/// A fixed set of events watched from one 802.15.4 sensing channel.
pub struct Scene<'a> {
    events: &'a [BurstEvent],
    cfg: SensingConfig,
    noise: NoiseModel,
    source: NoiseSource,
    cca: CcaOracle,
    channel: u8,
    freqs: [f64; 3],
    envs: [EventEnvelope<'a>; 3],
    center_inr_offset: Vec<f64>,
}

impl<'a> Scene<'a> {
    pub fn new(
        events: &'a [BurstEvent],
        radio: &RadioModel,
        noise: NoiseModel,
        cfg: SensingConfig,
        sensing_channel: u8,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let fc = radio.map.zigbee_center(sensing_channel)?;
        let freqs = [fc, fc - cfg.side_offset_down_mhz, fc + cfg.side_offset_up_mhz];
        let envs = [
            EventEnvelope::new(events, radio, &noise, freqs[0])?,
            EventEnvelope::new(events, radio, &noise, freqs[1])?,
            EventEnvelope::new(events, radio, &noise, freqs[2])?,
        ];
        let center_inr_offset = events
            .iter()
            .map(|e| {
                let c = radio.map.emission_center(e.label, e.channel).expect("validated by envelope");
                radio.coupling_db(e.label, fc - c)
            })
            .collect();
        Ok(Scene {
            events,
            cfg,
            noise,
            source: NoiseSource::new(seed),
            cca: CcaOracle { seed, cfg: cfg.cca },
            channel: sensing_channel,
            freqs,
            envs,
            center_inr_offset,
        })
    }

    pub fn config(&self) -> &SensingConfig {
        &self.cfg
    }

    pub fn sensing_channel(&self) -> u8 {
        self.channel
    }

    pub fn center_mhz(&self) -> f64 {
        self.freqs[0]
    }

    pub fn events(&self) -> &'a [BurstEvent] {
        self.events
    }

    fn time(&self, n: usize) -> f64 {
        n as f64 * self.cfg.sample_period_us
    }

    fn reading(&self, n: usize, tuning: Tuning, lock_us: f64) -> i16 {
        let i = tuning as usize;
        let t = self.time(n);
        let signal = moving_average(&self.envs[i], t, self.cfg.ma_window_us, lock_us);
        let z = self.source.standard_normal(n as u64, self.freqs[i]);
        quantize(signal + self.noise.noise_mw(z), &self.cfg)
    }

    /// Noise-free INR of event `idx` as seen on the sensing channel center.
    pub fn observed_inr_db(&self, idx: usize) -> f64 {
        let e = &self.events[idx];
        e.inr_db + e.gain_db + self.center_inr_offset[idx]
    }

    /// Uninterrupted center-band trace of `count` samples; identical to
    /// [`crate::signal::rssi::rssi_pipeline`] with the same seed.
    pub fn trace(&self, count: usize) -> RssiTrace {
        let floor = self.noise.linear_moments().0 * 0.01;
        let samples = (0..count).map(|n| self.reading(n, Tuning::Center, f64::NEG_INFINITY)).collect();
        let truth = (0..count)
            .map(|n| {
                let t = self.time(n);
                self.envs[0].contributors(t - self.cfg.ma_window_us, t, floor)
            })
            .collect();
        RssiTrace {
            t0_us: 0.0,
            period_us: self.cfg.sample_period_us,
            tuned_mhz: self.freqs[0],
            samples,
            truth,
        }
    }

    /// Runs the schedule for a burst first seen over threshold at sample `n0`,
    /// with the center filter last restarted at `lock_us`.
    pub fn acquire(&self, n0: usize, lock_us: f64) -> Acquisition {
        let cfg = &self.cfg;
        let pt = self.noise.threshold_dbm();
        let ts = cfg.sample_period_us;
        let t0 = self.time(n0);
        let trigger = self.envs[0].dominant(t0 - cfg.ma_window_us, t0);
        let first = self.reading(n0, Tuning::Center, lock_us);
        let mut center = vec![(0u32, first)];

        let discarded = |next: usize, center: Vec<(u32, i16)>| Acquisition {
            burst: None,
            next_sample: next,
            center_lock_us: lock_us,
            center_samples: center,
        };

        let settle = cfg.settle_samples as usize;
        for k in 1..=settle {
            let r = self.reading(n0 + k, Tuning::Center, lock_us);
            if r as f64 <= pt {
                return discarded(n0 + k + 1, center);
            }
            center.push((k as u32, r));
        }
        let x0 = center.last().unwrap().1;
        let Some(trigger) = trigger else {
            // power came from noise alone; nothing to attribute it to
            return discarded(n0 + settle + 1, center);
        };
        let ev = &self.events[trigger];
        let cca = self.cca.assess(Some(ev.label), n0 as u64);

        let step = cfg.discard_samples as usize + 1;
        let k1 = settle + step;
        let lock_lower = self.time(n0 + settle) + cfg.switch_time_us;
        let x1 = self.reading(n0 + k1, Tuning::Lower, lock_lower);
        let k2 = k1 + step;
        let lock_upper = self.time(n0 + k1) + cfg.switch_time_us;
        let x2 = self.reading(n0 + k2, Tuning::Upper, lock_upper);
        let lock_back = self.time(n0 + k2) + cfg.switch_time_us;

        let max_tail = (cfg.max_oat_us / ts).ceil() as usize;
        let mut y = vec![x0];
        let mut k = k2 + 1;
        let mut last_over = settle;
        loop {
            let r = self.reading(n0 + k, Tuning::Center, lock_back);
            if r as f64 <= pt {
                break;
            }
            y.push(r);
            center.push((k as u32, r));
            last_over = k;
            k += 1;
            if y.len() > max_tail {
                break;
            }
        }

        // On-air time left once the burst is noticed, counted from one period
        // before the first over-threshold reading at the earliest.
        // (the epsilon absorbs rounding in end - start for bursts sat exactly on a bound)
        let remaining = ev.end_us() - ev.start_us.max(t0 - ts) + 1e-6;
        let outcome = if remaining < settle as f64 * ts {
            None
        } else if remaining < cfg.min_identifiable_oat_us() {
            Some(BurstOutcome::Incomplete)
        } else {
            Some(BurstOutcome::Complete(RawBurstSamples {
                x0,
                x1: Some(x1),
                x2: Some(x2),
                y: y.clone(),
                cca,
                sensing_channel: self.channel,
                overhead_samples: cfg.schedule_samples(),
                label: Some(ev.label),
                inr_db: self.observed_inr_db(trigger),
            }))
        };
        let next_sample = n0 + k + 1;
        let Some(outcome) = outcome else {
            return Acquisition {
                burst: None,
                next_sample,
                center_lock_us: lock_back,
                center_samples: center,
            };
        };
        let (oat_est_us, mean_dbm) = match &outcome {
            BurstOutcome::Complete(raw) => {
                let f_tl = raw.y.len() as u32 + raw.overhead_samples;
                let mean = raw.y.iter().map(|&v| v as f64).sum::<f64>() / raw.y.len() as f64;
                ((f_tl - 1) as f64 * ts, mean)
            }
            BurstOutcome::Incomplete => {
                let over: Vec<f64> = center.iter().map(|&(_, v)| v as f64).collect();
                (last_over as f64 * ts, over.iter().sum::<f64>() / over.len() as f64)
            }
        };
        Acquisition {
            burst: Some(DetectedBurst {
                start_us: t0,
                oat_est_us,
                mean_dbm,
                sensing_channel: self.channel,
                truth: Some(ev.label),
                event: Some(ev.id),
                inr_db: self.observed_inr_db(trigger),
                outcome,
            }),
            next_sample,
            center_lock_us: lock_back,
            center_samples: center,
        }
    }

    /// Continuous operation over samples `[0, count)`: detect, acquire,
    /// resume detection after each burst.
    pub fn run(&self, count: usize) -> Vec<DetectedBurst> {
        let pt = self.noise.threshold_dbm();
        let mut out = Vec::new();
        let mut n = 0;
        let mut lock = f64::NEG_INFINITY;
        while n < count {
            let r = self.reading(n, Tuning::Center, lock);
            if r as f64 > pt {
                let a = self.acquire(n, lock);
                n = a.next_sample;
                lock = a.center_lock_us;
                if let Some(b) = a.burst {
                    if b.start_us < self.time(count) {
                        out.push(b);
                    }
                }
            } else {
                n += 1;
            }
        }
        out
    }

    /// Number of samples covering `duration_us`.
    pub fn sample_count(&self, duration_us: f64) -> usize {
        if duration_us > 0.0 {
            (duration_us / self.cfg.sample_period_us).floor() as usize + 1
        } else {
            0
        }
    }
}

/// Result of running the schedule on one burst.
#[derive(Clone, Debug)]
pub struct Acquisition {
    pub burst: Option<DetectedBurst>,
    /// First sample index at which detection resumes.
    pub next_sample: usize,
    pub center_lock_us: f64,
    /// `(slot, reading)` of the over-threshold center-band readings.
    pub center_samples: Vec<(u32, i16)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BurstOutcome {
    Complete(RawBurstSamples),
    /// The burst left the air before the upper side-band reading; only its
    /// envelope (arrival time, duration estimate, power) is kept.
    Incomplete,
}

/// A burst seen by the sensing node.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectedBurst {
    pub start_us: f64,
    /// Duration estimate: for complete bursts `(F_Tl - 1)·T_s`, otherwise
    /// the slot of the last over-threshold center-band reading times `T_s`.
    pub oat_est_us: f64,
    /// Mean of the center-band dB readings.
    pub mean_dbm: f64,
    pub sensing_channel: u8,
    pub truth: Option<Label>,
    pub event: Option<u32>,
    /// Noise-free INR of the triggering event on the sensing channel.
    pub inr_db: f64,
    pub outcome: BurstOutcome,
}

impl DetectedBurst {
    pub fn raw(&self) -> Option<&RawBurstSamples> {
        match &self.outcome {
            BurstOutcome::Complete(r) => Some(r),
            BurstOutcome::Incomplete => None,
        }
    }
}

/// Runs the schedule on a run found by [`crate::sensing::detect_bursts`] in
/// the scene's uninterrupted trace. `None` when the burst ended before `x_0`
/// or cannot be attributed to an event.
pub fn sample_burst(scene: &Scene<'_>, run: Run) -> Option<DetectedBurst> {
    scene.acquire(run.start, f64::NEG_INFINITY).burst
}
