//! Scenario files, whole-scenario simulation and the synthetic benchmark.

use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{Classifier, Dataset, Record};
use crate::error::{Error, Result};
use crate::label::{Class, Label, WifiVariant};
use crate::sensing::{extract_features, DetectedBurst, Scene};
use crate::signal::{
    generate_traffic, BurstEvent, ChannelMap, FrontEnd, MaskTable, NoiseModel, RadioModel, SensingConfig, SourceSpec,
};
use crate::signal::traffic_gen::{Ripple, Role};
use crate::traffic::ClassifiedBurst;

fn default_channels() -> Vec<u8> {
    vec![15]
}

/// A simulated measurement campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_ms: f64,
    /// 802.15.4 channels watched, each by its own sensing node for the whole
    /// duration.
    #[serde(default = "default_channels")]
    pub sensing_channels: Vec<u8>,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub frontend: FrontEnd,
    #[serde(default, rename = "source")]
    pub sources: Vec<SourceSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: u64,
    duration_ms: f64,
    #[serde(default = "default_channels")]
    sensing_channels: Vec<u8>,
    #[serde(default)]
    sensing: SensingConfig,
    #[serde(default)]
    noise: NoiseModel,
    #[serde(default)]
    frontend: FrontEnd,
    #[serde(default, rename = "source")]
    sources: Vec<toml::Spanned<SourceSpec>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates a TOML scenario. Errors carry the line of the
    /// offending entry.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            Error::parse(source_name, line, e.message().trim().to_string())
        })?;
        let map = ChannelMap::builtin();
        for s in &raw.sources {
            s.get_ref()
                .validate(&map)
                .map_err(|e| Error::parse(source_name, Some(line_of(text, s.span().start)), e.to_string()))?;
        }
        let cfg = ScenarioConfig {
            seed: raw.seed,
            duration_ms: raw.duration_ms,
            sensing_channels: raw.sensing_channels,
            sensing: raw.sensing,
            noise: raw.noise,
            frontend: raw.frontend,
            sources: raw.sources.into_iter().map(|s| s.into_inner()).collect(),
        };
        cfg.validate().map_err(|e| Error::parse(source_name, None, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ms >= 0.0) || !self.duration_ms.is_finite() {
            return Err(Error::invalid("duration_ms must be a non-negative number"));
        }
        self.sensing.validate()?;
        self.frontend.validate()?;
        let map = ChannelMap::builtin();
        if self.sensing_channels.is_empty() {
            return Err(Error::invalid("at least one sensing channel is required"));
        }
        for &c in &self.sensing_channels {
            map.zigbee_center(c)?;
        }
        for s in &self.sources {
            s.validate(&map)?;
        }
        Ok(())
    }

    pub fn radio(&self) -> Result<RadioModel> {
        RadioModel::new(ChannelMap::builtin(), MaskTable::builtin().clone(), self.frontend)
    }
}

/// Seed of the sensing node on `channel`.
pub fn scene_seed(seed: u64, channel: u8) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(u64::from(channel) + 1);
    r.next_u64()
}

/// Bursts seen by one sensing node.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRun {
    pub channel: u8,
    pub bursts: Vec<DetectedBurst>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub events: Vec<BurstEvent>,
    pub runs: Vec<ChannelRun>,
    pub ripple_threshold_db: f64,
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    cfg.validate()?;
    let radio = cfg.radio()?;
    let events = generate_traffic(&cfg.sources, &radio.map, cfg.duration_ms, cfg.seed)?;
    let mut runs = Vec::new();
    for &ch in &cfg.sensing_channels {
        let scene = Scene::new(&events, &radio, cfg.noise, cfg.sensing, ch, scene_seed(cfg.seed, ch))?;
        let count = scene.sample_count(cfg.duration_ms * 1000.0);
        runs.push(ChannelRun {
            channel: ch,
            bursts: scene.run(count),
        });
    }
    Ok(Simulation {
        events,
        runs,
        ripple_threshold_db: cfg.sensing.ripple_threshold_db,
    })
}

impl Simulation {
    pub fn bursts(&self) -> impl Iterator<Item = &DetectedBurst> {
        self.runs.iter().flat_map(|r| r.bursts.iter())
    }

    /// Complete bursts as labeled feature records.
    pub fn dataset(&self) -> Result<Dataset> {
        let mut records = Vec::new();
        for b in self.bursts() {
            if let (Some(raw), Some(label)) = (b.raw(), b.truth) {
                records.push(Record {
                    features: extract_features(raw, self.ripple_threshold_db)?,
                    label,
                    inr_db: b.inr_db,
                });
            }
        }
        Ok(Dataset::new(records))
    }

    /// Every detected burst with the class `model` assigns; incomplete bursts
    /// stay unlabeled.
    pub fn classify(&self, model: &dyn Classifier) -> Result<Vec<ClassifiedBurst>> {
        self.bursts()
            .map(|b| {
                let label = match b.raw() {
                    Some(raw) => Some(model.classify(&extract_features(raw, self.ripple_threshold_db)?)),
                    None => None,
                };
                Ok(classified(b, label))
            })
            .collect()
    }

    /// Like [`Simulation::classify`] but labeled with the ground truth.
    pub fn oracle_labels(&self) -> Vec<ClassifiedBurst> {
        self.bursts()
            .map(|b| classified(b, b.raw().and(b.truth).map(|l| l.class())))
            .collect()
    }

    /// Frame start times of events with label class `class`.
    pub fn frame_starts(&self, class: Class) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.role == Role::Frame && e.label.class() == class)
            .map(|e| e.start_us)
            .collect()
    }

    pub fn write_events_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id,source,label,role,start_us,oat_us,channel,inr_db,gain_db")?;
        for e in &self.events {
            let role = match e.role {
                Role::Frame => "frame",
                Role::Response => "response",
            };
            writeln!(
                out,
                "{},{},{},{},{:.3},{:.3},{},{:.3},{:.3}",
                e.id,
                e.source,
                e.label.code(),
                role,
                e.start_us,
                e.oat_us,
                e.channel,
                e.inr_db,
                e.gain_db
            )?;
        }
        Ok(())
    }

    pub fn write_bursts_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sensing_channel,start_us,oat_est_us,mean_dbm,complete,truth,event,inr_db")?;
        for b in self.bursts() {
            writeln!(
                out,
                "{},{:.1},{:.1},{:.3},{},{},{},{:.3}",
                b.sensing_channel,
                b.start_us,
                b.oat_est_us,
                b.mean_dbm,
                u8::from(b.raw().is_some()),
                b.truth.map_or("", |l| l.code()),
                b.event.map_or(String::new(), |e| e.to_string()),
                b.inr_db
            )?;
        }
        Ok(())
    }
}

fn classified(b: &DetectedBurst, label: Option<Class>) -> ClassifiedBurst {
    ClassifiedBurst {
        start_us: b.start_us,
        oat_us: b.oat_est_us,
        mean_dbm: b.mean_dbm,
        channel: b.sensing_channel,
        label,
    }
}

/// Parameters of the isolated-burst benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub seed: u64,
    /// Complete bursts per class.
    pub per_class: usize,
    pub inr_min_db: f64,
    pub inr_max_db: f64,
    pub sensing: SensingConfig,
    pub noise: NoiseModel,
    pub frontend: FrontEnd,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seed: 1,
            per_class: 1500,
            inr_min_db: 1.0,
            inr_max_db: 30.0,
            sensing: SensingConfig::default(),
            noise: NoiseModel::default(),
            frontend: FrontEnd::default(),
        }
    }
}

/// 802.11 variants in the benchmark, with their share of 802.11 bursts.
const WIFI_MIX: [(WifiVariant, f64); 4] = [
    (WifiVariant::B, 0.15),
    (WifiVariant::G, 0.45),
    (WifiVariant::N20, 0.25),
    (WifiVariant::N40, 0.15),
];

/// Basic-rate packets DH1, DH3, DH5 and their shares.
const BT_PACKETS: [(f64, f64); 3] = [(366.0, 0.2), (1622.0, 0.3), (2870.0, 0.5)];

/// BLE advertising channels paired with the 802.15.4 channel they overlap.
const BLE_PAIRS: [(i64, u8); 2] = [(38, 15), (39, 26)];

fn pick<T: Copy, R: Rng>(rng: &mut R, table: &[(T, f64)]) -> T {
    let mut u = rng.random::<f64>();
    for &(v, w) in table {
        if u < w {
            return v;
        }
        u -= w;
    }
    table[table.len() - 1].0
}

struct Draw {
    label: Label,
    channel: i64,
    sensing: u8,
    oat_us: f64,
    response: Option<(f64, f64, f64)>,
}

fn draw(class: Class, map: &ChannelMap, rng: &mut ChaCha8Rng) -> Result<Draw> {
    let zig = |rng: &mut ChaCha8Rng| rng.random_range(11u8..=26);
    Ok(match class {
        Class::B => {
            let sensing = zig(rng);
            let fc = map.zigbee_center(sensing)?;
            let base = (fc - 2402.0).round() as i64;
            let channels: Vec<i64> = (base - 1..=base + 1).filter(|c| (0..=78).contains(c)).collect();
            Draw {
                label: Label::B,
                channel: channels[rng.random_range(0..channels.len())],
                sensing,
                oat_us: pick(rng, &BT_PACKETS),
                response: None,
            }
        }
        Class::L => {
            let (channel, sensing) = BLE_PAIRS[rng.random_range(0..BLE_PAIRS.len())];
            Draw {
                label: Label::L,
                channel,
                sensing,
                oat_us: rng.random_range(336.0..=376.0),
                response: None,
            }
        }
        Class::Z => {
            let sensing = zig(rng);
            let psdu = rng.random_range(5..=127);
            Draw {
                label: Label::Z,
                channel: sensing as i64,
                sensing,
                oat_us: (6 + psdu) as f64 * 32.0,
                response: None,
            }
        }
        Class::W => {
            let v = pick(rng, &WIFI_MIX);
            let label = Label::W(v);
            let reach = 0.5 * v.width_mhz() - 2.0;
            loop {
                let sensing = zig(rng);
                let fc = map.zigbee_center(sensing)?;
                let channels: Vec<i64> = (1..=14)
                    .filter(|&c| map.emission_center(label, c).is_ok_and(|m| (m - fc).abs() <= reach))
                    .collect();
                if channels.is_empty() {
                    continue;
                }
                let channel = channels[rng.random_range(0..channels.len())];
                let (oat_us, ack) = match v {
                    WifiVariant::B => (rng.random_range(300.0..4500.0), 304.0),
                    WifiVariant::G => (rng.random_range(100.0..2200.0), 44.0),
                    WifiVariant::N20 => (rng.random_range(80.0..1800.0), 44.0),
                    WifiVariant::N40 => (rng.random_range(60.0..1200.0), 44.0),
                };
                // the ACK comes from the other station, at its own level
                let offset = rng.random_range(-10.0..10.0);
                break Draw {
                    label,
                    channel,
                    sensing,
                    oat_us,
                    response: Some((10.0, ack, offset)),
                };
            }
        }
    })
}

/// One isolated burst: the frame starts at a random phase of the sampling
/// grid, and its INR on the sensing channel is `inr_db`.
fn isolated(cfg: &BenchmarkConfig, radio: &RadioModel, d: &Draw, inr_db: f64, seed: u64, t0: f64) -> Result<Option<Record>> {
    let fc = radio.map.zigbee_center(d.sensing)?;
    let center = radio.map.emission_center(d.label, d.channel)?;
    let tx_inr = inr_db - radio.coupling_db(d.label, fc - center);
    let mut events = vec![BurstEvent {
        id: 0,
        source: 0,
        label: d.label,
        role: Role::Frame,
        start_us: t0,
        oat_us: d.oat_us,
        channel: d.channel,
        inr_db: tx_inr,
        gain_db: 0.0,
        interarrival_us: None,
        ripple: None::<Ripple>,
    }];
    if let Some((gap, oat, offset)) = d.response {
        events.push(BurstEvent {
            id: 1,
            role: Role::Response,
            start_us: t0 + d.oat_us + gap,
            oat_us: oat,
            inr_db: (tx_inr + offset).max(0.0),
            ..events[0].clone()
        });
    }
    let scene = Scene::new(&events, radio, cfg.noise, cfg.sensing, d.sensing, seed)?;
    let end = events.last().map_or(0.0, |e| e.end_us());
    let count = scene.sample_count(end + 2.0 * cfg.sensing.ma_window_us + 4.0 * cfg.sensing.sample_period_us);
    for b in scene.run(count) {
        if b.event == Some(0) {
            if let Some(raw) = b.raw() {
                return Ok(Some(Record {
                    features: extract_features(raw, cfg.sensing.ripple_threshold_db)?,
                    label: d.label,
                    inr_db: b.inr_db,
                }));
            }
        }
    }
    Ok(None)
}

/// Labeled dataset of `per_class` complete bursts per class, each generated
/// in isolation with a sensing-channel INR drawn uniformly from the integers
/// of the configured range.
/// Classes are interleaved so every prefix stays balanced.
pub fn build_benchmark(cfg: &BenchmarkConfig) -> Result<Dataset> {
    cfg.sensing.validate()?;
    if !(cfg.inr_max_db.floor() >= cfg.inr_min_db.ceil()) || !(cfg.inr_min_db >= 0.0) {
        return Err(Error::invalid("benchmark INR range must be non-negative and hold an integer"));
    }
    let radio = RadioModel::new(ChannelMap::builtin(), MaskTable::builtin().clone(), cfg.frontend)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut per: Vec<Vec<Record>> = vec![Vec::new(); 4];
    let mut attempts = 0usize;
    let limit = cfg.per_class.saturating_mul(4).saturating_mul(50).max(1000);
    while per.iter().any(|p| p.len() < cfg.per_class) {
        for class in Class::ALL {
            if per[class.index()].len() >= cfg.per_class {
                continue;
            }
            attempts += 1;
            if attempts > limit {
                return Err(Error::invalid(format!(
                    "benchmark could not collect {} complete bursts per class",
                    cfg.per_class
                )));
            }
            let d = draw(class, &radio.map, &mut rng)?;
            let lo = cfg.inr_min_db.ceil() as i64;
            let hi = cfg.inr_max_db.floor() as i64;
            let inr = rng.random_range(lo..=hi) as f64;
            let t0 = 500.0 + rng.random_range(0.0..cfg.sensing.sample_period_us);
            let seed = rng.next_u64();
            if let Some(r) = isolated(cfg, &radio, &d, inr, seed, t0)? {
                per[class.index()].push(r);
            }
        }
    }
    // interleave in class order
    let mut records = Vec::with_capacity(4 * cfg.per_class);
    for k in 0..cfg.per_class {
        for p in &per {
            records.push(p[k]);
        }
    }
    Ok(Dataset::new(records))
}

/// Train and test sets from independent seeds.
pub fn benchmark_pair(cfg: &BenchmarkConfig) -> Result<(Dataset, Dataset)> {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = build_benchmark(&BenchmarkConfig {
        seed: r.next_u64(),
        ..cfg.clone()
    })?;
    let test = build_benchmark(&BenchmarkConfig {
        seed: r.next_u64(),
        ..cfg.clone()
    })?;
    Ok((train, test))
}
