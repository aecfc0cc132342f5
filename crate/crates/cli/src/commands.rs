use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use idi_core::classify::{
    evaluate, misclassification_over, train_ct1, train_ct2, train_msvm, train_rfct, Classifier, ClassifierModel, Dataset,
    Evaluation, FeatureSet, ForestConfig, MsvmConfig, ParamGrid,
};
use idi_core::scenario::{benchmark_pair, scene_seed, simulate, BenchmarkConfig, ScenarioConfig};
use idi_core::sensing::{Scene, FEATURE_NAMES};
use idi_core::sf::{mia_upper_bound, sf_error, shift_selection_report, visible_grid, OffsetRange};
use idi_core::signal::{ChannelMap, MaskTable, NoiseModel, RadioModel, SensingConfig};
use idi_core::traffic::{interarrivals, ks_sweep, label_traffic_stats, ClassifiedBurst, EmpiricalCdf, TrafficOutcome};
use idi_core::{Class, Label};

use crate::manifest::{self, Manifest, Outputs};
use crate::Failure;

/// A reproducible command. This is what a manifest records.
#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", content = "args", rename_all = "kebab-case")]
pub enum Invocation {
    /// Simulate a scenario, or build the isolated-burst benchmark.
    Simulate(SimulateArgs),
    /// Train a classifier on a feature CSV.
    Train(TrainArgs),
    /// Evaluate a model over a sweep of INR thresholds.
    Evaluate(EvaluateArgs),
    /// Spectral-feature error curves and the accuracy bound.
    AnalyzeSf(AnalyzeSfArgs),
    /// Per-label traffic CDFs of a scenario and the K-S threshold sweep.
    Traffic(TrafficArgs),
    /// Masks, front-end response, coupling curves and RSSI traces.
    Export(ExportArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long, required_unless_present = "benchmark", conflicts_with = "benchmark")]
    pub config: Option<PathBuf>,
    /// Build the benchmark train and test sets instead of running a scenario.
    #[arg(long)]
    pub benchmark: bool,
    /// Overrides the scenario seed; the benchmark default is 1.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub inr_min_db: f64,
    #[arg(long, default_value_t = 30.0)]
    pub inr_max_db: f64,
    /// Also write the uninterrupted center-band RSSI trace of each sensing channel.
    #[arg(long)]
    pub traces: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ct1,
    Ct2,
    Rfct,
    Msvm,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Feature CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Feature columns to use, e.g. `f_su,f_sd,f_sc`; all by default.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Keep only records of these classes, e.g. `W,B`.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// CT1 grid step in dB for all three parameters.
    #[arg(long, default_value_t = 1.0)]
    pub ct1_step_db: f64,
    /// CT2 split budget.
    #[arg(long, default_value_t = 20)]
    pub max_splits: usize,
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    /// Seed of the forest's bootstrap and feature draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap of each binary SVM.
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// INR thresholds in dB.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])]
    pub gamma_t: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeSfArgs {
    /// Scenario file whose sensing, noise and front-end settings are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label pairs `A:B`; the first pair also drives the accuracy bound.
    #[arg(long, value_delimiter = ',', default_value = "W-g:B")]
    pub pairs: Vec<String>,
    /// Shifts in frequency steps.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5, 6])]
    pub js: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0])]
    pub gamma_t: Vec<f64>,
    /// INR grid: every integer dB value in this range.
    #[arg(long, default_value_t = 1.0)]
    pub inr_min_db: f64,
    #[arg(long, default_value_t = 30.0)]
    pub inr_max_db: f64,
    /// Shift used for the accuracy bound.
    #[arg(long, default_value_t = 2)]
    pub bound_j: i64,
    /// Accuracy without INR thresholding, given directly.
    #[arg(long, conflicts_with = "model")]
    pub a0: Option<f64>,
    /// Spectral-only model whose measured accuracy is set against the bound.
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub data: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct TrafficArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Model that labels the bursts.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    pub model: Option<PathBuf>,
    /// Label complete bursts with the ground truth instead of a model.
    #[arg(long)]
    pub oracle: bool,
    /// Sensing channel; the first configured one by default.
    #[arg(long)]
    pub channel: Option<u8>,
    /// Class whose IT-CDF is compared with the ground truth.
    #[arg(long, default_value = "W")]
    pub label: String,
    #[arg(long, default_value_t = -100.0)]
    pub min_rssi_dbm: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_oat_us: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [-100.0, -95.0, -90.0, -85.0, -80.0, -75.0, -70.0, -65.0, -60.0])]
    pub rssi_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 108.0, 216.0, 270.0, 324.0, 378.0, 432.0, 540.0, 756.0, 1080.0])]
    pub oat_grid: Vec<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Directory for the new outputs.
    #[arg(long, short)]
    pub out: PathBuf,
}

impl Invocation {
    fn out(&self) -> &Path {
        match self {
            Invocation::Simulate(a) => &a.out,
            Invocation::Train(a) => &a.out,
            Invocation::Evaluate(a) => &a.out,
            Invocation::AnalyzeSf(a) => &a.out,
            Invocation::Traffic(a) => &a.out,
            Invocation::Export(a) => &a.out,
        }
    }

    fn out_mut(&mut self) -> &mut PathBuf {
        match self {
            Invocation::Simulate(a) => &mut a.out,
            Invocation::Train(a) => &mut a.out,
            Invocation::Evaluate(a) => &mut a.out,
            Invocation::AnalyzeSf(a) => &mut a.out,
            Invocation::Traffic(a) => &mut a.out,
            Invocation::Export(a) => &mut a.out,
        }
    }

    fn config(&self) -> Option<&Path> {
        match self {
            Invocation::Simulate(a) => a.config.as_deref(),
            Invocation::AnalyzeSf(a) => a.config.as_deref(),
            Invocation::Traffic(a) => Some(&a.config),
            Invocation::Export(a) => Some(&a.config),
            _ => None,
        }
    }

    fn inputs_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            Invocation::Simulate(a) => a.config.iter_mut().collect(),
            Invocation::Train(a) => vec![&mut a.data],
            Invocation::Evaluate(a) => vec![&mut a.model, &mut a.data],
            Invocation::AnalyzeSf(a) => a.config.iter_mut().chain(a.model.iter_mut()).chain(a.data.iter_mut()).collect(),
            Invocation::Traffic(a) => std::iter::once(&mut a.config).chain(a.model.iter_mut()).collect(),
            Invocation::Export(a) => vec![&mut a.config],
        }
    }

    /// Makes every path absolute so the manifest does not depend on the
    /// working directory.
    fn resolve_paths(&mut self) -> Result<(), Failure> {
        for p in self.inputs_mut() {
            *p = p.canonicalize().map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        }
        let out = self.out_mut();
        *out = std::path::absolute(&*out).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
        Ok(())
    }
}

/// Runs `inv` and writes its outputs and manifest.
pub fn execute(mut inv: Invocation) -> Result<Manifest, Failure> {
    inv.resolve_paths()?;
    let inputs: Vec<PathBuf> = inv.clone().inputs_mut().into_iter().map(|p| p.clone()).collect();
    let config = inv.config().map(Path::to_path_buf);
    let mut out = Outputs::create(inv.out())?;
    let seed = match &inv {
        Invocation::Simulate(a) => cmd_simulate(a, &mut out)?,
        Invocation::Train(a) => cmd_train(a, &mut out)?,
        Invocation::Evaluate(a) => cmd_evaluate(a, &mut out)?,
        Invocation::AnalyzeSf(a) => cmd_analyze_sf(a, &mut out)?,
        Invocation::Traffic(a) => cmd_traffic(a, &mut out)?,
        Invocation::Export(a) => cmd_export(a, &mut out)?,
    };
    let dir = inv.out().to_path_buf();
    let mut m = Manifest::new(inv, seed, &inputs, config.as_deref())?;
    m.outputs = out.into_digests();
    let path = dir.join(manifest::FILE);
    std::fs::write(&path, m.to_json()?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok(m)
}

/// Replays a manifest into a new directory and checks that every output is
/// byte-identical.
pub fn rerun(a: &RerunArgs) -> Result<(), Failure> {
    let old = Manifest::load(&a.manifest)?;
    let changed = old.changed_inputs();
    if !changed.is_empty() {
        return Err(Failure::data(format!(
            "inputs changed since the manifest was written: {}",
            changed.join(", ")
        )));
    }
    let mut inv = old.command.clone();
    *inv.out_mut() = a.out.clone();
    let new = execute(inv)?;
    let mut differ = Vec::new();
    for (name, digest) in &old.outputs {
        if new.outputs.get(name) != Some(digest) {
            differ.push(name.clone());
        }
    }
    differ.extend(new.outputs.keys().filter(|k| !old.outputs.contains_key(*k)).cloned());
    if !differ.is_empty() {
        return Err(Failure::data(format!("outputs differ from the manifest: {}", differ.join(", "))));
    }
    println!("{} outputs identical to {}", new.outputs.len(), a.manifest.display());
    Ok(())
}

fn dataset_csv(d: &Dataset) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    Ok(buf)
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let f = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Dataset::read_csv(BufReader::new(f)).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn parse_classes(names: &Option<Vec<String>>) -> Result<Option<Vec<Class>>, Failure> {
    names
        .as_ref()
        .map(|v| v.iter().map(|s| s.parse::<Class>().map_err(|e| Failure::usage(e.to_string()))).collect())
        .transpose()
}

fn keep_classes(d: Dataset, classes: &Option<Vec<Class>>) -> Dataset {
    match classes {
        Some(c) => d.filter(|r| c.contains(&r.label.class())),
        None => d,
    }
}

fn feature_names(fs: &FeatureSet) -> String {
    fs.indices().iter().map(|&i| FEATURE_NAMES[i]).collect::<Vec<_>>().join(",")
}

fn cmd_simulate(a: &SimulateArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    if a.benchmark {
        let cfg = BenchmarkConfig {
            seed: a.seed.unwrap_or(1),
            per_class: a.per_class,
            inr_min_db: a.inr_min_db,
            inr_max_db: a.inr_max_db,
            ..Default::default()
        };
        let (train, test) = benchmark_pair(&cfg)?;
        out.write("train.csv", dataset_csv(&train)?)?;
        out.write("test.csv", dataset_csv(&test)?)?;
        println!("benchmark: {} training and {} test records", train.len(), test.len());
        return Ok(Some(cfg.seed));
    }
    let path = a.config.as_deref().expect("clap requires --config without --benchmark");
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let sim = simulate(&cfg)?;
    let mut buf = Vec::new();
    sim.write_events_csv(&mut buf)?;
    out.write("events.csv", buf)?;
    let mut buf = Vec::new();
    sim.write_bursts_csv(&mut buf)?;
    out.write("bursts.csv", buf)?;
    let data = sim.dataset()?;
    out.write("features.csv", dataset_csv(&data)?)?;
    if a.traces {
        let radio = cfg.radio()?;
        for &ch in &cfg.sensing_channels {
            let scene = Scene::new(&sim.events, &radio, cfg.noise, cfg.sensing, ch, scene_seed(cfg.seed, ch))?;
            let trace = scene.trace(scene.sample_count(cfg.duration_ms * 1000.0));
            let mut buf = Vec::new();
            trace.write_csv(&sim.events, &mut buf)?;
            out.write(&format!("trace_ch{ch}.csv"), buf)?;
        }
    }
    let counts = data.class_counts();
    println!(
        "{} events, {} bursts, {} complete (B {}, L {}, Z {}, W {})",
        sim.events.len(),
        sim.bursts().count(),
        data.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    Ok(Some(cfg.seed))
}

fn cmd_train(a: &TrainArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    let classes = parse_classes(&a.classes)?;
    let data = keep_classes(read_dataset(&a.data)?, &classes);
    let fs = match &a.features {
        Some(names) => {
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            FeatureSet::from_names(&names).map_err(|e| Failure::usage(e.to_string()))?
        }
        None => FeatureSet::all(),
    };
    let sensing = SensingConfig::default();
    let dynamic_range = f64::from(sensing.range_max_dbm - sensing.range_min_dbm);
    let s = a.ct1_step_db;
    let model = match a.method {
        Method::Ct1 => {
            let grid = ParamGrid::with_steps(s, s, s, dynamic_range).map_err(|e| Failure::usage(e.to_string()))?;
            ClassifierModel::Ct1(train_ct1(&data, &grid, fs.clone())?)
        }
        Method::Ct2 => {
            if data.is_empty() {
                return Err(Failure::data("training set is empty"));
            }
            ClassifierModel::Ct2(train_ct2(&data, a.max_splits, fs.clone()))
        }
        Method::Rfct => {
            let cfg = ForestConfig {
                n_trees: a.trees,
                seed: a.seed,
                ..Default::default()
            };
            ClassifierModel::Rfct(train_rfct(&data, &cfg, fs.clone())?)
        }
        Method::Msvm => {
            let mut cfg = MsvmConfig::default();
            if let Some(m) = a.max_iter {
                cfg.max_iter = m;
            }
            ClassifierModel::Msvm(train_msvm(&data, &cfg, fs.clone())?)
        }
    };
    out.write("model.json", model.to_json()?)?;

    let counts = data.class_counts();
    let g_m = misclassification_over(&data, &data.classes_present(), |v| model.classify(v))?;
    let mut r = String::new();
    let _ = writeln!(r, "method {}", model.kind());
    let _ = writeln!(
        r,
        "records {} (B {}, L {}, Z {}, W {})",
        data.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    let _ = writeln!(r, "features {}", feature_names(&fs));
    let _ = writeln!(r, "training misclassification g_m {g_m:.6}");
    match &model {
        ClassifierModel::Ct1(m) => {
            let _ = writeln!(r, "parameters p1 {} p2 {} p3 {}", m.p1, m.p2, m.p3);
        }
        ClassifierModel::Ct2(m) => {
            let _ = writeln!(r, "splits {} depth {}", m.tree.split_count(), m.tree.depth());
        }
        ClassifierModel::Rfct(m) => {
            let splits: usize = m.trees.iter().map(|t| t.split_count()).sum();
            let _ = writeln!(r, "trees {} total splits {}", m.trees.len(), splits);
        }
        ClassifierModel::Msvm(m) => {
            let sv: usize = m.learners.iter().map(|l| l.support.len()).sum();
            let it: usize = m.learners.iter().map(|l| l.iterations).sum();
            let _ = writeln!(r, "learners {} support vectors {} iterations {}", m.learners.len(), sv, it);
        }
    }
    out.write("training.txt", &r)?;
    print!("{r}");
    Ok(Some(a.seed))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    let model = ClassifierModel::load(&a.model).map_err(|e| Failure::data(format!("{}: {e}", a.model.display())))?;
    let classes = parse_classes(&a.classes)?;
    let data = keep_classes(read_dataset(&a.data)?, &classes);
    let mut summary = String::from("gamma_t_db,n,tpr_B,tpr_L,tpr_Z,tpr_W,mean_tpr,sigma_a\n");
    let mut confusion = String::from("gamma_t_db,label,n,B,L,Z,W\n");
    let mut channels = String::from("gamma_t_db,channel,count,accuracy\n");
    let mut tables = String::new();
    for &gt in &a.gamma_t {
        match evaluate(&model, &data, gt) {
            Evaluation::Empty { .. } => {
                let _ = writeln!(summary, "{gt},0,,,,,,");
                let _ = writeln!(tables, "INR threshold {gt} dB: no records\n");
            }
            Evaluation::Report(r) => {
                let n: usize = r.confusion.iter().flatten().sum();
                let _ = writeln!(
                    summary,
                    "{gt},{n},{},{},{},{},{:.6},{}",
                    fmt_opt(r.tpr[0]),
                    fmt_opt(r.tpr[1]),
                    fmt_opt(r.tpr[2]),
                    fmt_opt(r.tpr[3]),
                    r.mean_tpr,
                    fmt_opt(r.sigma_a)
                );
                for line in r.to_csv().lines().skip(1) {
                    let _ = writeln!(confusion, "{gt},{line}");
                }
                for c in &r.per_channel {
                    let _ = writeln!(channels, "{gt},{},{},{:.6}", c.channel, c.count, c.accuracy);
                }
                tables.push_str(&r.to_table());
                tables.push('\n');
            }
        }
    }
    out.write("summary.csv", &summary)?;
    out.write("confusion.csv", &confusion)?;
    out.write("per_channel.csv", &channels)?;
    out.write("report.txt", &tables)?;
    print!("{summary}");
    Ok(None)
}

fn parse_pair(s: &str) -> Result<(Label, Label), Failure> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("pair `{s}` is not of the form A:B")))?;
    let p = |x: &str| x.parse::<Label>().map_err(|e| Failure::usage(e.to_string()));
    Ok((p(a)?, p(b)?))
}

fn cmd_analyze_sf(a: &AnalyzeSfArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    let (sensing, noise, radio) = match &a.config {
        Some(p) => {
            let cfg = ScenarioConfig::load(p)?;
            (cfg.sensing, cfg.noise, cfg.radio()?)
        }
        None => (SensingConfig::default(), NoiseModel::default(), RadioModel::builtin()),
    };
    let pairs: Vec<(Label, Label)> = a.pairs.iter().map(|s| parse_pair(s)).collect::<Result<_, _>>()?;
    if pairs.is_empty() {
        return Err(Failure::usage("at least one label pair is required"));
    }
    let lo = a.inr_min_db.ceil() as i64;
    let hi = a.inr_max_db.floor() as i64;
    if hi < lo {
        return Err(Failure::usage("INR range holds no integer"));
    }
    let grid: Vec<f64> = (lo..=hi).map(|g| g as f64).collect();
    let range = OffsetRange {
        step_mhz: sensing.freq_step_mhz,
        ..OffsetRange::default()
    };
    let masks = MaskTable::builtin();
    let report = shift_selection_report(&pairs, masks, radio.response(), &a.js, &a.gamma_t, &grid, &noise, range)?;
    out.write("shift_report.csv", report.to_csv())?;
    for &(x, y) in &pairs {
        for &gt in &a.gamma_t {
            if let Some(f) = report.flagged(x, y, gt) {
                println!("{x} vs {y}, γ_T {gt} dB: flagged shift {} MHz (E {:.4})", f.shift_mhz, f.error);
            }
        }
    }

    let (x, y) = pairs[0];
    let a0_and_exp: Option<(f64, Vec<Option<f64>>)> = match (&a.model, &a.data, a.a0) {
        (Some(m), Some(d), _) => {
            let model = ClassifierModel::load(m).map_err(|e| Failure::data(format!("{}: {e}", m.display())))?;
            let keep = [x.class(), y.class()];
            let data = read_dataset(d)?.filter(|r| keep.contains(&r.label.class()));
            let acc = |gt: f64| evaluate(&model, &data, gt).report().map(|r| r.mean_tpr);
            let a0 = acc(0.0).ok_or_else(|| Failure::data("no records of the bound pair in the dataset"))?;
            Some((a0, a.gamma_t.iter().map(|&gt| acc(gt)).collect()))
        }
        (_, _, Some(a0)) => Some((a0, vec![None; a.gamma_t.len()])),
        _ => None,
    };
    if let Some((a0, exp)) = a0_and_exp {
        let mut s = String::from("label_a,label_b,gamma_t_db,j,error,a0,bound,experimental\n");
        for (&gt, e) in a.gamma_t.iter().zip(exp) {
            let g = visible_grid(&grid, gt, &noise);
            // nothing visible at this threshold: both labels look alike
            let error = if g.is_empty() {
                1.0
            } else {
                sf_error(&masks.shape(x), &masks.shape(y), radio.response(), a.bound_j, &g, &g, None, gt, &noise, range)?
                    .error
            };
            let bound = mia_upper_bound(a0, error).map_err(|e| Failure::usage(e.to_string()))?;
            let _ = writeln!(s, "{x},{y},{gt},{},{error:.6},{a0:.6},{bound:.6},{}", a.bound_j, fmt_opt(e));
        }
        out.write("mia_bound.csv", &s)?;
        print!("{s}");
    }
    Ok(None)
}

fn cdf_file(out: &mut Outputs, name: &str, cdf: &EmpiricalCdf) -> Result<(), Failure> {
    out.write(name, cdf.to_csv())
}

fn cmd_traffic(a: &TrafficArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    let cfg = ScenarioConfig::load(&a.config)?;
    let label: Class = a.label.parse().map_err(|e: idi_core::Error| Failure::usage(e.to_string()))?;
    let channel = a.channel.unwrap_or(cfg.sensing_channels[0]);
    if !cfg.sensing_channels.contains(&channel) {
        return Err(Failure::usage(format!("channel {channel} is not a sensing channel of the scenario")));
    }
    let sim = simulate(&cfg)?;
    let bursts: Vec<ClassifiedBurst> = match &a.model {
        Some(m) => {
            let model = ClassifierModel::load(m).map_err(|e| Failure::data(format!("{}: {e}", m.display())))?;
            sim.classify(&model)?
        }
        None => sim.oracle_labels(),
    };
    let bursts: Vec<ClassifiedBurst> = bursts.into_iter().filter(|b| b.channel == channel).collect();

    let mut csv = String::from("start_us,oat_us,mean_dbm,channel,label\n");
    for b in &bursts {
        let l = b.label.map_or("", |c| c.code());
        let _ = writeln!(csv, "{:.1},{:.1},{:.3},{},{l}", b.start_us, b.oat_us, b.mean_dbm, b.channel);
    }
    out.write("classified.csv", &csv)?;

    let mut summary = String::from("label,channel,count,median_it_us,median_oat_us\n");
    for c in Class::ALL {
        if let TrafficOutcome::Stats(s) = label_traffic_stats(&bursts, c, channel, a.min_rssi_dbm, a.min_oat_us)? {
            cdf_file(out, &format!("oat_cdf_{}.csv", c.code()), &s.oat_cdf)?;
            if let Some(it) = &s.it_cdf {
                cdf_file(out, &format!("it_cdf_{}.csv", c.code()), it)?;
            }
            let _ = writeln!(
                summary,
                "{},{channel},{},{},{}",
                c.code(),
                s.count,
                s.it_cdf.as_ref().map_or(String::new(), |c| c.median().to_string()),
                s.oat_cdf.median()
            );
        }
    }
    out.write("summary.csv", &summary)?;
    print!("{summary}");

    let truth = interarrivals(&sim.frame_starts(label));
    if truth.is_empty() {
        println!("no ground-truth {} interarrivals; K-S sweep skipped", label.code());
        return Ok(Some(cfg.seed));
    }
    let reference = EmpiricalCdf::new(&truth)?;
    cdf_file(out, &format!("it_cdf_{}_truth.csv", label.code()), &reference)?;
    let sweep = ks_sweep(&bursts, label, &reference, &a.rssi_grid, &a.oat_grid)?;
    out.write("ks_sweep.csv", sweep.to_csv())?;
    let mut best = String::from("label,min_rssi_dbm,min_oat_us,distance\n");
    if let Some((r, o, d)) = sweep.best() {
        let _ = writeln!(best, "{},{r},{o},{d:.6}", label.code());
        println!("K-S minimum {d:.4} at power ≥ {r} dBm, OAT ≥ {o} µs");
    }
    out.write("ks_best.csv", &best)?;
    Ok(Some(cfg.seed))
}

fn cmd_export(a: &ExportArgs, out: &mut Outputs) -> Result<Option<u64>, Failure> {
    let cfg = ScenarioConfig::load(&a.config)?;
    let radio = cfg.radio()?;
    let masks = MaskTable::builtin();

    let mut s = String::from("label,offset_mhz,level_db\n");
    for l in Label::ALL {
        for (f, db) in masks.breakpoints(l) {
            let _ = writeln!(s, "{l},{f},{db}");
        }
    }
    out.write("masks.csv", &s)?;

    let h = radio.response();
    let mut s = String::from("offset_mhz,gain_db\n");
    for (k, db) in h.density_db().iter().enumerate() {
        let _ = writeln!(s, "{},{db:.6}", h.freq_mhz(k));
    }
    out.write("response.csv", &s)?;

    let mut s = String::from("label,offset_mhz,coupling_db\n");
    for l in Label::ALL {
        for off in -40..=40 {
            let _ = writeln!(s, "{l},{off},{:.6}", radio.coupling_db(l, f64::from(off)));
        }
    }
    out.write("coupling.csv", &s)?;

    out.write("channels.txt", ChannelMap::builtin_text())?;

    let sim = simulate(&cfg)?;
    let mut buf = Vec::new();
    sim.write_events_csv(&mut buf)?;
    out.write("events.csv", buf)?;
    for &ch in &cfg.sensing_channels {
        let scene = Scene::new(&sim.events, &radio, cfg.noise, cfg.sensing, ch, scene_seed(cfg.seed, ch))?;
        let trace = scene.trace(scene.sample_count(cfg.duration_ms * 1000.0));
        let mut buf = Vec::new();
        trace.write_csv(&sim.events, &mut buf)?;
        out.write(&format!("trace_ch{ch}.csv"), buf)?;
    }
    println!("wrote {}", out.names().collect::<Vec<_>>().join(", "));
    Ok(Some(cfg.seed))
}
