//! Multi-class SVM: one-vs-one binary learners combined through a coding
//! matrix and loss-weighted decoding with the hinge loss.

use serde::{Deserialize, Serialize};

use crate::classify::dataset::{Dataset, FeatureSet};
use crate::classify::svm::{train_binary, BinarySvm, SmoConfig};
use crate::error::{Error, Result};
use crate::label::Class;
use crate::sensing::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsvmConfig {
    /// Kernel parameter `γ` of `exp(-γ‖a − b‖²)`; defaults to one over the
    /// number of features.
    pub gamma: Option<f64>,
    pub box_c: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
}

impl Default for MsvmConfig {
    fn default() -> Self {
        let s = SmoConfig::default();
        MsvmConfig {
            gamma: None,
            box_c: s.box_c,
            tolerance: s.tolerance,
            max_iter: s.max_iter,
            cache_mb: s.cache_mb,
        }
    }
}

/// Per-feature affine scaling to zero mean and unit variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let p = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut scale = vec![0.0; p];
        for r in rows {
            for k in 0..p {
                scale[k] += (r[k] - mean[k]).powi(2);
            }
        }
        for s in &mut scale {
            *s = (*s / n).sqrt();
            if !(*s > 0.0) {
                *s = 1.0;
            }
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsvmModel {
    pub features: FeatureSet,
    pub scaler: Standardizer,
    pub classes: Vec<Class>,
    /// One row per entry of `classes`, one column per learner, in {-1, 0, 1}.
    pub coding: Vec<Vec<i8>>,
    pub learners: Vec<BinarySvm>,
}

fn hinge(z: f64) -> f64 {
    (1.0 - z).max(0.0) / 2.0
}

impl MsvmModel {
    /// Loss-weighted distance of each class's code word to the learner outputs.
    pub fn losses(&self, v: &FeatureVector) -> Vec<f64> {
        let x = self.scaler.apply(&self.features.project(v));
        let f: Vec<f64> = self.learners.iter().map(|l| l.decision(&x)).collect();
        self.coding
            .iter()
            .map(|row| {
                let (mut num, mut den) = (0.0, 0.0);
                for (m, fk) in row.iter().zip(&f) {
                    let m = *m as f64;
                    num += m.abs() * hinge(m * fk);
                    den += m.abs();
                }
                num / den
            })
            .collect()
    }

    pub fn classify(&self, v: &FeatureVector) -> Class {
        let l = self.losses(v);
        let mut best = 0;
        for k in 1..l.len() {
            if l[k] < l[best] {
                best = k;
            }
        }
        self.classes[best]
    }
}

pub fn train_msvm(dataset: &Dataset, cfg: &MsvmConfig, features: FeatureSet) -> Result<MsvmModel> {
    let classes = dataset.classes_present();
    if classes.len() < 2 {
        return Err(Error::invalid("MSVM needs at least two classes"));
    }
    let raw: Vec<Vec<f64>> = dataset.records.iter().map(|r| features.project(&r.features)).collect();
    let scaler = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
    let smo = SmoConfig {
        gamma: cfg.gamma.unwrap_or(1.0 / features.len() as f64),
        box_c: cfg.box_c,
        tolerance: cfg.tolerance,
        max_iter: cfg.max_iter,
        cache_mb: cfg.cache_mb,
    };
    let labels: Vec<Class> = dataset.records.iter().map(|r| r.label.class()).collect();

    let mut coding = vec![Vec::new(); classes.len()];
    let mut learners = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let (ca, cb) = (classes[a], classes[b]);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (xi, li) in x.iter().zip(&labels) {
                if *li == ca {
                    xs.push(xi.clone());
                    ys.push(1.0);
                } else if *li == cb {
                    xs.push(xi.clone());
                    ys.push(-1.0);
                }
            }
            learners.push(train_binary(&xs, &ys, &smo, &format!("{ca}-vs-{cb}"))?);
            for (k, row) in coding.iter_mut().enumerate() {
                row.push(if k == a {
                    1
                } else if k == b {
                    -1
                } else {
                    0
                });
            }
        }
    }
    Ok(MsvmModel {
        features,
        scaler,
        classes,
        coding,
        learners,
    })
}
