use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::dataset::Dataset;
use crate::classify::model::Classifier;
use crate::error::{Error, Result};
use crate::label::{Class, Label};

/// `g_m` from per-class error and record counts over the classes in `classes`.
pub fn g_m_from_counts(errors: &[usize; 4], totals: &[usize; 4], classes: &[Class]) -> f64 {
    let k = classes.len() as f64;
    classes
        .iter()
        .map(|c| errors[c.index()] as f64 / (k * totals[c.index()] as f64))
        .sum()
}

/// Mean per-class error rate of `predict` over the four classes.
pub fn misclassification(dataset: &Dataset, predict: impl Fn(&crate::sensing::FeatureVector) -> Class) -> Result<f64> {
    misclassification_over(dataset, &Class::ALL, predict)
}

/// Like [`misclassification`], with the label set restricted to `classes`.
/// Records of other classes are ignored.
pub fn misclassification_over(
    dataset: &Dataset,
    classes: &[Class],
    predict: impl Fn(&crate::sensing::FeatureVector) -> Class,
) -> Result<f64> {
    let totals = dataset.class_counts();
    for c in classes {
        if totals[c.index()] == 0 {
            return Err(Error::EmptyPartition(*c));
        }
    }
    let mut errors = [0usize; 4];
    for r in &dataset.records {
        let c = r.label.class();
        if classes.contains(&c) && predict(&r.features) != c {
            errors[c.index()] += 1;
        }
    }
    Ok(g_m_from_counts(&errors, &totals, classes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAccuracy {
    pub channel: u8,
    pub count: usize,
    pub accuracy: f64,
}

/// Confusion matrix and accuracy figures for one INR threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gamma_t_db: f64,
    /// Rows follow [`Label::ALL`], columns [`Class::ALL`].
    pub confusion: [[usize; 4]; 7],
    /// TPR per class; `None` for classes without records.
    pub tpr: [Option<f64>; 4],
    /// Mean TPR over the classes present.
    pub mean_tpr: f64,
    pub per_channel: Vec<ChannelAccuracy>,
    /// Standard deviation of the per-channel accuracies.
    pub sigma_a: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Evaluation {
    Report(EvalReport),
    /// No record reached the INR threshold.
    Empty { gamma_t_db: f64 },
}

impl Evaluation {
    pub fn report(&self) -> Option<&EvalReport> {
        match self {
            Evaluation::Report(r) => Some(r),
            Evaluation::Empty { .. } => None,
        }
    }
}

/// Evaluates `model` on records with INR at or above `gamma_t_db`.
pub fn evaluate(model: &dyn Classifier, dataset: &Dataset, gamma_t_db: f64) -> Evaluation {
    let mut confusion = [[0usize; 4]; 7];
    let mut channels: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    let mut any = false;
    for r in dataset.records.iter().filter(|r| r.inr_db >= gamma_t_db) {
        any = true;
        let p = model.classify(&r.features);
        confusion[r.label.row()][p.index()] += 1;
        let e = channels.entry(r.features.sc).or_default();
        e.0 += 1;
        if p == r.label.class() {
            e.1 += 1;
        }
    }
    if !any {
        return Evaluation::Empty { gamma_t_db };
    }
    let mut tpr = [None; 4];
    for c in Class::ALL {
        let (mut n, mut ok) = (0, 0);
        for l in Label::ALL.iter().filter(|l| l.class() == c) {
            let row = &confusion[l.row()];
            n += row.iter().sum::<usize>();
            ok += row[c.index()];
        }
        if n > 0 {
            tpr[c.index()] = Some(ok as f64 / n as f64);
        }
    }
    let present: Vec<f64> = tpr.iter().flatten().copied().collect();
    let mean_tpr = present.iter().sum::<f64>() / present.len() as f64;
    let per_channel: Vec<ChannelAccuracy> = channels
        .into_iter()
        .map(|(channel, (count, ok))| ChannelAccuracy {
            channel,
            count,
            accuracy: ok as f64 / count as f64,
        })
        .collect();
    let sigma_a = if per_channel.len() >= 2 {
        let m = per_channel.iter().map(|c| c.accuracy).sum::<f64>() / per_channel.len() as f64;
        let v = per_channel.iter().map(|c| (c.accuracy - m).powi(2)).sum::<f64>() / per_channel.len() as f64;
        Some(v.sqrt())
    } else {
        None
    };
    Evaluation::Report(EvalReport {
        gamma_t_db,
        confusion,
        tpr,
        mean_tpr,
        per_channel,
        sigma_a,
    })
}

impl EvalReport {
    /// Row-normalized rate of predicting `to` for records of class `from`.
    pub fn class_rate(&self, from: Class, to: Class) -> Option<f64> {
        let (mut n, mut k) = (0, 0);
        for l in Label::ALL.iter().filter(|l| l.class() == from) {
            let row = &self.confusion[l.row()];
            n += row.iter().sum::<usize>();
            k += row[to.index()];
        }
        (n > 0).then(|| k as f64 / n as f64)
    }

    /// Largest off-diagonal class-level rate, as `(from, to, rate)`.
    pub fn largest_confusion(&self) -> Option<(Class, Class, f64)> {
        let mut best: Option<(Class, Class, f64)> = None;
        for a in Class::ALL {
            for b in Class::ALL {
                if a == b {
                    continue;
                }
                if let Some(r) = self.class_rate(a, b) {
                    if best.is_none_or(|(_, _, x)| r > x) {
                        best = Some((a, b, r));
                    }
                }
            }
        }
        best
    }

    /// `label,n,B,L,Z,W` rows of counts followed by summary lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,n,B,L,Z,W\n");
        for l in Label::ALL {
            let row = &self.confusion[l.row()];
            let n: usize = row.iter().sum();
            let _ = writeln!(s, "{},{},{},{},{},{}", l.code(), n, row[0], row[1], row[2], row[3]);
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("INR threshold {} dB\n", self.gamma_t_db);
        let _ = writeln!(s, "{:<7}{:>7}{:>8}{:>8}{:>8}{:>8}", "label", "n", "B %", "L %", "Z %", "W %");
        for l in Label::ALL {
            let row = &self.confusion[l.row()];
            let n: usize = row.iter().sum();
            if n == 0 {
                continue;
            }
            let pct = |k: usize| 100.0 * row[k] as f64 / n as f64;
            let _ = writeln!(
                s,
                "{:<7}{:>7}{:>8.2}{:>8.2}{:>8.2}{:>8.2}",
                l.code(),
                n,
                pct(0),
                pct(1),
                pct(2),
                pct(3)
            );
        }
        for c in Class::ALL {
            if let Some(t) = self.tpr[c.index()] {
                let _ = writeln!(s, "TPR {c}: {:.2} %", 100.0 * t);
            }
        }
        let _ = writeln!(s, "mean TPR: {:.2} %", 100.0 * self.mean_tpr);
        if let Some(sa) = self.sigma_a {
            let _ = writeln!(s, "sigma_A: {:.2} %", 100.0 * sa);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::dataset::Record;
    use crate::sensing::FeatureVector;

    fn ds(labels: &[Label]) -> Dataset {
        Dataset::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| Record {
                    features: FeatureVector {
                        su: i as f64,
                        sd: 0.0,
                        sc: 11 + (i % 2) as u8,
                        tl: 7,
                        ep: -60.0,
                        ec: 0.0,
                        er: 0,
                        cca: false,
                    },
                    label: *l,
                    inr_db: i as f64,
                })
                .collect(),
        )
    }

    fn all4() -> Vec<Label> {
        let mut v = Vec::new();
        for _ in 0..2 {
            v.extend([Label::B, Label::L, Label::Z, Label::W(crate::WifiVariant::G)]);
        }
        v
    }

    #[test]
    fn perfect_and_wrong() {
        let d = ds(&all4());
        let truth: Vec<Class> = d.records.iter().map(|r| r.label.class()).collect();
        let lookup = |v: &FeatureVector| truth[v.su as usize];
        assert_eq!(misclassification(&d, lookup).unwrap(), 0.0);
        let wrong = |v: &FeatureVector| Class::from_index((truth[v.su as usize].index() + 1) % 4).unwrap();
        assert_eq!(misclassification(&d, wrong).unwrap(), 1.0);
        let half = |v: &FeatureVector| if v.su < 4.0 { truth[v.su as usize] } else { wrong(v) };
        assert_eq!(misclassification(&d, half).unwrap(), 0.5);
    }

    #[test]
    fn empty_partition_rejected() {
        let d = ds(&[Label::B, Label::L]);
        assert!(matches!(misclassification(&d, |_| Class::B), Err(Error::EmptyPartition(Class::Z))));
    }

    struct Oracle(Vec<Class>);

    impl Classifier for Oracle {
        fn classify(&self, v: &FeatureVector) -> Class {
            self.0[v.su as usize]
        }
    }

    #[test]
    fn perfect_model_gives_identity_rows() {
        let d = ds(&all4());
        let m = Oracle(d.records.iter().map(|r| r.label.class()).collect());
        let r = evaluate(&m, &d, 0.0).report().cloned().unwrap();
        assert_eq!(r.mean_tpr, 1.0);
        assert_eq!(r.sigma_a, Some(0.0));
        for l in Label::ALL {
            let row = r.confusion[l.row()];
            let n: usize = row.iter().sum();
            assert_eq!(row[l.class().index()], n);
        }
        assert_eq!(evaluate(&m, &d, 100.0), Evaluation::Empty { gamma_t_db: 100.0 });
    }
}
