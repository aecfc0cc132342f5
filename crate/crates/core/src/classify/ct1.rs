//! Hand-built multivariate-split tree.
//!
//! The split structure is a reconstruction:
//!
//! 1. `F_CCA` set → Z.
//! 2. `p2 < F_Su ≤ p1` and `|F_Su − F_Sd| ≤ p3` → W (flat around the
//!    sensing channel, balanced side-bands).
//! 3. `F_Tl ≤ tl_max` → L (short advertising-sized bursts).
//! 4. otherwise → B.
//!
//! Features outside the model's feature set make their test false, so a
//! model restricted to the spectral features only separates W from B.

use serde::{Deserialize, Serialize};

use crate::classify::dataset::{Dataset, FeatureSet};
use crate::classify::eval::g_m_from_counts;
use crate::error::{Error, Result};
use crate::label::Class;
use crate::sensing::FeatureVector;

/// Burst length, in samples, up to which a narrowband burst counts as BLE.
pub const DEFAULT_TL_MAX: u32 = 10;

const F_SU: usize = 0;
const F_TL: usize = 3;
const F_CCA: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ct1Model {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub tl_max: u32,
    pub features: FeatureSet,
    /// `g_m` on the training set.
    pub training_error: Option<f64>,
}

impl Ct1Model {
    pub fn new(p: [f64; 3], features: FeatureSet) -> Self {
        Ct1Model {
            p1: p[0],
            p2: p[1],
            p3: p[2],
            tl_max: DEFAULT_TL_MAX,
            features,
            training_error: None,
        }
    }

    fn cca(&self, v: &FeatureVector) -> bool {
        self.features.contains(F_CCA) && v.cca
    }

    fn wideband_gate(&self, v: &FeatureVector) -> bool {
        self.features.contains(F_SU) && (v.su - v.sd).abs() <= self.p3 && v.su <= self.p1
    }

    /// Prediction for bursts that do not pass the W gate.
    fn narrowband(&self, v: &FeatureVector) -> Class {
        if self.features.contains(F_TL) && v.tl <= self.tl_max {
            Class::L
        } else {
            Class::B
        }
    }

    pub fn classify(&self, v: &FeatureVector) -> Class {
        if self.cca(v) {
            Class::Z
        } else if self.wideband_gate(v) && v.su > self.p2 {
            Class::W
        } else {
            self.narrowband(v)
        }
    }
}

/// Candidate values of each parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
}

fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn linspace_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

impl ParamGrid {
    /// Grid over the feasible box `|p1|, |p2| ≤ D_r/2`, `0 ≤ p3 ≤ D_r`.
    pub fn with_steps(step1: f64, step2: f64, step3: f64, dynamic_range_db: f64) -> Result<Self> {
        if !(step1 > 0.0 && step2 > 0.0 && step3 > 0.0 && dynamic_range_db > 0.0) {
            return Err(Error::invalid("grid steps and dynamic range must be positive"));
        }
        let h = dynamic_range_db / 2.0;
        Ok(ParamGrid {
            p1: linspace_step(-h, h, step1),
            p2: linspace_step(-h, h, step2),
            p3: linspace_step(0.0, dynamic_range_db, step3),
        })
    }

    /// `n` evenly spaced points per parameter, box edges included.
    pub fn with_points(n: usize, dynamic_range_db: f64) -> Result<Self> {
        if n == 0 || !(dynamic_range_db > 0.0) {
            return Err(Error::invalid("grid needs at least one point and a positive range"));
        }
        let h = dynamic_range_db / 2.0;
        Ok(ParamGrid {
            p1: linspace_points(-h, h, n),
            p2: linspace_points(-h, h, n),
            p3: linspace_points(0.0, dynamic_range_db, n),
        })
    }

    pub fn len(&self) -> usize {
        self.p1.len() * self.p2.len() * self.p3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Tie-break order among equally good parameter vectors.
pub fn tie_key(p: [f64; 3]) -> (f64, f64, f64, f64, f64) {
    (p[0].abs(), p[1].abs(), p[2], p[0], p[1])
}

fn better(g: f64, p: [f64; 3], best: &Option<(f64, [f64; 3])>) -> bool {
    match best {
        None => true,
        Some((bg, bp)) => g < *bg || (g == *bg && tie_key(p).partial_cmp(&tie_key(*bp)) == Some(std::cmp::Ordering::Less)),
    }
}

/// Grid search for the parameter vector minimizing `g_m` over the classes
/// present in `dataset`.
///
/// For fixed `(p1, p3)` the W gate only admits bursts with `F_Su > p2`, so the
/// error counts for every `p2` follow from one sweep over the candidates in
/// decreasing `F_Su` order.
pub fn train_ct1(dataset: &Dataset, grid: &ParamGrid, features: FeatureSet) -> Result<Ct1Model> {
    let classes = dataset.classes_present();
    if classes.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("parameter grid is empty"));
    }
    let totals = dataset.class_counts();
    let probe = Ct1Model::new([0.0; 3], features.clone());

    // errors when nothing passes the W gate
    let mut base = [0usize; 4];
    // (F_Su, |F_Su - F_Sd|, class, change in that class's error count if W)
    let mut movable: Vec<(f64, f64, usize, isize)> = Vec::new();
    for r in &dataset.records {
        let c = r.label.class();
        let v = &r.features;
        if probe.cca(v) {
            if c != Class::Z {
                base[c.index()] += 1;
            }
            continue;
        }
        let nb_wrong = probe.narrowband(v) != c;
        if nb_wrong {
            base[c.index()] += 1;
        }
        if probe.features.contains(F_SU) {
            let delta = (c != Class::W) as isize - nb_wrong as isize;
            movable.push((v.su, (v.su - v.sd).abs(), c.index(), delta));
        }
    }
    movable.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut p2_sorted = grid.p2.clone();
    p2_sorted.sort_by(|a, b| b.total_cmp(a));

    let mut best: Option<(f64, [f64; 3])> = None;
    let mut errors = [0usize; 4];
    for &p1 in &grid.p1 {
        for &p3 in &grid.p3 {
            let mut delta = [0isize; 4];
            let mut i = 0;
            for &p2 in &p2_sorted {
                while i < movable.len() && movable[i].0 > p2 {
                    let (su, d, c, dl) = movable[i];
                    if su <= p1 && d <= p3 {
                        delta[c] += dl;
                    }
                    i += 1;
                }
                for k in 0..4 {
                    errors[k] = (base[k] as isize + delta[k]) as usize;
                }
                let g = g_m_from_counts(&errors, &totals, &classes);
                let p = [p1, p2, p3];
                if better(g, p, &best) {
                    best = Some((g, p));
                }
            }
        }
    }
    let (g, p) = best.expect("grid is non-empty");
    let mut m = Ct1Model::new(p, features);
    m.training_error = Some(g);
    Ok(m)
}

/// Exhaustive evaluation of every grid point, used to cross-check
/// [`train_ct1`].
pub fn train_ct1_exhaustive(dataset: &Dataset, grid: &ParamGrid, features: FeatureSet) -> Result<Ct1Model> {
    let classes = dataset.classes_present();
    let mut best: Option<(f64, [f64; 3])> = None;
    for &p1 in &grid.p1 {
        for &p2 in &grid.p2 {
            for &p3 in &grid.p3 {
                let m = Ct1Model::new([p1, p2, p3], features.clone());
                let g = crate::classify::eval::misclassification_over(dataset, &classes, |v| m.classify(v))?;
                if better(g, [p1, p2, p3], &best) {
                    best = Some((g, [p1, p2, p3]));
                }
            }
        }
    }
    let (g, p) = best.ok_or_else(|| Error::invalid("parameter grid is empty"))?;
    let mut m = Ct1Model::new(p, features);
    m.training_error = Some(g);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_box() {
        let g = ParamGrid::with_steps(1.0, 1.0, 1.0, 100.0).unwrap();
        assert_eq!(g.p1.len(), 101);
        assert_eq!(*g.p1.first().unwrap(), -50.0);
        assert_eq!(*g.p1.last().unwrap(), 50.0);
        assert_eq!(*g.p3.last().unwrap(), 100.0);
        let g = ParamGrid::with_points(10, 100.0).unwrap();
        assert_eq!(g.len(), 1000);
        assert_eq!(*g.p2.last().unwrap(), 50.0);
    }

    #[test]
    fn cca_gates_z() {
        let m = Ct1Model::new([5.0, -5.0, 3.0], FeatureSet::all());
        let v = FeatureVector {
            su: 0.0,
            sd: 0.0,
            sc: 11,
            tl: 20,
            ep: -60.0,
            ec: 0.0,
            er: 0,
            cca: true,
        };
        assert_eq!(m.classify(&v), Class::Z);
        assert_eq!(m.classify(&FeatureVector { cca: false, ..v }), Class::W);
        let sf = Ct1Model::new([5.0, -5.0, 3.0], FeatureSet::spectral());
        assert_eq!(sf.classify(&v), Class::W);
        assert_eq!(sf.classify(&FeatureVector { su: 20.0, tl: 7, ..v }), Class::B);
    }
}
