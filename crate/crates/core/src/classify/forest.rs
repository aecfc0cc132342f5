use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::dataset::{Dataset, FeatureSet};
use crate::classify::tree::{matrix, Grow, Tree};
use crate::error::{Error, Result};
use crate::label::Class;
use crate::sensing::FeatureVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Features drawn per split; `None` examines all of them.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 50,
            bootstrap: true,
            max_features: Some(2),
            seed: 0,
        }
    }
}

/// Fully grown trees with majority vote; ties go to the class with the larger
/// training prior, then to the lower class index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub features: FeatureSet,
    pub class_counts: [usize; 4],
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn votes(&self, v: &FeatureVector) -> [usize; 4] {
        let x = v.as_array();
        let mut votes = [0; 4];
        for t in &self.trees {
            votes[t.predict_row(&x).index()] += 1;
        }
        votes
    }

    pub fn classify(&self, v: &FeatureVector) -> Class {
        let votes = self.votes(v);
        let mut best = 0;
        for k in 1..4 {
            if (votes[k], self.class_counts[k]) > (votes[best], self.class_counts[best]) {
                best = k;
            }
        }
        Class::from_index(best).unwrap()
    }
}

pub fn train_rfct(dataset: &Dataset, cfg: &ForestConfig, features: FeatureSet) -> Result<ForestModel> {
    if cfg.n_trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    if cfg.max_features == Some(0) {
        return Err(Error::invalid("max_features must be at least 1"));
    }
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let (x, y) = matrix(dataset);
    let n = x.len();
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let sample: Vec<usize> = if cfg.bootstrap {
            let mut s: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            s.sort_unstable();
            s
        } else {
            (0..n).collect()
        };
        let tree = Grow {
            x: &x,
            y: &y,
            features: &features,
            max_splits: usize::MAX,
            mtry: cfg.max_features.map(|m| (m, &mut rng)),
        }
        .grow(sample);
        trees.push(tree);
    }
    Ok(ForestModel {
        features,
        class_counts: dataset.class_counts(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::dataset::Record;
    use crate::classify::tree::train_ct2;
    use crate::label::Label;

    fn data() -> Dataset {
        let labels = [Label::B, Label::L, Label::Z, Label::W(crate::WifiVariant::G)];
        Dataset::new(
            (0..120)
                .map(|i| Record {
                    features: FeatureVector {
                        su: (i % 7) as f64,
                        sd: (i % 5) as f64,
                        sc: 11 + (i % 3) as u8,
                        tl: 7 + (i % 4) as u32,
                        ep: -60.0 - (i % 11) as f64,
                        ec: 0.0,
                        er: 0,
                        cca: i % 13 == 0,
                    },
                    label: labels[(i * 7 / 5) % 4],
                    inr_db: 10.0,
                })
                .collect(),
        )
    }

    #[test]
    fn degenerate_forest_is_a_full_tree() {
        let d = data();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            max_features: None,
            seed: 4,
        };
        let f = train_rfct(&d, &cfg, FeatureSet::all()).unwrap();
        let t = train_ct2(&d, usize::MAX, FeatureSet::all());
        assert_eq!(f.trees[0], t.tree);
    }

    #[test]
    fn votes_sum_to_tree_count() {
        let d = data();
        let f = train_rfct(
            &d,
            &ForestConfig {
                n_trees: 9,
                seed: 1,
                ..ForestConfig::default()
            },
            FeatureSet::all(),
        )
        .unwrap();
        for r in &d.records {
            assert_eq!(f.votes(&r.features).iter().sum::<usize>(), 9);
        }
        assert!(train_rfct(&d, &ForestConfig { n_trees: 0, ..ForestConfig::default() }, FeatureSet::all()).is_err());
    }
}
