//! Univariate-split classification trees grown by Gini impurity decrease.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::dataset::{Dataset, FeatureSet};
use crate::label::Class;
use crate::sensing::FeatureVector;

/// Gini diversity index of class counts.
pub fn gini(counts: &[usize; 4]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { class: Class, counts: [usize; 4] },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A binary tree; node 0 is the root. Samples with `x[feature] <= threshold`
/// go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64; 8]) -> Class {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn d(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(t, *left).max(d(t, *right)),
            }
        }
        d(self, 0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    decrease: f64,
    feature: usize,
    threshold: f64,
}

/// Options of the grower.
pub(crate) struct Grow<'a, R: Rng> {
    pub x: &'a [[f64; 8]],
    pub y: &'a [usize],
    pub features: &'a FeatureSet,
    pub max_splits: usize,
    /// Features drawn per split, with the RNG that draws them.
    pub mtry: Option<(usize, &'a mut R)>,
}

fn counts_of(y: &[usize], idx: &[usize]) -> [usize; 4] {
    let mut c = [0; 4];
    for &i in idx {
        c[y[i]] += 1;
    }
    c
}

fn majority(counts: &[usize; 4]) -> Class {
    let mut best = 0;
    for k in 1..4 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    Class::from_index(best).unwrap()
}

fn sum_sq_over_n(c: &[usize; 4], n: usize) -> f64 {
    c.iter().map(|&k| (k * k) as f64).sum::<f64>() / n as f64
}

/// Best split of one feature over samples `idx`.
fn best_split_on(x: &[[f64; 8]], y: &[usize], idx: &[usize], feature: usize, total: &[usize; 4]) -> Option<Candidate> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let n = order.len();
    let parent = sum_sq_over_n(total, n);
    let mut left = [0usize; 4];
    let mut best: Option<Candidate> = None;
    for k in 0..n - 1 {
        left[y[order[k]]] += 1;
        let (a, b) = (x[order[k]][feature], x[order[k + 1]][feature]);
        if a == b {
            continue;
        }
        let nl = k + 1;
        let mut right = *total;
        for c in 0..4 {
            right[c] -= left[c];
        }
        let decrease = sum_sq_over_n(&left, nl) + sum_sq_over_n(&right, n - nl) - parent;
        if best.is_none_or(|bst| decrease > bst.decrease) {
            best = Some(Candidate {
                decrease,
                feature,
                threshold: a + (b - a) / 2.0,
            });
        }
    }
    best
}

impl<R: Rng> Grow<'_, R> {
    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let total = counts_of(self.y, idx);
        if total.iter().filter(|&&c| c > 0).count() < 2 {
            return None;
        }
        let mut feats: Vec<usize> = self.features.indices().to_vec();
        let take = match &mut self.mtry {
            Some((m, rng)) => {
                feats.shuffle(*rng);
                *m
            }
            None => feats.len(),
        };
        // examine the drawn features; if none splits, keep drawing
        let mut best: Option<Candidate> = None;
        let mut examined = 0;
        for &f in &feats {
            if examined >= take && best.is_some() {
                break;
            }
            examined += 1;
            if let Some(c) = best_split_on(self.x, self.y, idx, f, &total) {
                let wins = match best {
                    None => true,
                    Some(b) => {
                        c.decrease > b.decrease
                            || (c.decrease == b.decrease && (c.feature, c.threshold) < (b.feature, b.threshold))
                    }
                };
                if wins {
                    best = Some(c);
                }
            }
        }
        best
    }

    pub fn grow(mut self, root: Vec<usize>) -> Tree {
        #[derive(PartialEq)]
        struct Pending {
            decrease: f64,
            node: usize,
        }
        impl Eq for Pending {}
        impl PartialOrd for Pending {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Pending {
            fn cmp(&self, o: &Self) -> Ordering {
                self.decrease.total_cmp(&o.decrease).then(o.node.cmp(&self.node))
            }
        }

        struct State {
            nodes: Vec<Node>,
            members: Vec<Vec<usize>>,
            splits: Vec<Option<Candidate>>,
            heap: BinaryHeap<Pending>,
        }

        let add_leaf = |g: &mut Self, st: &mut State, idx: Vec<usize>| -> usize {
            let counts = counts_of(g.y, &idx);
            let id = st.nodes.len();
            st.nodes.push(Node::Leaf {
                class: majority(&counts),
                counts,
            });
            let cand = g.best_split(&idx);
            if let Some(c) = cand {
                st.heap.push(Pending {
                    decrease: c.decrease,
                    node: id,
                });
            }
            st.splits.push(cand);
            st.members.push(idx);
            id
        };

        let mut st = State {
            nodes: vec![],
            members: vec![],
            splits: vec![],
            heap: BinaryHeap::new(),
        };
        add_leaf(&mut self, &mut st, root);

        let mut n_splits = 0;
        while n_splits < self.max_splits {
            let Some(Pending { node, .. }) = st.heap.pop() else { break };
            let c = st.splits[node].expect("queued nodes have a split");
            let idx = std::mem::take(&mut st.members[node]);
            let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][c.feature] <= c.threshold);
            let left = add_leaf(&mut self, &mut st, l);
            let right = add_leaf(&mut self, &mut st, r);
            st.nodes[node] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right,
            };
            n_splits += 1;
        }
        let nodes = st.nodes;
        Tree { nodes }
    }
}

pub(crate) fn matrix(dataset: &Dataset) -> (Vec<[f64; 8]>, Vec<usize>) {
    let x = dataset.records.iter().map(|r| r.features.as_array()).collect();
    let y = dataset.records.iter().map(|r| r.label.class().index()).collect();
    (x, y)
}

/// Gini tree with a split budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub features: FeatureSet,
    pub max_splits: usize,
    pub tree: Tree,
}

impl TreeModel {
    pub fn classify(&self, v: &FeatureVector) -> Class {
        self.tree.predict_row(&v.as_array())
    }
}

/// Best-first growth: the leaf with the largest impurity decrease is split
/// next, until `max_splits` splits exist or no leaf can be split. Ties go to
/// the lowest feature index, then the lowest threshold.
pub fn train_ct2(dataset: &Dataset, max_splits: usize, features: FeatureSet) -> TreeModel {
    let (x, y) = matrix(dataset);
    let tree = Grow::<rand_chacha::ChaCha8Rng> {
        x: &x,
        y: &y,
        features: &features,
        max_splits,
        mtry: None,
    }
    .grow((0..x.len()).collect());
    TreeModel {
        features,
        max_splits,
        tree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::dataset::Record;
    use crate::label::Label;

    fn rec(su: f64, label: Label) -> Record {
        Record {
            features: FeatureVector {
                su,
                sd: 0.0,
                sc: 11,
                tl: 7,
                ep: -60.0,
                ec: 0.0,
                er: 0,
                cca: false,
            },
            label,
            inr_db: 10.0,
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 5, 0, 0]), 0.5);
        assert_eq!(gini(&[7, 0, 0, 0]), 0.0);
    }

    #[test]
    fn separable_needs_one_split() {
        let mut v: Vec<Record> = (0..10).map(|i| rec(i as f64, Label::B)).collect();
        v.extend((10..20).map(|i| rec(i as f64, Label::L)));
        let d = Dataset::new(v);
        let m = train_ct2(&d, 20, FeatureSet::all());
        assert_eq!(m.tree.split_count(), 1);
        match &m.tree.nodes[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 9.5)),
            n => panic!("{n:?}"),
        }
        for r in &d.records {
            assert_eq!(m.classify(&r.features), r.label.class());
        }
    }

    #[test]
    fn single_class_is_a_leaf() {
        let d = Dataset::new((0..5).map(|i| rec(i as f64, Label::Z)).collect());
        let m = train_ct2(&d, 20, FeatureSet::all());
        assert_eq!(m.tree.nodes.len(), 1);
        assert_eq!(m.tree.depth(), 0);
    }

    #[test]
    fn budget_is_respected() {
        let d = Dataset::new(
            (0..200)
                .map(|i| rec(i as f64, if (i / 3) % 2 == 0 { Label::B } else { Label::L }))
                .collect(),
        );
        let m = train_ct2(&d, 20, FeatureSet::all());
        assert_eq!(m.tree.split_count(), 20);
        let full = train_ct2(&d, usize::MAX, FeatureSet::all());
        assert!(full.tree.split_count() > 20);
    }
}
