//! Binary soft-margin SVM with a Gaussian kernel, trained by sequential
//! minimal optimization with second-order working-set selection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoConfig {
    pub gamma: f64,
    pub box_c: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            gamma: 0.125,
            box_c: 1.0,
            tolerance: 1e-3,
            max_iter: 1_000_000,
            cache_mb: 256,
        }
    }
}

/// Trained binary learner: `f(x) = Σ coef_i K(sv_i, x) + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub gamma: f64,
    pub box_c: f64,
    pub support: Vec<Vec<f64>>,
    /// Dual coefficient times label of each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * rbf(self.gamma, s, x))
            .sum::<f64>()
            + self.bias
    }

    /// Dual multipliers `α_i = |coef_i|`.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.coef.iter().map(|c| c.abs())
    }
}

/// Least-recently-used cache of kernel rows.
struct RowCache<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    order: BTreeMap<u64, usize>,
    clock: u64,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [Vec<f64>], gamma: f64, cache_mb: usize) -> Self {
        let per_row = x.len().max(1) * std::mem::size_of::<f64>();
        let capacity = ((cache_mb << 20) / per_row).max(2);
        RowCache {
            x,
            gamma,
            capacity,
            rows: HashMap::new(),
            order: BTreeMap::new(),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        let now = self.clock;
        if let Some((_, stamp)) = self.rows.get_mut(&i) {
            self.order.remove(stamp);
            *stamp = now;
            self.order.insert(now, i);
        } else {
            if self.rows.len() >= self.capacity {
                let (&old, &victim) = self.order.iter().next().expect("cache is full");
                self.order.remove(&old);
                self.rows.remove(&victim);
            }
            let xi = &self.x[i];
            let row = self.x.iter().map(|xj| rbf(self.gamma, xi, xj)).collect();
            self.rows.insert(i, (row, now));
            self.order.insert(now, i);
        }
        &self.rows[&i].0
    }
}

/// Solves the dual for labels `y ∈ {-1, +1}`. `name` labels diagnostics.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], cfg: &SmoConfig, name: &str) -> Result<BinarySvm> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::invalid("binary SVM needs matching, non-empty inputs"));
    }
    if !(cfg.gamma > 0.0 && cfg.box_c > 0.0 && cfg.tolerance > 0.0) {
        return Err(Error::invalid("SVM gamma, box constraint and tolerance must be positive"));
    }
    let c = cfg.box_c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = RowCache::new(x, cfg.gamma, cfg.cache_mb);
    let up = |a: f64, yy: f64| (yy > 0.0 && a < c) || (yy < 0.0 && a > 0.0);
    let low = |a: f64, yy: f64| (yy > 0.0 && a > 0.0) || (yy < 0.0 && a < c);

    let mut iter = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        for t in 0..n {
            if low(alpha[t], y[t]) {
                gmax2 = gmax2.max(y[t] * grad[t]);
            }
        }
        let violation = gmax + gmax2;
        if i == usize::MAX || violation < cfg.tolerance {
            break;
        }
        if iter >= cfg.max_iter {
            return Err(Error::NonConvergence {
                learner: name.to_string(),
                iterations: iter,
                violation,
                tolerance: cfg.tolerance,
            });
        }
        let ki: Vec<f64> = cache.row(i).to_vec();
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let quad = (ki[i] + 1.0 - 2.0 * ki[t]).max(TAU);
                let obj = -(b * b) / quad;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        let kj: Vec<f64> = cache.row(j).to_vec();
        let (ai, aj) = (alpha[i], alpha[j]);
        let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
        iter += 1;
    }

    // offset from free multipliers, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(x[t].clone());
            coef.push(alpha[t] * y[t]);
        }
    }
    Ok(BinarySvm {
        gamma: cfg.gamma,
        box_c: c,
        support,
        coef,
        bias: -rho,
        iterations: iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_learned() {
        let x: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let cfg = SmoConfig {
            gamma: 2.0,
            box_c: 10.0,
            ..SmoConfig::default()
        };
        let m = train_binary(&x, &y, &cfg, "xor").unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.decision(xi).signum(), *yi);
        }
        assert!(m.alphas().all(|a| a > 0.0 && a <= cfg.box_c));
        let total: f64 = m.coef.iter().sum();
        assert!(total.abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let cfg = SmoConfig {
            max_iter: 1,
            ..SmoConfig::default()
        };
        match train_binary(&x, &y, &cfg, "t") {
            Err(Error::NonConvergence { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tiny_cache_gives_same_model() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let y: Vec<f64> = (0..60).map(|i| if (i * 7) % 5 < 2 { 1.0 } else { -1.0 }).collect();
        let a = train_binary(&x, &y, &SmoConfig::default(), "a").unwrap();
        let b = train_binary(&x, &y, &SmoConfig { cache_mb: 0, ..SmoConfig::default() }, "b").unwrap();
        assert_eq!(a, b);
    }
}
