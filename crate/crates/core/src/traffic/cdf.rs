use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous empirical CDF: `F(x) = #{s ≤ x} / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    /// Distinct sample values, ascending.
    xs: Vec<f64>,
    /// Number of samples `≤ xs[k]`.
    counts: Vec<usize>,
    n: usize,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("an empirical CDF needs at least one sample"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("CDF samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut xs: Vec<f64> = Vec::new();
        let mut counts = Vec::new();
        for (k, s) in sorted.iter().enumerate() {
            if xs.last() == Some(s) {
                *counts.last_mut().unwrap() = k + 1;
            } else {
                xs.push(*s);
                counts.push(k + 1);
            }
        }
        Ok(EmpiricalCdf { xs, counts, n: sorted.len() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Step locations.
    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v <= x);
        if k == 0 {
            0.0
        } else {
            self.counts[k - 1] as f64 / self.n as f64
        }
    }

    /// Smallest sample `x` with `F(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let need = (p.clamp(0.0, 1.0) * self.n as f64).ceil().max(1.0) as usize;
        let k = self.counts.partition_point(|&c| c < need);
        self.xs[k.min(self.xs.len() - 1)]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Two columns, `x_us,F`, one row per step.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_us,F\n");
        for (x, c) in self.xs.iter().zip(&self.counts) {
            let _ = writeln!(s, "{x},{:.6}", *c as f64 / self.n as f64);
        }
        s
    }
}

/// `sup_x |F_A(x) − F_B(x)|`.
///
/// Both functions are constant between the union of their steps, and a left
/// limit at a step equals the value at the preceding union point, so checking
/// every union point suffices.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.xs.iter().chain(&b.xs) {
        d = d.max((a.eval(x) - b.eval(x)).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let f = EmpiricalCdf::new(&[5.0]).unwrap();
        assert_eq!(f.eval(4.999), 0.0);
        assert_eq!(f.eval(5.0), 1.0);
    }

    #[test]
    fn thirds() {
        let f = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert!((f.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.median(), 2.0);
    }

    #[test]
    fn duplicates_merge() {
        let f = EmpiricalCdf::new(&[2.0, 2.0]).unwrap();
        assert_eq!(f.breakpoints(), &[2.0]);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(1.9), 0.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(EmpiricalCdf::new(&[]).is_err());
    }

    #[test]
    fn distances() {
        let a = EmpiricalCdf::new(&[0.0]).unwrap();
        let b = EmpiricalCdf::new(&[1.0]).unwrap();
        assert_eq!(ks_distance(&a, &b), 1.0);
        assert_eq!(ks_distance(&a, &a), 0.0);
        let c = EmpiricalCdf::new(&[1.0, 2.0]).unwrap();
        let d = EmpiricalCdf::new(&[1.0, 2.0, 3.0]).unwrap();
        assert!((ks_distance(&c, &d) - 1.0 / 3.0).abs() < 1e-15);
    }
}
