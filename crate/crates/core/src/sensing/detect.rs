use crate::signal::{NoiseModel, RssiTrace};

/// A maximal run of over-threshold samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub len: usize,
}

/// Runs of samples strictly above `P_T`, dropping runs too short to reach
/// `x_0` under the default schedule (three samples).
pub fn detect_bursts(trace: &RssiTrace, noise: &NoiseModel) -> Vec<Run> {
    detect_bursts_with(trace, noise, 3)
}

pub fn detect_bursts_with(trace: &RssiTrace, noise: &NoiseModel, min_len: usize) -> Vec<Run> {
    let pt = noise.threshold_dbm();
    let mut runs = Vec::new();
    let mut start = None;
    for (i, s) in trace.samples.iter().enumerate() {
        let over = *s as f64 > pt;
        match (over, start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                if i - s0 >= min_len {
                    runs.push(Run { start: s0, len: i - s0 });
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s0) = start {
        let len = trace.samples.len() - s0;
        if len >= min_len {
            runs.push(Run { start: s0, len });
        }
    }
    runs
}
