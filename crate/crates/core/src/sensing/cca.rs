use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::label::{Class, Label};
use crate::signal::rssi::CcaConfig;

/// CCA Mode 2 outcome for a burst whose ground truth is `label`, given a
/// uniform draw `u` in `[0, 1)`.
pub fn cca_mode2(label: Option<Label>, cfg: &CcaConfig, u: f64) -> bool {
    let p = match label.map(Label::class) {
        Some(Class::Z) => cfg.p_detect,
        _ => cfg.p_false,
    };
    u < p
}

/// Seeded CCA emulation addressed by burst index, so outcomes do not depend on
/// how many other bursts were assessed.
#[derive(Clone, Copy, Debug)]
pub struct CcaOracle {
    pub seed: u64,
    pub cfg: CcaConfig,
}

impl CcaOracle {
    pub fn assess(&self, label: Option<Label>, index: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0xCCA2);
        rng.set_word_pos(index as u128 * 16);
        cca_mode2(label, &self.cfg, rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_rate() {
        let o = CcaOracle {
            seed: 11,
            cfg: CcaConfig {
                p_detect: 0.9786,
                p_false: 0.0,
            },
        };
        let hits = (0..10_000).filter(|i| o.assess(Some(Label::Z), *i)).count();
        let rate = hits as f64 / 10_000.0;
        // three binomial standard deviations
        assert!((rate - 0.9786).abs() < 3.0 * (0.9786f64 * 0.0214 / 1e4).sqrt(), "{rate}");
        let w = Some(Label::W(crate::WifiVariant::G));
        assert!((0..10_000).all(|i| !o.assess(w, i)));
    }

    #[test]
    fn reproducible() {
        let o = CcaOracle {
            seed: 3,
            cfg: CcaConfig::default(),
        };
        let a: Vec<bool> = (0..200).map(|i| o.assess(Some(Label::Z), i)).collect();
        let b: Vec<bool> = (0..200).map(|i| o.assess(Some(Label::Z), i)).collect();
        assert_eq!(a, b);
    }
}
