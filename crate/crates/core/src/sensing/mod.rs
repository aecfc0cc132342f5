//! Burst detection, the intra-burst sampling schedule, and feature extraction.

pub mod cca;
pub mod detect;
pub mod features;
pub mod sampler;

pub use cca::{cca_mode2, CcaOracle};
pub use detect::{detect_bursts, detect_bursts_with, Run};
pub use features::{extract_features, FeatureVector, RawBurstSamples, FEATURE_NAMES};
pub use sampler::{sample_burst, Acquisition, BurstOutcome, DetectedBurst, Scene};
