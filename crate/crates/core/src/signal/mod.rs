//! Ground-truth synthesis and the RSSI observation chain.

pub mod channel;
pub mod rssi;
pub mod spectrum;
pub mod traffic_gen;

pub use channel::ChannelMap;
pub use rssi::{rssi_pipeline, NoiseModel, RssiTrace, SensingConfig};
pub use spectrum::{frontend_response, psd, received_power, FrontEnd, MaskTable, RadioModel, Spectrum};
pub use traffic_gen::{generate_traffic, BurstEvent, SourceSpec};
