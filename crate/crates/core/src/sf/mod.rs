//! Analytical model of the spectral features.
//!
//! For an interferer of shape `X` at INR `γ`, the reading of a radio tuned
//! `iδ_f` away from its center is
//! `Y(i) = 10 log10(10^((μ_N + γ + C(iδ_f)) / 10) + 10^(μ_N / 10))`, where
//! `C` is the front-end coupling relative to zero offset. The SF variation
//! for a shift `j` is `v(i) = Y(i) − Y(i + j)` over the offsets whose reading
//! exceeds `P_T + γ_T`. Its distribution is approximated by a Gaussian, and
//! the similarity of two classes is the overlap area of their Gaussians.

pub mod error;
pub mod overlap;
pub mod variation;

pub use error::{mia_upper_bound, sf_error, shift_selection_report, visible_grid, ShiftReport, ShiftRow, SfErrorGrid};
pub use overlap::gaussian_overlap;
pub use variation::{sf_variation, OffsetRange, Variation, VariationStats};
