//! Spectral shapes, the receiver front-end and the power-coupling kernel.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{ColumnarTable, Version};
use crate::label::Label;
use crate::signal::channel::ChannelMap;

/// Default frequency resolution of synthesised spectra.
pub const GRID_STEP_MHZ: f64 = 0.125;
/// Default grid half-width; wide enough for a 40 MHz mask plus its skirts.
pub const GRID_HALF_SPAN_MHZ: f64 = 64.0;
pub const MAX_GRID_STEP_MHZ: f64 = 0.25;

const BUILTIN_MASKS: &str = include_str!("../../data/masks.txt");
pub const MASK_FORMAT: &str = "idi-masks";
pub const MASK_VERSION: Version = Version::new(1, 0);

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Power spectral density sampled on a uniform grid centred at 0 MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    step_mhz: f64,
    density_db: Vec<f64>,
    normalized: bool,
}

impl Spectrum {
    /// `density_db[k]` sits at `(k - (len - 1) / 2) * step_mhz`.
    pub fn new(step_mhz: f64, density_db: Vec<f64>) -> Result<Self> {
        if !(step_mhz > 0.0 && step_mhz <= MAX_GRID_STEP_MHZ) {
            return Err(Error::invalid(format!(
                "grid step must lie in (0, {MAX_GRID_STEP_MHZ}] MHz, got {step_mhz}"
            )));
        }
        if density_db.len() % 2 == 0 {
            return Err(Error::invalid("spectrum grid must have an odd number of points"));
        }
        if let Some(v) = density_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("spectrum density must be finite, found {v}")));
        }
        Ok(Spectrum {
            step_mhz,
            density_db,
            normalized: false,
        })
    }

    /// Samples `f(offset_mhz) -> dB` on a symmetric grid.
    pub fn from_fn(step_mhz: f64, half_span_mhz: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let half = (half_span_mhz / step_mhz).round() as i64;
        let density = (-half..=half).map(|k| f(k as f64 * step_mhz)).collect();
        Self::new(step_mhz, density)
    }

    /// Scales the density so that its linear integral is one.
    pub fn normalized(mut self) -> Self {
        let offset = lin_to_db(self.linear_integral());
        for d in &mut self.density_db {
            *d -= offset;
        }
        self.normalized = true;
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn step_mhz(&self) -> f64 {
        self.step_mhz
    }

    pub fn density_db(&self) -> &[f64] {
        &self.density_db
    }

    pub fn len(&self) -> usize {
        self.density_db.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn half(&self) -> usize {
        (self.density_db.len() - 1) / 2
    }

    pub fn half_span_mhz(&self) -> f64 {
        self.half() as f64 * self.step_mhz
    }

    pub fn freq_mhz(&self, k: usize) -> f64 {
        (k as f64 - self.half() as f64) * self.step_mhz
    }

    /// Trapezoidal integral of the linear density over the grid.
    pub fn linear_integral(&self) -> f64 {
        let n = self.density_db.len();
        let mut acc = 0.0;
        for (k, d) in self.density_db.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * db_to_lin(*d);
        }
        acc * self.step_mhz
    }

    /// Linear density at an arbitrary offset, interpolated linearly between
    /// grid points. Zero outside the grid.
    pub fn linear_at(&self, f_mhz: f64) -> f64 {
        let pos = f_mhz / self.step_mhz + self.half() as f64;
        if pos < 0.0 || pos > (self.density_db.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let a = db_to_lin(self.density_db[i]);
        if frac == 0.0 {
            return a;
        }
        let b = db_to_lin(self.density_db[i + 1]);
        a + (b - a) * frac
    }
}

/// Piecewise-linear symmetric transmit masks keyed by label.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskTable {
    masks: BTreeMap<Label, Vec<(f64, f64)>>,
}

impl MaskTable {
    pub fn builtin() -> &'static MaskTable {
        static CELL: OnceLock<MaskTable> = OnceLock::new();
        CELL.get_or_init(|| MaskTable::parse(BUILTIN_MASKS, "masks.txt").expect("built-in masks are valid"))
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_MASKS
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let table = ColumnarTable::parse(text, source, MASK_FORMAT, MASK_VERSION, &["label", "offset_mhz", "level_db"])?;
        let mut masks: BTreeMap<Label, Vec<(f64, f64)>> = BTreeMap::new();
        for row in &table.rows {
            let label: Label = row.fields[0]
                .parse()
                .map_err(|e: Error| Error::parse(source, Some(row.line), e.to_string()))?;
            let off: f64 = row.get(source, 1, "offset_mhz")?;
            let lvl: f64 = row.get(source, 2, "level_db")?;
            if !off.is_finite() || !lvl.is_finite() || off < 0.0 {
                return Err(Error::parse(source, Some(row.line), "offsets must be finite and non-negative"));
            }
            let pts = masks.entry(label).or_default();
            if let Some(&(prev, _)) = pts.last() {
                if off <= prev {
                    return Err(Error::parse(source, Some(row.line), "offsets must be strictly increasing"));
                }
            } else if off != 0.0 {
                return Err(Error::parse(source, Some(row.line), "each mask must start at offset 0"));
            }
            pts.push((off, lvl));
        }
        for l in Label::ALL {
            if !masks.contains_key(&l) {
                return Err(Error::parse(source, None, format!("no mask for label {l}")));
            }
        }
        Ok(MaskTable { masks })
    }

    /// Mask level (dB relative to peak) at `offset_mhz` from the carrier.
    pub fn level_db(&self, label: Label, offset_mhz: f64) -> f64 {
        let pts = &self.masks[&label];
        let x = offset_mhz.abs();
        match pts.iter().position(|&(o, _)| o >= x) {
            None => pts.last().unwrap().1,
            Some(0) => pts[0].1,
            Some(i) => {
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Normalized emission shape of `label` on the default grid.
    pub fn shape(&self, label: Label) -> Spectrum {
        Spectrum::from_fn(GRID_STEP_MHZ, GRID_HALF_SPAN_MHZ, |f| self.level_db(label, f))
            .expect("default grid is valid")
            .normalized()
    }

    pub fn breakpoints(&self, label: Label) -> &[(f64, f64)] {
        &self.masks[&label]
    }
}

/// An emission shape placed on its channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Emission {
    pub label: Label,
    pub channel: i64,
    pub center_mhz: f64,
    pub spectrum: Spectrum,
}

/// Transmit shape of `label` on `channel`, using the built-in masks.
pub fn psd(label: Label, channel: i64, map: &ChannelMap) -> Result<Emission> {
    psd_with(label, channel, map, MaskTable::builtin())
}

pub fn psd_with(label: Label, channel: i64, map: &ChannelMap, masks: &MaskTable) -> Result<Emission> {
    let center_mhz = map.emission_center(label, channel)?;
    Ok(Emission {
        label,
        channel,
        center_mhz,
        spectrum: masks.shape(label),
    })
}

/// Parametric band-pass response of the sensing radio's channel filter:
/// flat pass-band with raised-cosine power roll-off, clipped at a floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontEnd {
    /// Half-power width at scale 1.
    pub nominal_width_mhz: f64,
    /// Roll-off factor in (0, 1].
    pub rolloff: f64,
    pub floor_db: f64,
    /// Moves the upper edge out and the lower edge in by this fraction of the
    /// half width; 0 gives a symmetric response.
    pub skew: f64,
    pub bandwidth_scale: f64,
}

impl Default for FrontEnd {
    fn default() -> Self {
        FrontEnd {
            nominal_width_mhz: 2.0,
            rolloff: 0.5,
            floor_db: -60.0,
            skew: 0.0,
            bandwidth_scale: 1.0,
        }
    }
}

impl FrontEnd {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_scale > 0.0 && self.bandwidth_scale <= 1.0) {
            return Err(Error::invalid(format!(
                "bandwidth scale must lie in (0, 1], got {}",
                self.bandwidth_scale
            )));
        }
        if !(self.nominal_width_mhz > 0.0) || !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::invalid("front-end width must be positive and roll-off in (0, 1]"));
        }
        if !(self.floor_db < 0.0) || !(self.skew.abs() < 1.0) {
            return Err(Error::invalid("front-end floor must be negative and |skew| < 1"));
        }
        Ok(())
    }

    fn edge_power(&self, half_width: f64, f: f64) -> f64 {
        let f1 = (1.0 - self.rolloff) * half_width;
        let f2 = (1.0 + self.rolloff) * half_width;
        if f <= f1 {
            1.0
        } else if f >= f2 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (f - f1) / (f2 - f1)).cos())
        }
    }

    pub fn response(&self) -> Result<Spectrum> {
        self.validate()?;
        let half_width = 0.5 * self.nominal_width_mhz * self.bandwidth_scale;
        let upper = half_width * (1.0 + self.skew);
        let lower = half_width * (1.0 - self.skew);
        Spectrum::from_fn(GRID_STEP_MHZ, GRID_HALF_SPAN_MHZ, |f| {
            let p = if f >= 0.0 {
                self.edge_power(upper, f)
            } else {
                self.edge_power(lower, -f)
            };
            if p > 0.0 {
                lin_to_db(p).max(self.floor_db)
            } else {
                self.floor_db
            }
        })
    }
}

/// Front-end response with default shape at the given bandwidth scale.
pub fn frontend_response(bandwidth_scale: f64) -> Result<Spectrum> {
    FrontEnd {
        bandwidth_scale,
        ..FrontEnd::default()
    }
    .response()
}

/// Power received through `h` from an emission with shape `x`, when the radio
/// is tuned `offset_mhz` away from the emission center:
/// `tx + 10 log10(∫ X(f) H(offset - f) df)`.
///
/// The integral runs over the grid of `x` with the trapezoid rule; `h` is
/// interpolated where needed and is zero outside its grid. Grids whose steps
/// are not integer multiples of each other are rejected. Returns `-inf` when
/// the two supports do not overlap.
pub fn received_power(x: &Spectrum, h: &Spectrum, offset_mhz: f64, tx_power_dbm: f64) -> Result<f64> {
    let (a, b) = (x.step_mhz, h.step_mhz);
    let ratio = a.max(b) / a.min(b);
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(Error::GridMismatch { a, b });
    }
    Ok(tx_power_dbm + lin_to_db(coupling_integral(x, h, offset_mhz)))
}

fn coupling_integral(x: &Spectrum, h: &Spectrum, offset_mhz: f64) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for (k, d) in x.density_db.iter().enumerate() {
        let hv = h.linear_at(offset_mhz - x.freq_mhz(k));
        if hv == 0.0 {
            continue;
        }
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        acc += w * db_to_lin(*d) * hv;
    }
    acc * x.step_mhz
}

/// Widest tuning offset for which couplings are tabulated.
const COUPLING_TABLE_MHZ: i64 = 100;

/// Everything needed to turn an emission into received power at a tuning
/// frequency: channel layout, masks, front-end response, and a table of
/// couplings at integer-MHz offsets.
#[derive(Clone, Debug)]
pub struct RadioModel {
    pub map: ChannelMap,
    pub masks: MaskTable,
    pub frontend: FrontEnd,
    response: Spectrum,
    shapes: BTreeMap<Label, Spectrum>,
    // linear gain relative to zero offset, index = offset + COUPLING_TABLE_MHZ
    table: BTreeMap<Label, Vec<f64>>,
}

impl RadioModel {
    pub fn new(map: ChannelMap, masks: MaskTable, frontend: FrontEnd) -> Result<Self> {
        let response = frontend.response()?;
        let mut shapes = BTreeMap::new();
        let mut table = BTreeMap::new();
        for l in Label::ALL {
            let x = masks.shape(l);
            let peak = coupling_integral(&x, &response, 0.0);
            let row = (-COUPLING_TABLE_MHZ..=COUPLING_TABLE_MHZ)
                .map(|o| coupling_integral(&x, &response, o as f64) / peak)
                .collect();
            table.insert(l, row);
            shapes.insert(l, x);
        }
        Ok(RadioModel {
            map,
            masks,
            frontend,
            response,
            shapes,
            table,
        })
    }

    pub fn builtin() -> Self {
        Self::new(ChannelMap::builtin(), MaskTable::builtin().clone(), FrontEnd::default()).expect("defaults are valid")
    }

    pub fn response(&self) -> &Spectrum {
        &self.response
    }

    pub fn shape(&self, label: Label) -> &Spectrum {
        &self.shapes[&label]
    }

    /// Linear gain, relative to tuning onto the emission center, when tuned
    /// `offset_mhz` away from it.
    pub fn coupling(&self, label: Label, offset_mhz: f64) -> f64 {
        let r = offset_mhz.round();
        if r == offset_mhz && r.abs() <= COUPLING_TABLE_MHZ as f64 {
            return self.table[&label][(r as i64 + COUPLING_TABLE_MHZ) as usize];
        }
        let x = &self.shapes[&label];
        coupling_integral(x, &self.response, offset_mhz) / coupling_integral(x, &self.response, 0.0)
    }

    pub fn coupling_db(&self, label: Label, offset_mhz: f64) -> f64 {
        lin_to_db(self.coupling(label, offset_mhz))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_power_width(s: &Spectrum) -> f64 {
        // walk outward from the center on both sides
        let d = s.density_db();
        let c = (d.len() - 1) / 2;
        let target = lin_to_db(0.5);
        let cross = |dir: i64| {
            let mut k = c as i64;
            loop {
                let next = k + dir;
                let (a, b) = (d[k as usize], d[next as usize]);
                if b <= target {
                    let t = (a - target) / (a - b);
                    return (k as f64 + dir as f64 * t - c as f64).abs() * s.step_mhz();
                }
                k = next;
            }
        };
        cross(1) + cross(-1)
    }

    #[test]
    fn masks_normalize() {
        for l in Label::ALL {
            let s = MaskTable::builtin().shape(l);
            assert!((s.linear_integral() - 1.0).abs() < 1e-9, "{l}");
            assert!(s.is_normalized());
        }
    }

    #[test]
    fn psd_centers_on_channel() {
        let map = ChannelMap::builtin();
        let e = psd(Label::Z, 26, &map).unwrap();
        assert_eq!(e.center_mhz, 2480.0);
        assert!(psd(Label::Z, 27, &map).is_err());
    }

    #[test]
    fn mask_widths_follow_the_phy() {
        let m = MaskTable::builtin();
        let width = |l| half_power_width(&m.shape(l));
        assert!(width(Label::W(crate::WifiVariant::N40)) > 35.0);
        assert!(width(Label::W(crate::WifiVariant::G)) > 17.0);
        assert!(width(Label::B) < 1.0);
        assert!(width(Label::Z) < 3.0);
        // 802.11b rolls off well inside the ±10 MHz region, OFDM stays flat
        assert!(m.level_db(Label::W(crate::WifiVariant::B), 8.0) < m.level_db(Label::W(crate::WifiVariant::G), 8.0) - 5.0);
    }

    #[test]
    fn frontend_width_scales() {
        let nominal = half_power_width(&frontend_response(1.0).unwrap());
        assert!((nominal - 2.0).abs() < 1e-9);
        let half = half_power_width(&frontend_response(0.5).unwrap());
        assert!((half - 1.0).abs() < 1e-9);
        assert!(frontend_response(0.0).is_err());
        assert!(frontend_response(-1.0).is_err());
        assert!(frontend_response(1.5).is_err());
    }

    #[test]
    fn frontend_edges_and_monotonicity() {
        for scale in [0.25, 0.5, 1.0] {
            let h = frontend_response(scale).unwrap();
            let d = h.density_db();
            assert!(d[0] <= -40.0 && d[d.len() - 1] <= -40.0);
            let c = (d.len() - 1) / 2;
            for k in c..d.len() - 1 {
                assert!(d[k + 1] <= d[k]);
            }
            for k in 1..=c {
                assert!(d[k - 1] <= d[k]);
            }
        }
    }

    #[test]
    fn skewed_frontend_is_asymmetric() {
        let fe = FrontEnd {
            skew: 0.3,
            ..FrontEnd::default()
        };
        let h = fe.response().unwrap();
        assert!(h.linear_at(1.2) > h.linear_at(-1.2));
    }

    #[test]
    fn brick_wall_identity() {
        // narrowband X fully inside a unit-gain pass-band
        let x = Spectrum::from_fn(0.125, 8.0, |f| if f.abs() <= 0.5 { 0.0 } else { -300.0 }).unwrap().normalized();
        let h = Spectrum::from_fn(0.125, 8.0, |f| if f.abs() <= 3.0 { 0.0 } else { -300.0 }).unwrap();
        let y = received_power(&x, &h, 0.0, -20.0).unwrap();
        assert!((y + 20.0).abs() < 1e-9, "{y}");
    }

    #[test]
    fn flat_20mhz_through_2mhz_wall() {
        // half-weight edge samples make the trapezoid rule exact for walls
        let edge = |f: f64, w: f64| {
            if f.abs() < w {
                0.0
            } else if f.abs() == w {
                lin_to_db(0.5)
            } else {
                -300.0
            }
        };
        let x = Spectrum::from_fn(0.125, 16.0, |f| edge(f, 10.0)).unwrap().normalized();
        let h = Spectrum::from_fn(0.125, 16.0, |f| edge(f, 1.0)).unwrap();
        let y = received_power(&x, &h, 0.0, 0.0).unwrap();
        assert!((y + 10.0).abs() < 1e-9, "{y}");
    }

    #[test]
    fn grid_mismatch_rejected() {
        let x = Spectrum::from_fn(0.125, 8.0, |_| 0.0).unwrap();
        let h = Spectrum::from_fn(0.25, 8.0, |_| 0.0).unwrap();
        assert!(received_power(&x, &h, 0.0, 0.0).is_ok());
        let h = Spectrum::from_fn(0.2, 8.0, |_| 0.0).unwrap();
        assert!(matches!(received_power(&x, &h, 0.0, 0.0), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn coupling_is_symmetric_and_peaks_at_zero() {
        let r = RadioModel::builtin();
        for l in Label::ALL {
            assert_eq!(r.coupling(l, 0.0), 1.0);
            for o in 1..40 {
                let a = r.coupling(l, o as f64);
                let b = r.coupling(l, -(o as f64));
                assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{l} {o}");
                assert!(a <= 1.0 + 1e-12);
            }
        }
        // table lookup agrees with the direct kernel
        let direct = r.coupling(Label::B, 2.5);
        assert!(direct < r.coupling(Label::B, 2.0) && direct > r.coupling(Label::B, 3.0));
    }
}
