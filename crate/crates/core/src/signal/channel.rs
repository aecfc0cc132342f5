use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{ColumnarTable, Version};
use crate::label::{Class, Label, WifiVariant};

const BUILTIN: &str = include_str!("../../data/channels.txt");
pub const FORMAT: &str = "idi-channel-map";
pub const VERSION: Version = Version::new(1, 0);
const COLUMNS: &[&str] = &["tech", "index", "center_mhz", "width_mhz"];

/// BLE advertising channels.
pub const BLE_ADVERTISING: [u8; 3] = [37, 38, 39];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelEntry {
    pub center_mhz: f64,
    pub width_mhz: f64,
}

/// Per-technology channel indices, centers and widths.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMap {
    entries: BTreeMap<(Class, u8), ChannelEntry>,
}

impl ChannelMap {
    /// The standard 2.4 GHz layout shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN, "channels.txt").expect("built-in channel map is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let table = ColumnarTable::parse(text, source, FORMAT, VERSION, COLUMNS)?;
        let mut entries = BTreeMap::new();
        for row in &table.rows {
            let tech: Class = row.fields[0]
                .parse()
                .map_err(|_| Error::parse(source, Some(row.line), format!("unknown technology `{}`", row.fields[0])))?;
            let index: u8 = row.get(source, 1, "index")?;
            let center_mhz: f64 = row.get(source, 2, "center_mhz")?;
            let width_mhz: f64 = row.get(source, 3, "width_mhz")?;
            if !(width_mhz > 0.0) || !center_mhz.is_finite() {
                return Err(Error::parse(source, Some(row.line), "width must be positive and center finite"));
            }
            if entries.insert((tech, index), ChannelEntry { center_mhz, width_mhz }).is_some() {
                return Err(Error::parse(source, Some(row.line), format!("duplicate channel {tech} {index}")));
            }
        }
        let map = ChannelMap { entries };
        map.validate(source)?;
        Ok(map)
    }

    fn validate(&self, source: &str) -> Result<()> {
        let ranges = [
            (Class::Z, 11u8, 26u8, 5.0),
            (Class::B, 0, 78, 1.0),
            (Class::L, 0, 39, 2.0),
            (Class::W, 1, 14, 20.0),
        ];
        for (tech, lo, hi, width) in ranges {
            for k in lo..=hi {
                match self.entries.get(&(tech, k)) {
                    Some(e) if e.width_mhz == width => {}
                    Some(e) => {
                        return Err(Error::parse(
                            source,
                            None,
                            format!("{tech} channel {k} has width {} MHz, expected {width}", e.width_mhz),
                        ))
                    }
                    None => return Err(Error::parse(source, None, format!("missing {tech} channel {k}"))),
                }
            }
            if let Some(((_, k), _)) = self.entries.iter().find(|((t, k), _)| *t == tech && (*k < lo || *k > hi)) {
                return Err(Error::parse(source, None, format!("{tech} channel {k} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn entry(&self, tech: Class, index: u8) -> Option<ChannelEntry> {
        self.entries.get(&(tech, index)).copied()
    }

    pub fn channels(&self, tech: Class) -> impl Iterator<Item = u8> + '_ {
        self.entries.keys().filter(move |(t, _)| *t == tech).map(|(_, k)| *k)
    }

    /// Center frequency of an 802.15.4 sensing channel.
    pub fn zigbee_center(&self, channel: u8) -> Result<f64> {
        self.emission_center(Label::Z, channel as i64)
    }

    /// Center frequency and occupied width of an emission of `label` on
    /// `channel`. 40 MHz 802.11 channels bond the primary channel with the
    /// secondary above it for primaries 1..=9 and below it otherwise.
    pub fn emission(&self, label: Label, channel: i64) -> Result<ChannelEntry> {
        let bad = || Error::InvalidChannel {
            label: label.to_string(),
            channel,
        };
        let index = u8::try_from(channel).map_err(|_| bad())?;
        let e = self.entry(label.class(), index).ok_or_else(bad)?;
        match label {
            Label::W(WifiVariant::N40) => {
                if index > 13 {
                    return Err(bad());
                }
                let center = if index <= 9 { e.center_mhz + 10.0 } else { e.center_mhz - 10.0 };
                Ok(ChannelEntry { center_mhz: center, width_mhz: 40.0 })
            }
            Label::W(v) if index == 14 && v != WifiVariant::B => Err(bad()),
            _ => Ok(e),
        }
    }

    pub fn emission_center(&self, label: Label, channel: i64) -> Result<f64> {
        Ok(self.emission(label, channel)?.center_mhz)
    }
}
