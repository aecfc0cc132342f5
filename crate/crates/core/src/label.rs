//! Interference labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The four technology classes a classifier distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    /// IEEE 802.15.1 (Bluetooth BR/EDR).
    B,
    /// Bluetooth Low Energy.
    L,
    /// IEEE 802.15.4.
    Z,
    /// IEEE 802.11.
    W,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::B, Class::L, Class::Z, Class::W];

    pub fn index(self) -> usize {
        match self {
            Class::B => 0,
            Class::L => 1,
            Class::Z => 2,
            Class::W => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Class::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            Class::B => "B",
            Class::L => "L",
            Class::Z => "Z",
            Class::W => "W",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "B" => Ok(Class::B),
            "L" => Ok(Class::L),
            "Z" => Ok(Class::Z),
            "W" => Ok(Class::W),
            other => Err(Error::invalid(format!("unknown class `{other}`"))),
        }
    }
}

/// 802.11 PHY variant carried by [`Label::W`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WifiVariant {
    B,
    G,
    N20,
    N40,
}

impl WifiVariant {
    pub const ALL: [WifiVariant; 4] = [WifiVariant::B, WifiVariant::G, WifiVariant::N20, WifiVariant::N40];

    pub fn code(self) -> &'static str {
        match self {
            WifiVariant::B => "b",
            WifiVariant::G => "g",
            WifiVariant::N20 => "n20",
            WifiVariant::N40 => "n40",
        }
    }

    pub fn width_mhz(self) -> f64 {
        match self {
            WifiVariant::N40 => 40.0,
            _ => 20.0,
        }
    }
}

/// Ground-truth label of a burst. The 802.11 label always carries its variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    B,
    L,
    Z,
    W(WifiVariant),
}

impl Label {
    /// Every label, in confusion-matrix row order.
    pub const ALL: [Label; 7] = [
        Label::B,
        Label::L,
        Label::Z,
        Label::W(WifiVariant::B),
        Label::W(WifiVariant::G),
        Label::W(WifiVariant::N20),
        Label::W(WifiVariant::N40),
    ];

    pub fn class(self) -> Class {
        match self {
            Label::B => Class::B,
            Label::L => Class::L,
            Label::Z => Class::Z,
            Label::W(_) => Class::W,
        }
    }

    pub fn variant(self) -> Option<WifiVariant> {
        match self {
            Label::W(v) => Some(v),
            _ => None,
        }
    }

    /// Row index in [`Label::ALL`].
    pub fn row(self) -> usize {
        Label::ALL.iter().position(|l| *l == self).expect("label is listed")
    }

    pub fn code(self) -> &'static str {
        match self {
            Label::B => "B",
            Label::L => "L",
            Label::Z => "Z",
            Label::W(WifiVariant::B) => "W-b",
            Label::W(WifiVariant::G) => "W-g",
            Label::W(WifiVariant::N20) => "W-n20",
            Label::W(WifiVariant::N40) => "W-n40",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.code() == s)
            .ok_or_else(|| {
                if s == "W" {
                    Error::invalid("802.11 label needs a variant: W-b, W-g, W-n20 or W-n40")
                } else {
                    Error::invalid(format!("unknown label `{s}`"))
                }
            })
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_present_iff_wifi() {
        for l in Label::ALL {
            assert_eq!(l.variant().is_some(), l.class() == Class::W);
        }
    }

    #[test]
    fn codes_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.code().parse::<Label>().unwrap(), l);
        }
        assert!("W".parse::<Label>().is_err());
        assert!("X".parse::<Label>().is_err());
    }
}
