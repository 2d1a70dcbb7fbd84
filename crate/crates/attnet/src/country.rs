//! Country codes and continent regions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Uppercase ISO-style 2-letter country code. Stored inline so node sets and
/// edge keys stay `Copy` and order deterministically.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid country code {0:?}: expected two ASCII uppercase letters")]
pub struct InvalidCountryCode(pub String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, InvalidCountryCode> {
        let bytes = code.as_bytes();
        if bytes.len() == 2 && bytes.iter().all(|b| b.is_ascii_uppercase()) {
            Ok(CountryCode([bytes[0], bytes[1]]))
        } else {
            Err(InvalidCountryCode(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        // Constructor guarantees ASCII.
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = InvalidCountryCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CountryCode::new(s)
    }
}

impl Serialize for CountryCode {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        CountryCode::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Continent-level region. The enum order is the canonical row/column order
/// of every region flow matrix this crate produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Africa,
    Americas,
    Asia,
    Europe,
    Oceania,
}

pub const REGIONS: [Region; 5] = [
    Region::Africa,
    Region::Americas,
    Region::Asia,
    Region::Europe,
    Region::Oceania,
];

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown region label {0:?}")]
pub struct UnknownRegionLabel(pub String);

impl Region {
    /// Index into the canonical 5-region ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Africa => "Africa",
            Region::Americas => "Americas",
            Region::Asia => "Asia",
            Region::Europe => "Europe",
            Region::Oceania => "Oceania",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = UnknownRegionLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Africa" => Ok(Region::Africa),
            "Americas" => Ok(Region::Americas),
            "Asia" => Ok(Region::Asia),
            "Europe" => Ok(Region::Europe),
            "Oceania" => Ok(Region::Oceania),
            other => Err(UnknownRegionLabel(other.to_string())),
        }
    }
}
