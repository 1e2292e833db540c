//! Allele designations.
//!
//! STR alleles are named by repeat count with at most one fractional digit for
//! microvariants (e.g. `17`, `25.2`, `9.3`; the fractional digit is a partial
//! repeat of 1–3 bases). The dropout sentinel (serialised `-1`) stands for a
//! contributor allele that is not among the observed peaks.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An allele designation, stored in tenths of a repeat unit, or the dropout
/// sentinel. The sentinel orders before every real allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Allele {
    /// Dropout sentinel: an unseen allele. Never appears in observed peak
    /// lists, only in genotypes.
    Q,
    /// Repeat designation in tenths: `25.2` is `Repeat(252)`.
    Repeat(u32),
}

impl Allele {
    pub fn from_tenths(tenths: u32) -> Self {
        Allele::Repeat(tenths)
    }

    /// Parse a designation like `17`, `25.2`, `9.3`, or the sentinel `-1`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s == "-1" || s == "Q" {
            return Ok(Allele::Q);
        }
        let bad = || Error::Domain(format!("invalid allele designation '{s}'"));
        let (units, frac) = match s.split_once('.') {
            None => (s, 0u32),
            Some((u, f)) => {
                if f.len() != 1 {
                    return Err(bad());
                }
                let d = f.parse::<u32>().map_err(|_| bad())?;
                if d > 3 {
                    return Err(Error::Domain(format!(
                        "invalid allele designation '{s}': fractional digit must be 0-3"
                    )));
                }
                (u, d)
            }
        };
        let units = units.parse::<u32>().map_err(|_| bad())?;
        if units == 0 && frac == 0 {
            return Err(bad());
        }
        Ok(Allele::Repeat(units * 10 + frac))
    }

    pub fn is_q(self) -> bool {
        matches!(self, Allele::Q)
    }

    pub fn tenths(self) -> Option<u32> {
        match self {
            Allele::Q => None,
            Allele::Repeat(t) => Some(t),
        }
    }

    /// Back-stutter position: one full repeat below.
    pub fn back_position(self) -> Option<Allele> {
        match self {
            Allele::Repeat(t) if t > 10 => Some(Allele::Repeat(t - 10)),
            _ => None,
        }
    }

    /// Forward-stutter position: one full repeat above.
    pub fn forward_position(self) -> Option<Allele> {
        self.tenths().map(|t| Allele::Repeat(t + 10))
    }

    /// Double-back position: two full repeats below.
    pub fn double_back_position(self) -> Option<Allele> {
        match self {
            Allele::Repeat(t) if t > 20 => Some(Allele::Repeat(t - 20)),
            _ => None,
        }
    }

    /// Two bases below, in designation arithmetic for a repeat of
    /// `repeat_bp` bases: `17 -> 16.2`, `25.2 -> 25`, `9.3 -> 9.1`.
    pub fn minus_two_bp(self, repeat_bp: u32) -> Option<Allele> {
        let t = self.tenths()?;
        let (units, frac) = (t / 10, t % 10);
        if frac >= 2 {
            Some(Allele::Repeat(units * 10 + frac - 2))
        } else if units >= 1 && repeat_bp >= 2 + frac {
            let new_frac = repeat_bp - 2 + frac;
            if new_frac > 3 {
                // Falls outside representable microvariants (e.g. penta repeats).
                None
            } else {
                Some(Allele::Repeat((units - 1) * 10 + new_frac))
            }
        } else {
            None
        }
    }

    /// Distance in repeat units between two real alleles (fractional part in
    /// tenths), used to extrapolate molecular weights.
    pub fn repeat_distance(self, other: Allele) -> Option<f64> {
        Some((self.tenths()? as f64 - other.tenths()? as f64) / 10.0)
    }
}

impl fmt::Display for Allele {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Allele::Q => write!(f, "-1"),
            Allele::Repeat(t) => {
                if t % 10 == 0 {
                    write!(f, "{}", t / 10)
                } else {
                    write!(f, "{}.{}", t / 10, t % 10)
                }
            }
        }
    }
}

impl FromStr for Allele {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Allele::parse(s)
    }
}

impl Serialize for Allele {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Allele {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Allele::parse(&s).map_err(de::Error::custom)
    }
}
