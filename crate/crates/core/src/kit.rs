//! Kit definitions: locus order and per-locus stutter calibration.
//!
//! Back stutter is modelled as a linear regression on the longest
//! uninterrupted stretch (LUS) of the parent allele; forward stutter as a flat
//! expected ratio; generalised stutter (double-back, 2 bp back) as additional
//! regression entries. The optional per-locus maximum ratios are calibration
//! data: a peak whose observed ratio to its parent exceeds the maximum cannot
//! be designated stutter of that parent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StutterRegression {
    pub intercept: f64,
    pub slope_lus: f64,
}

impl StutterRegression {
    pub fn expected(&self, lus: f64) -> f64 {
        (self.intercept + self.slope_lus * lus).max(0.0)
    }
}

/// The stutter offsets recognised beyond plain back/forward stutter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralisedKind {
    /// Two full repeats below the parent.
    DoubleBack,
    /// Two bases below the parent.
    MinusTwoBp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralisedStutter {
    pub kind: GeneralisedKind,
    pub intercept: f64,
    pub slope_lus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitLocus {
    pub locus: String,
    pub back_stutter: StutterRegression,
    /// Expected forward stutter ratio; 0 disables forward stutter at this locus.
    #[serde(default)]
    pub forward_stutter_ratio: f64,
    /// Longest uninterrupted stretch per allele.
    #[serde(default)]
    pub lus: BTreeMap<Allele, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generalised: Vec<GeneralisedStutter>,
    /// Maximum observed back-stutter ratio; above it a peak cannot be stutter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_back_stutter_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_forward_stutter_ratio: Option<f64>,
    /// Bases per repeat unit, for size extrapolation and 2 bp designations.
    #[serde(default = "default_repeat_bp")]
    pub repeat_bp: f64,
}

fn default_repeat_bp() -> f64 {
    4.0
}

impl KitLocus {
    pub fn lus_of(&self, allele: Allele) -> Option<f64> {
        self.lus.get(&allele).copied()
    }

    /// Expected back-stutter ratio for a parent allele, or `None` when the kit
    /// carries no LUS value for it.
    pub fn back_stutter_ratio(&self, parent: Allele) -> Option<f64> {
        self.lus_of(parent).map(|l| self.back_stutter.expected(l))
    }

    pub fn generalised_ratio(&self, entry: &GeneralisedStutter, parent: Allele) -> Option<f64> {
        self.lus_of(parent)
            .map(|l| (entry.intercept + entry.slope_lus * l).max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitDefinition {
    pub loci: Vec<KitLocus>,
}

impl KitDefinition {
    pub fn locus(&self, name: &str) -> Option<&KitLocus> {
        self.loci.iter().find(|l| l.locus == name)
    }

    pub fn locus_names(&self) -> impl Iterator<Item = &str> {
        self.loci.iter().map(|l| l.locus.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.loci.iter().enumerate() {
            if self.loci[..i].iter().any(|o| o.locus == l.locus) {
                return Err(Error::Validation(format!(
                    "kit lists locus {} twice",
                    l.locus
                )));
            }
            if !(l.repeat_bp > 0.0) {
                return Err(Error::Validation(format!(
                    "kit locus {}: repeat_bp must be positive",
                    l.locus
                )));
            }
        }
        Ok(())
    }
}

/// Expected back-stutter ratio `intercept + slope * LUS`, floored at zero.
///
/// Errors when the kit has no LUS entry for the allele.
pub fn expected_back_stutter_ratio(
    kit: &KitDefinition,
    locus: &str,
    allele: Allele,
) -> Result<f64> {
    let kl = kit
        .locus(locus)
        .ok_or_else(|| Error::Lookup(format!("locus {locus} not in kit")))?;
    kl.back_stutter_ratio(allele)
        .ok_or_else(|| Error::Lookup(format!("no LUS value for allele {allele} at locus {locus}")))
}
