//! Electropherogram and reference-profile domain types.

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::genotype::Genotype;

/// One observed peak: designation, height in rfu, molecular weight in bp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub allele: Allele,
    pub height: f64,
    pub mwt: f64,
}

/// All observed peaks at one locus, sorted by molecular weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusProfile {
    pub locus: String,
    pub peaks: Vec<Peak>,
}

impl LocusProfile {
    pub fn new(locus: impl Into<String>, mut peaks: Vec<Peak>) -> Result<Self> {
        let locus = locus.into();
        for p in &peaks {
            if p.allele.is_q() {
                return Err(Error::Validation(format!(
                    "locus {locus}: the dropout sentinel cannot appear as an observed peak"
                )));
            }
            if !(p.height > 0.0) {
                return Err(Error::Validation(format!(
                    "locus {locus}: peak {} has non-positive height {}",
                    p.allele, p.height
                )));
            }
            if !(p.mwt > 0.0) {
                return Err(Error::Validation(format!(
                    "locus {locus}: peak {} has non-positive size {}",
                    p.allele, p.mwt
                )));
            }
        }
        peaks.sort_by(|a, b| a.mwt.partial_cmp(&b.mwt).unwrap());
        for w in peaks.windows(2) {
            if w[0].allele == w[1].allele {
                return Err(Error::Validation(format!(
                    "locus {locus}: duplicate allele {}",
                    w[0].allele
                )));
            }
            if w[0].allele > w[1].allele {
                return Err(Error::Validation(format!(
                    "locus {locus}: molecular weight not increasing with repeat count ({} vs {})",
                    w[0].allele, w[1].allele
                )));
            }
        }
        Ok(LocusProfile { locus, peaks })
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn peak(&self, allele: Allele) -> Option<&Peak> {
        self.peaks.iter().find(|p| p.allele == allele)
    }

    pub fn alleles(&self) -> impl Iterator<Item = Allele> + '_ {
        self.peaks.iter().map(|p| p.allele)
    }

    pub fn total_height(&self) -> f64 {
        self.peaks.iter().map(|p| p.height).sum()
    }

    /// Molecular weight of any designation, extrapolated from the nearest
    /// observed peak at `repeat_bp` bases per repeat when the position itself
    /// was not observed.
    pub fn mwt_of(&self, allele: Allele, repeat_bp: f64) -> Option<f64> {
        if let Some(p) = self.peak(allele) {
            return Some(p.mwt);
        }
        let t = allele.tenths()? as f64;
        let nearest = self.peaks.iter().min_by(|a, b| {
            let da = (a.allele.tenths().unwrap() as f64 - t).abs();
            let db = (b.allele.tenths().unwrap() as f64 - t).abs();
            da.partial_cmp(&db).unwrap()
        })?;
        let delta_repeats = (t - nearest.allele.tenths().unwrap() as f64) / 10.0;
        Some(nearest.mwt + delta_repeats * repeat_bp)
    }
}

/// An evidence profile after analytical-threshold filtering. Loci with no
/// surviving peaks are retained as empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceProfile {
    pub sample_id: String,
    /// File order is preserved; lookups go through [`EvidenceProfile::locus`].
    pub loci: Vec<LocusProfile>,
    /// Analytical threshold the profile was filtered at, rfu.
    pub analytical_threshold: f64,
}

impl EvidenceProfile {
    pub fn locus(&self, name: &str) -> Option<&LocusProfile> {
        self.loci.iter().find(|l| l.locus == name)
    }

    pub fn non_empty_loci(&self) -> impl Iterator<Item = &LocusProfile> {
        self.loci.iter().filter(|l| !l.is_empty())
    }
}

/// Remove every peak strictly below the threshold. Peaks exactly at the
/// threshold are retained.
pub fn apply_analytical_threshold(profile: &EvidenceProfile, at: f64) -> EvidenceProfile {
    let loci = profile
        .loci
        .iter()
        .map(|l| LocusProfile {
            locus: l.locus.clone(),
            peaks: l.peaks.iter().copied().filter(|p| p.height >= at).collect(),
        })
        .collect();
    EvidenceProfile {
        sample_id: profile.sample_id.clone(),
        loci,
        analytical_threshold: at.max(profile.analytical_threshold),
    }
}

/// Ratio of a stutter peak's height to its parent's height.
pub fn observed_stutter_ratio(parent: &Peak, stutter: &Peak) -> Result<f64> {
    if !(parent.height > 0.0) {
        return Err(Error::Domain(format!(
            "stutter ratio undefined: parent peak {} has height {}",
            parent.allele, parent.height
        )));
    }
    Ok(stutter.height / parent.height)
}

/// A typed reference individual: exactly two alleles per locus, homozygotes
/// repeating the allele. The sentinel never appears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub sample_id: String,
    pub genotypes: Vec<(String, Genotype)>,
}

impl ReferenceProfile {
    pub fn genotype(&self, locus: &str) -> Option<&Genotype> {
        self.genotypes
            .iter()
            .find(|(l, _)| l == locus)
            .map(|(_, g)| g)
    }

    pub fn validate(&self) -> Result<()> {
        for (locus, g) in &self.genotypes {
            if g.a().is_q() || g.b().is_q() {
                return Err(Error::Validation(format!(
                    "reference {} locus {locus}: dropout sentinel not allowed in references",
                    self.sample_id
                )));
            }
        }
        Ok(())
    }
}
