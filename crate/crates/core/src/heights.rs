//! Expected peak heights and variance models.
//!
//! A contributor with template `t` (rfu) and degradation `d` (per bp)
//! contributes `t * dose * exp(-d * (mwt - 75)) * A` to each allele it
//! carries, where dose is the allele copy number and `A` the per-locus
//! amplification multiplier. Stutter products are expected-ratio fractions of
//! their parent's allelic height.
//!
//! Peak heights are lognormal around their expectation with log-variance
//! `c2 / E`; the quantum-effect flag floors `E` at `qe_floor` so very low
//! expectations cannot produce unbounded variability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::genotype::GenotypeSet;
use crate::kit::{GeneralisedKind, KitLocus};
use crate::profile::LocusProfile;
use crate::version::{VarianceModel, VersionProfile};

/// Anchor in bp below which degradation does not act.
pub const DEGRADATION_ANCHOR_BP: f64 = 75.0;

/// The sampler state over nuisance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassParameters {
    /// Per-contributor template, rfu.
    pub templates: Vec<f64>,
    /// Per-contributor degradation rate, per bp.
    pub degradations: Vec<f64>,
    /// Per-locus amplification multiplier (all 1 unless the flag is on).
    pub amp_efficiency: Vec<f64>,
    /// Variance constant for allelic peaks.
    pub c2_allele: f64,
    /// Variance constant for stutter peaks.
    pub c2_stutter: f64,
    /// Locus-level drop-in rate p.
    pub drop_in_rate: f64,
    /// Drop-in height decay, per rfu.
    pub drop_in_lambda: f64,
}

impl MassParameters {
    pub fn amp(&self, locus_index: usize) -> f64 {
        self.amp_efficiency.get(locus_index).copied().unwrap_or(1.0)
    }

    pub fn mixture_proportions(&self) -> Vec<f64> {
        let total: f64 = self.templates.iter().sum();
        self.templates.iter().map(|t| t / total).collect()
    }
}

/// Expected fluorescence at one position, split by source.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PositionExpectation {
    pub allelic: f64,
    pub back_stutter: f64,
    pub forward_stutter: f64,
    pub generalised: f64,
}

impl PositionExpectation {
    pub fn total(&self) -> f64 {
        self.allelic + self.back_stutter + self.forward_stutter + self.generalised
    }

    pub fn stutter_total(&self) -> f64 {
        self.back_stutter + self.forward_stutter + self.generalised
    }
}

/// Expected heights for every position touched by a genotype set, including
/// stutter positions of explained alleles even when unobserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedHeights {
    pub positions: BTreeMap<Allele, PositionExpectation>,
    /// Expected height of each dropped-out (sentinel) allele, one entry per
    /// sentinel in the genotype set, evaluated at the locus mean size.
    pub sentinel_expectations: Vec<f64>,
}

impl ExpectedHeights {
    pub fn total(&self, allele: Allele) -> f64 {
        self.positions.get(&allele).map_or(0.0, |p| p.total())
    }
}

/// Compute expected heights for a genotype set under the given parameters.
/// Drop-in alleles contribute no expected height.
pub fn expected_heights(
    set: &GenotypeSet,
    mass: &MassParameters,
    locus_index: usize,
    profile: &LocusProfile,
    kit: &KitLocus,
    flags: &VersionProfile,
) -> ExpectedHeights {
    let amp = mass.amp(locus_index);
    let mut out = ExpectedHeights::default();

    let mean_mwt = if profile.peaks.is_empty() {
        150.0
    } else {
        profile.peaks.iter().map(|p| p.mwt).sum::<f64>() / profile.peaks.len() as f64
    };

    // allelic components; homozygotes are handled once with dose 2
    for (n, genotype) in set.genotypes.iter().enumerate() {
        let t = mass.templates[n];
        let d = mass.degradations[n];
        let mut prev = None;
        for allele in genotype.alleles() {
            if allele.is_q() {
                let decay = (-d * (mean_mwt - DEGRADATION_ANCHOR_BP).max(0.0)).exp();
                out.sentinel_expectations.push(t * decay * amp);
                continue;
            }
            if prev == Some(allele) {
                continue;
            }
            prev = Some(allele);
            let dose = genotype.dose(allele) as f64;
            let mwt = profile.mwt_of(allele, kit.repeat_bp).unwrap_or(mean_mwt);
            let decay = (-d * (mwt - DEGRADATION_ANCHOR_BP).max(0.0)).exp();
            out.positions.entry(allele).or_default().allelic += t * dose * decay * amp;
        }
    }

    // stutter components, computed from the parents' total allelic heights
    let parents: Vec<(Allele, f64)> = out
        .positions
        .iter()
        .filter(|(_, e)| e.allelic > 0.0)
        .map(|(&a, e)| (a, e.allelic))
        .collect();
    for (parent, allelic) in parents {
        if let (Some(pos), Some(sr)) = (parent.back_position(), kit.back_stutter_ratio(parent)) {
            if sr > 0.0 {
                out.positions.entry(pos).or_default().back_stutter += sr * allelic;
            }
        }
        if flags.forward_stutter && kit.forward_stutter_ratio > 0.0 {
            if let Some(pos) = parent.forward_position() {
                out.positions.entry(pos).or_default().forward_stutter +=
                    kit.forward_stutter_ratio * allelic;
            }
        }
        if flags.generalised_stutter {
            for entry in &kit.generalised {
                let pos = match entry.kind {
                    GeneralisedKind::DoubleBack => parent.double_back_position(),
                    GeneralisedKind::MinusTwoBp => {
                        parent.minus_two_bp(kit.repeat_bp.round() as u32)
                    }
                };
                if let (Some(pos), Some(r)) = (pos, kit.generalised_ratio(entry, parent)) {
                    if r > 0.0 {
                        out.positions.entry(pos).or_default().generalised += r * allelic;
                    }
                }
            }
        }
    }

    out
}

/// Log-variance parameter for a single-source peak: `c2 / E`, with `E`
/// floored at `qe_floor` when the quantum-effect flag is on.
pub fn effective_variance(expected: f64, c2: f64, flags: &VersionProfile) -> f64 {
    let denom = if flags.qe_floor_on {
        expected.max(flags.qe_floor)
    } else {
        expected
    };
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        c2 / denom
    }
}

/// Combine the log-variances of several fluorescence sources on one position.
///
/// `weighted_average` takes the expected-height-weighted mean of the
/// per-source variances. `shifted_lognormal` treats each source as a
/// lognormal with mean `E_i` and log-variance `c2_i / E_i`, and moment-matches
/// the sum with a single lognormal:
///
/// ```text
/// sigma^2 = ln(1 + sum_i E_i^2 (exp(c2_i/E_i) - 1) / (sum_i E_i)^2)
/// ```
///
/// Both reduce exactly to `c2 / E` for a single source.
pub fn composite_variance(components: &[(f64, f64)], model: VarianceModel) -> Result<f64> {
    composite_variance_with(components, model, |e, c2| {
        if e <= 0.0 {
            f64::INFINITY
        } else {
            c2 / e
        }
    })
}

/// Composite variance with an arbitrary per-source variance map (used to
/// thread the quantum-effect floor through).
pub fn composite_variance_with(
    components: &[(f64, f64)],
    model: VarianceModel,
    per_source: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let total: f64 = components.iter().map(|(e, _)| e).sum();
    if components.is_empty() || !(total > 0.0) {
        return Err(Error::Domain(
            "composite variance of zero total expected height".into(),
        ));
    }
    match model {
        VarianceModel::WeightedAverage => Ok(components
            .iter()
            .filter(|(e, _)| *e > 0.0)
            .map(|&(e, c2)| (e / total) * per_source(e, c2))
            .sum()),
        VarianceModel::ShiftedLognormal => {
            let var_sum: f64 = components
                .iter()
                .filter(|(e, _)| *e > 0.0)
                .map(|&(e, c2)| e * e * (per_source(e, c2).exp() - 1.0))
                .sum();
            Ok((1.0 + var_sum / (total * total)).ln())
        }
    }
}

/// Diagnostic dump of expected heights, one row per position.
pub fn expected_heights_tsv(expected: &ExpectedHeights) -> String {
    let mut out = String::from("Position\tAllelic\tBackStutter\tForwardStutter\tGeneralised\n");
    for (allele, e) in &expected.positions {
        out.push_str(&format!(
            "{allele}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n",
            e.allelic, e.back_stutter, e.forward_stutter, e.generalised
        ));
    }
    out
}
