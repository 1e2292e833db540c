//! Named bundles of model feature flags.
//!
//! Each incremental change to the biological/statistical model is expressed as
//! a flag on [`VersionProfile`]. A preset bundles the flags the way a given
//! engine generation behaved; the regression harness compares two bundles on
//! the same cases. Numeric model constants live here too so a profile is a
//! complete, serialisable description of the model configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the variance of a composite peak (several fluorescence sources on one
/// position) is combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    /// Expected-height-weighted average of the per-source variances.
    WeightedAverage,
    /// Moment-matched lognormal for the sum of independent lognormal sources.
    ShiftedLognormal,
}

/// Drop-in model generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropInVariant {
    /// Flat rate with a truncated-exponential height density.
    Legacy,
    /// Adds an extra exponential height penalty, making tall drop-ins rarer.
    Refined,
}

/// Cap applied to the lower bound of the HPD interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HpdCap {
    None,
    /// Resampled frequencies are floored at 1/(2N).
    PopulationSize,
    /// Resampled frequencies are floored at (minimum positive resampled count)/(2N).
    MinResampledCount,
}

pub const PRESET_NAMES: [&str; 4] = ["v2.3-like", "v2.5-like", "v2.8-like", "v2.9-like"];

/// A complete feature-flag bundle plus the numeric constants of the model.
///
/// Presets are immutable; `overrides` records any field that was explicitly
/// changed relative to the preset so output metadata can show the delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionProfile {
    pub name: String,

    // --- model flags ---
    /// The sampler always uses the Gaussian walk; the field is kept so a
    /// profile fully describes the stepping scheme.
    #[serde(default = "default_true")]
    pub gaussian_walk: bool,
    pub varying_variances: bool,
    pub symmetry_restriction: bool,
    pub forward_stutter: bool,
    pub generalised_stutter: bool,
    pub drop_in_variant: DropInVariant,
    pub qe_floor_on: bool,
    pub composite_variance: VarianceModel,
    pub dynamic_start_templates: bool,
    pub locus_amp_variance: bool,
    pub hpd_cap: HpdCap,
    /// Off: an observed peak in a stutter position of a present parent must be
    /// scored as stutter and can never be labelled drop-in. On: both
    /// explanations are enumerated and the likelihood arbitrates.
    pub stutter_dropin_preference: bool,
    /// On: a stutter-position peak below its expected stutter height cannot
    /// gain density from a drop-in component (the mixed term is capped at the
    /// pure-stutter term).
    pub undersized_stutter_restriction: bool,

    // --- genotype-set support ---
    /// Allow the dropout sentinel in enumerated genotypes.
    pub allow_dropout: bool,
    /// Allow a contributor to drop both alleles at a locus that has peaks.
    pub allow_double_dropout: bool,
    /// Maximum drop-in peaks per locus (0 forbids drop-in).
    pub max_dropins: u32,
    /// A sentinel in a weighted genotype matches any single allele of a
    /// reference genotype when checking hypothesis support.
    pub sentinel_matching: bool,

    // --- numeric model constants (all overridable) ---
    /// Variance floor in rfu for very low expected heights (quantum effect).
    pub qe_floor: f64,
    /// Starting / fixed variance constant for allelic peaks.
    pub c2_allele: f64,
    /// Starting / fixed variance constant for stutter peaks.
    pub c2_stutter: f64,
    /// Per-locus drop-in rate p in [0,1).
    pub drop_in_rate: f64,
    /// Height decay of the drop-in density, per rfu.
    pub drop_in_lambda: f64,
    /// Extra height penalty of the refined drop-in model, per rfu.
    pub drop_in_lambda_extra: f64,
    /// Uniform prior bounds on per-contributor template, rfu.
    pub template_prior: (f64, f64),
    /// Uniform prior bounds on per-contributor degradation, per bp.
    pub degradation_prior: (f64, f64),
    /// Lognormal prior s.d. of the per-locus amplification multiplier.
    pub amp_prior_sd: f64,
    /// Inverse-gamma hyperprior shape for the variance constants.
    pub variance_prior_shape: f64,

    // --- Gaussian-walk proposal step sizes ---
    pub template_step_sd: f64,
    pub degradation_step_sd: f64,
    pub amp_step_sd: f64,
    pub variance_step_sd: f64,

    // --- HPD configuration ---
    /// One-sided lower quantile of the HPD interval.
    pub hpd_quantile: f64,
    pub hpd_samples: u32,

    /// Fields explicitly overridden relative to the preset, for output metadata.
    #[serde(default)]
    pub overrides: Vec<String>,
}

fn default_true() -> bool {
    true
}

impl VersionProfile {
    /// The newest bundle; other presets are expressed as diffs from it.
    fn newest(name: &str) -> Self {
        VersionProfile {
            name: name.to_string(),
            gaussian_walk: true,
            varying_variances: true,
            symmetry_restriction: true,
            forward_stutter: true,
            generalised_stutter: true,
            drop_in_variant: DropInVariant::Refined,
            qe_floor_on: true,
            composite_variance: VarianceModel::ShiftedLognormal,
            dynamic_start_templates: true,
            locus_amp_variance: true,
            hpd_cap: HpdCap::MinResampledCount,
            stutter_dropin_preference: true,
            undersized_stutter_restriction: true,
            allow_dropout: true,
            allow_double_dropout: false,
            max_dropins: 2,
            sentinel_matching: true,
            qe_floor: 30.0,
            c2_allele: 25.0,
            c2_stutter: 15.0,
            drop_in_rate: 0.02,
            drop_in_lambda: 0.01,
            drop_in_lambda_extra: 0.01,
            template_prior: (0.0, 30_000.0),
            degradation_prior: (0.0, 0.05),
            amp_prior_sd: 0.05,
            variance_prior_shape: 3.0,
            template_step_sd: 25.0,
            degradation_step_sd: 5e-4,
            amp_step_sd: 0.01,
            variance_step_sd: 2.0,
            hpd_quantile: 0.005,
            hpd_samples: 1000,
            overrides: Vec::new(),
        }
    }

    /// Resolve a named preset, or load a profile from a JSON file when `name`
    /// is a path to one.
    pub fn resolve(name: &str) -> Result<Self> {
        match name {
            "v2.9-like" => Ok(Self::newest("v2.9-like")),
            "v2.8-like" => {
                let mut p = Self::newest("v2.8-like");
                p.undersized_stutter_restriction = false;
                Ok(p)
            }
            "v2.5-like" => {
                let mut p = Self::newest("v2.5-like");
                p.generalised_stutter = false;
                p.drop_in_variant = DropInVariant::Legacy;
                p.qe_floor_on = false;
                p.composite_variance = VarianceModel::WeightedAverage;
                p.dynamic_start_templates = false;
                p.locus_amp_variance = false;
                p.hpd_cap = HpdCap::None;
                p.stutter_dropin_preference = false;
                p.undersized_stutter_restriction = false;
                p.max_dropins = 1;
                Ok(p)
            }
            "v2.3-like" => {
                let mut p = Self::resolve("v2.5-like")?;
                p.name = "v2.3-like".to_string();
                // The symmetry-plane restriction and forward stutter arrived
                // after the 2.3 baseline.
                p.symmetry_restriction = false;
                p.forward_stutter = false;
                Ok(p)
            }
            other => {
                if std::path::Path::new(other).is_file() {
                    Self::from_json_file(other)
                } else {
                    Err(Error::UnknownProfile {
                        name: other.to_string(),
                        presets: PRESET_NAMES.join(", "),
                    })
                }
            }
        }
    }

    pub fn from_json_file(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let profile: VersionProfile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_string(),
            source: e,
        })?;
        Ok(profile)
    }

    /// Whether drop-in is possible at all under this profile.
    pub fn drop_in_allowed(&self) -> bool {
        self.max_dropins > 0 && self.drop_in_rate > 0.0
    }

    /// Inverse-gamma hyperprior scale giving the configured constant as the
    /// prior mean.
    pub fn variance_prior_scale(&self, c2: f64) -> f64 {
        (self.variance_prior_shape - 1.0) * c2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_with_expected_flags() {
        let v25 = VersionProfile::resolve("v2.5-like").unwrap();
        assert!(v25.forward_stutter);
        assert!(!v25.generalised_stutter);
        assert_eq!(v25.drop_in_variant, DropInVariant::Legacy);
        assert_eq!(v25.composite_variance, VarianceModel::WeightedAverage);
        assert!(!v25.dynamic_start_templates);
        assert_eq!(v25.max_dropins, 1);
        assert!(!v25.stutter_dropin_preference);

        let v29 = VersionProfile::resolve("v2.9-like").unwrap();
        assert!(v29.undersized_stutter_restriction);
        assert!(v29.stutter_dropin_preference);
        assert_eq!(v29.drop_in_variant, DropInVariant::Refined);
        assert_eq!(v29.composite_variance, VarianceModel::ShiftedLognormal);
        assert_eq!(v29.max_dropins, 2);

        let v28 = VersionProfile::resolve("v2.8-like").unwrap();
        assert!(!v28.undersized_stutter_restriction);
        assert!(v28.stutter_dropin_preference);

        let v23 = VersionProfile::resolve("v2.3-like").unwrap();
        assert!(!v23.symmetry_restriction);
        assert!(!v23.forward_stutter);
        assert!(v23.varying_variances);
    }

    #[test]
    fn unknown_preset_lists_known_names() {
        let err = VersionProfile::resolve("v9000").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("v9000"));
        for name in PRESET_NAMES {
            assert!(msg.contains(name), "missing {name} in {msg}");
        }
    }

    #[test]
    fn profile_round_trips_through_json() {
        let p = VersionProfile::resolve("v2.9-like").unwrap();
        let text = serde_json::to_string_pretty(&p).unwrap();
        let back: VersionProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn resolve_accepts_a_profile_file_path() {
        let mut p = VersionProfile::resolve("v2.5-like").unwrap();
        p.name = "custom".into();
        p.qe_floor = 45.0;
        p.overrides = vec!["qe_floor".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.json");
        std::fs::write(&path, serde_json::to_string_pretty(&p).unwrap()).unwrap();
        let loaded = VersionProfile::resolve(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded, p);
    }
}
