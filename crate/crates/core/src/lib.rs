//! Continuous probabilistic genotyping at desk scale.
//!
//! The crate deconvolves short-tandem-repeat mixtures by Metropolis-Hastings
//! sampling over per-contributor genotypes and mass parameters, prices the
//! resulting genotype weights into likelihood ratios under the
//! Balding-Nichols subpopulation model, and ships a regression harness that
//! compares log10 LR outputs between named feature-flag bundles, each bundle
//! reproducing one generation of the model's behaviour.
//!
//! Module layout follows the pipeline:
//!
//! * [`profile`], [`kit`], [`frequencies`], [`caseio`] — domain types and file
//!   ingestion;
//! * [`genotype`] — genotype-set enumeration and posterior weights;
//! * [`heights`], [`likelihood`] — the peak-height model;
//! * [`mcmc`], [`exhaustive`] — the sampler and its integration oracle;
//! * [`lr`], [`hpd`] — likelihood ratios, stratification and intervals;
//! * [`version`], [`harness`] — feature-flag bundles and the regression CLI
//!   machinery.

pub mod allele;
pub mod caseio;
pub mod error;
pub mod exhaustive;
pub mod format;
pub mod frequencies;
pub mod genotype;
pub mod harness;
pub mod heights;
pub mod hpd;
pub mod kit;
pub mod likelihood;
pub mod lr;
pub mod mcmc;
pub mod profile;
pub mod seed;
pub mod version;

pub use allele::Allele;
pub use caseio::{load_case, CaseBundle, CaseFile, Manifest};
pub use error::{Error, Result};
pub use exhaustive::{exhaustive_posterior, GridSpec};
pub use frequencies::{allele_frequency, AlleleFrequencyTable};
pub use genotype::{
    enumerate_genotype_sets, normalize_weights, sets_supporting, Genotype, GenotypeSet,
    LocusWeights, PositionPolicy,
};
pub use harness::{classify_band, diagnose_case, h2_battery, run_case, run_regression, Band};
pub use heights::{composite_variance, effective_variance, expected_heights, MassParameters};
pub use hpd::{hpd_interval, HpdConfig, HpdInterval, ThetaSpec};
pub use kit::{expected_back_stutter_ratio, KitDefinition};
pub use likelihood::{drop_in_log_probability, locus_log_likelihood};
pub use lr::{
    build_lr_case, generate_non_donor, genotype_probability_bn, locus_lr, log10_report, lr_report,
    stratify, sub_source_lr, LrReport, LOG10_LR_ZERO_SENTINEL,
};
pub use mcmc::{
    deconvolve, initialize_chain, metropolis_accept, propose_mass, symmetry_guard,
    DeconvolutionResult, McmcConfig,
};
pub use profile::{
    apply_analytical_threshold, observed_stutter_ratio, EvidenceProfile, LocusProfile, Peak,
    ReferenceProfile,
};
pub use version::{DropInVariant, HpdCap, VarianceModel, VersionProfile};
