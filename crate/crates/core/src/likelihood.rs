//! Log-probability of an observed locus profile given a genotype set and mass
//! parameters.
//!
//! Observed peaks are lognormal around their total expected height with
//! log-variance from the composite/effective variance model. An expected
//! position with no observed peak contributes the dropout mass
//! `ln Phi((ln at - ln E) / sigma)`. Drop-in alleles pay the drop-in rate and
//! height density; a locus with no drop-ins contributes `ln(1 - p)`.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::genotype::GenotypeSet;
use crate::heights::{
    composite_variance_with, effective_variance, expected_heights, MassParameters,
    PositionExpectation,
};
use crate::kit::KitLocus;
use crate::profile::LocusProfile;
use crate::version::{DropInVariant, VersionProfile};

const LN_2PI: f64 = 1.8378770664093453;

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Lognormal log-density of an observed height `o` around expectation `e`.
pub fn log_density(o: f64, e: f64, sigma2: f64) -> f64 {
    if !(e > 0.0) || !(o > 0.0) || !sigma2.is_finite() || sigma2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = o.ln() - e.ln();
    -o.ln() - 0.5 * (LN_2PI + sigma2.ln()) - r * r / (2.0 * sigma2)
}

/// Log-probability that a peak with expectation `e` falls below the
/// analytical threshold.
pub fn dropout_log_probability(e: f64, sigma2: f64, at: f64) -> f64 {
    if !(e > 0.0) {
        // nothing expected; dropout is certain
        return 0.0;
    }
    if !(at > 0.0) {
        return f64::NEG_INFINITY;
    }
    if !sigma2.is_finite() {
        // infinite-variance sentinel: half the lognormal mass sits below any
        // threshold in the limit
        return 0.5f64.ln();
    }
    let z = (at.ln() - e.ln()) / sigma2.sqrt();
    let p = std_normal_cdf(z);
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Log-probability of one drop-in peak.
///
/// Legacy: `ln p + ln(lambda) - lambda (h - at)` (truncated exponential
/// height density). Refined: the same plus an extra `-lambda_extra (h - at)`
/// penalty, making taller drop-ins rarer.
pub fn drop_in_log_probability(
    height: f64,
    at: f64,
    mass: &MassParameters,
    flags: &VersionProfile,
) -> f64 {
    let p = mass.drop_in_rate;
    if !(p > 0.0) {
        return f64::NEG_INFINITY;
    }
    let base = p.ln() + mass.drop_in_lambda.ln() - mass.drop_in_lambda * (height - at);
    match flags.drop_in_variant {
        DropInVariant::Legacy => base,
        DropInVariant::Refined => base - flags.drop_in_lambda_extra * (height - at),
    }
}

fn position_variance(
    exp: &PositionExpectation,
    mass: &MassParameters,
    flags: &VersionProfile,
) -> Result<f64> {
    let mut components: Vec<(f64, f64)> = Vec::with_capacity(2);
    if exp.allelic > 0.0 {
        components.push((exp.allelic, mass.c2_allele));
    }
    let st = exp.stutter_total();
    if st > 0.0 {
        components.push((st, mass.c2_stutter));
    }
    composite_variance_with(&components, flags.composite_variance, |e, c2| {
        effective_variance(e, c2, flags)
    })
}

/// Score of an observed, uncovered peak labelled drop-in at a position where
/// stutter of height `e_stutter` was also expected.
///
/// The drop-in pays its own probability and the expected stutter is treated
/// as dropped out. With the undersized-stutter restriction on, a peak below
/// its pure-stutter expectation cannot score better through the
/// higher-variability drop-in route than through plain stutter.
pub(crate) fn drop_in_position_term(
    height: f64,
    e_stutter: f64,
    sigma2_stutter: f64,
    at: f64,
    drop_in_lp: f64,
    flags: &VersionProfile,
) -> f64 {
    if e_stutter <= 0.0 {
        return drop_in_lp;
    }
    let mixed = drop_in_lp + dropout_log_probability(e_stutter, sigma2_stutter, at);
    if flags.undersized_stutter_restriction && height < e_stutter {
        mixed.min(log_density(height, e_stutter, sigma2_stutter))
    } else {
        mixed
    }
}

/// Log-likelihood of one locus's peaks given a genotype set and mass
/// parameters.
pub fn locus_log_likelihood(
    profile: &LocusProfile,
    set: &GenotypeSet,
    mass: &MassParameters,
    locus_index: usize,
    kit: &KitLocus,
    at: f64,
    flags: &VersionProfile,
) -> Result<f64> {
    let expected = expected_heights(set, mass, locus_index, profile, kit, flags);
    let mut ll = 0.0;

    for peak in &profile.peaks {
        let exp = expected
            .positions
            .get(&peak.allele)
            .copied()
            .unwrap_or_default();
        let is_drop_in = set.drop_in.contains(&peak.allele);

        if is_drop_in {
            if exp.allelic > 0.0 {
                return Err(Error::Contract(format!(
                    "locus {}: allele {} is both contributed and labelled drop-in",
                    profile.locus, peak.allele
                )));
            }
            let dl = drop_in_log_probability(peak.height, at, mass, flags);
            let e_st = exp.stutter_total();
            let sigma2_st = effective_variance(e_st, mass.c2_stutter, flags);
            ll += drop_in_position_term(peak.height, e_st, sigma2_st, at, dl, flags);
        } else if exp.total() > 0.0 {
            let sigma2 = position_variance(&exp, mass, flags)?;
            ll += log_density(peak.height, exp.total(), sigma2);
        } else {
            return Err(Error::Contract(format!(
                "locus {}: observed peak {} is explained by nothing in the genotype set",
                profile.locus, peak.allele
            )));
        }
    }

    // expected positions that did not appear
    for (&allele, exp) in &expected.positions {
        if profile.peak(allele).is_some() || exp.total() <= 0.0 {
            continue;
        }
        let sigma2 = position_variance(exp, mass, flags)?;
        ll += dropout_log_probability(exp.total(), sigma2, at);
    }

    // dropped-out contributor alleles (sentinels)
    for &e in &expected.sentinel_expectations {
        if e <= 0.0 {
            continue;
        }
        let sigma2 = effective_variance(e, mass.c2_allele, flags);
        ll += dropout_log_probability(e, sigma2, at);
    }

    if set.drop_in.is_empty() {
        ll += (1.0 - mass.drop_in_rate).ln();
    }

    Ok(ll)
}
