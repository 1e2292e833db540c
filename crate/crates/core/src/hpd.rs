//! Highest-posterior-density intervals on the log10 likelihood ratio.
//!
//! Three uncertainty sources are resampled: allele frequencies (multinomial
//! redraw of the observation database per locus and population), theta (when
//! specified as a distribution), and sampler variability (a Gaussian term
//! whose s.d. comes from the spread of per-chain LR values).
//!
//! Resampled frequencies are floored according to the configured cap: the
//! population-size cap floors at 1/(2N); the minimum-resampled-count cap
//! floors at (smallest positive resampled count)/(2N), so the lower bound can
//! widen no further than the value implied by that frequency. Without a cap
//! a token floor of 1/(4N) keeps the ratio defined.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::Distribution;
use serde::Serialize;

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::frequencies::AlleleFrequencyTable;
use crate::lr::{log10_report, population_lr_with_views, stratify, LocusFreqView, LrCase};
use crate::mcmc::DeconvolutionResult;
use crate::seed::{rng_from_seed, Rng};
use crate::version::HpdCap;

/// Theta as a point value or as a sampled distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    Point(f64),
    Samples(Vec<f64>),
}

impl ThetaSpec {
    pub fn point(&self) -> f64 {
        match self {
            ThetaSpec::Point(t) => *t,
            ThetaSpec::Samples(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            ThetaSpec::Point(t) => *t,
            ThetaSpec::Samples(v) => v[rng.random_range(0..v.len())],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| (0.0..1.0).contains(&t);
        let valid = match self {
            ThetaSpec::Point(t) => ok(*t),
            ThetaSpec::Samples(v) => !v.is_empty() && v.iter().all(|t| ok(*t)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Validation(
                "theta support must lie within [0, 1)".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HpdConfig {
    pub samples: u32,
    /// One-sided lower quantile (0.005 gives a 99% one-sided lower bound).
    pub quantile: f64,
    pub cap: HpdCap,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HpdInterval {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

/// Linear-interpolation quantile of a sample.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (xs.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

fn multinomial_redraw(counts: &BTreeMap<Allele, f64>, rng: &mut Rng) -> BTreeMap<Allele, f64> {
    let total: f64 = counts.values().sum();
    let trials = total.round() as u64;
    let mut out = BTreeMap::new();
    let mut remaining_trials = trials;
    let mut remaining_p = 1.0f64;
    let n = counts.len();
    for (i, (&a, &c)) in counts.iter().enumerate() {
        if remaining_trials == 0 {
            out.insert(a, 0.0);
            continue;
        }
        if i == n - 1 {
            out.insert(a, remaining_trials as f64);
            break;
        }
        let p = (c / total / remaining_p).clamp(0.0, 1.0);
        let draw = rand_distr::Binomial::new(remaining_trials, p)
            .map(|d| d.sample(rng))
            .unwrap_or(0);
        out.insert(a, draw as f64);
        remaining_trials -= draw;
        remaining_p -= c / total;
        if remaining_p <= 0.0 {
            remaining_p = f64::MIN_POSITIVE;
        }
    }
    out
}

/// Standard deviation across chains of the stratified log10 LR, the sampler
/// term of the interval.
pub fn mcmc_log10_sd(
    case: &LrCase,
    deconv: &DeconvolutionResult,
    table: &AlleleFrequencyTable,
    theta: f64,
) -> Result<f64> {
    let chains = deconv.chains as usize;
    if chains < 2 {
        return Err(Error::Validation(
            "per-chain variability requires at least two chains".into(),
        ));
    }
    let mut values = Vec::with_capacity(chains);
    for c in 0..chains {
        let mut chain_case = case.clone();
        for locus in chain_case.loci.iter_mut() {
            if locus.weights.is_some() {
                let ld = deconv
                    .locus(&locus.name)
                    .ok_or_else(|| Error::Lookup(format!("no deconvolution for {}", locus.name)))?;
                locus.weights = Some(ld.chain_weights(c)?);
            }
        }
        let report = crate::lr::lr_report(&chain_case, table, theta)?;
        values.push(report.stratified.log10);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}

/// Resample the HPD distribution of the stratified log10 LR.
///
/// `mcmc_sd` must come from a multi-chain run; `None` means the deconvolution
/// was a point estimate only, which is an error.
pub fn hpd_interval(
    case: &LrCase,
    table: &AlleleFrequencyTable,
    theta: &ThetaSpec,
    config: &HpdConfig,
    mcmc_sd: Option<f64>,
) -> Result<HpdInterval> {
    theta.validate()?;
    let Some(mcmc_sd) = mcmc_sd else {
        return Err(Error::Validation(
            "HPD interval requested on a point-estimate-only run".into(),
        ));
    };
    if config.samples == 0 {
        return Err(Error::Validation("HPD needs at least one sample".into()));
    }

    let point_report = crate::lr::lr_report(case, table, theta.point())?;
    let point = point_report.stratified.log10;

    let mut rng = rng_from_seed(config.seed);
    let proportions: Vec<f64> = table.populations.iter().map(|p| p.proportion).collect();
    let mut samples = Vec::with_capacity(config.samples as usize);

    for _ in 0..config.samples {
        let theta_s = theta.draw(&mut rng);
        let mut prs = Vec::with_capacity(table.populations.len());
        for pop in &table.populations {
            let two_n = 2.0 * pop.n;
            let mut views = BTreeMap::new();
            for locus in &case.loci {
                if locus.weights.is_none() {
                    continue;
                }
                let counts = table.locus_counts(&pop.name, &locus.name).ok_or_else(|| {
                    Error::Lookup(format!("no counts for {} in {}", locus.name, pop.name))
                })?;
                let redraw = multinomial_redraw(counts, &mut rng);
                let floor = match config.cap {
                    HpdCap::None => 0.5 / two_n,
                    HpdCap::PopulationSize => 1.0 / two_n,
                    HpdCap::MinResampledCount => {
                        let min_pos = redraw
                            .values()
                            .copied()
                            .filter(|&c| c > 0.0)
                            .fold(f64::INFINITY, f64::min);
                        if min_pos.is_finite() {
                            min_pos / two_n
                        } else {
                            1.0 / two_n
                        }
                    }
                };
                let freqs: BTreeMap<Allele, f64> =
                    redraw.iter().map(|(&a, &c)| (a, c / two_n)).collect();
                views.insert(
                    locus.name.clone(),
                    LocusFreqView::from_frequencies(freqs, floor, &locus.observed),
                );
            }
            let pop_lr = population_lr_with_views(case, &views, &pop.name, theta_s)?;
            prs.push((pop_lr.pr_hp_product, pop_lr.pr_hd_product));
        }
        let scale = case.resolved.hp_position_count as f64 / case.noc as f64;
        let lr = stratify(&prs, &proportions)? * scale;
        let noise: f64 = if mcmc_sd > 0.0 {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            mcmc_sd * z
        } else {
            0.0
        };
        samples.push(log10_report(lr)? + noise);
    }

    Ok(HpdInterval {
        lower: quantile(&samples, config.quantile),
        point,
        upper: quantile(&samples, 1.0 - config.quantile),
    })
}
