//! Genotype posteriors by direct numerical integration.
//!
//! For small cases (one or two contributors, at most two loci, fixed variance
//! constants) the genotype weights can be computed by integrating the
//! likelihood against the uniform priors on templates and degradations over a
//! dense midpoint grid. This is the correctness oracle for the sampler: both
//! share the locus likelihood, only the integration differs.

use crate::error::{Error, Result};
use crate::genotype::{normalize_weights, LocusWeights};
use crate::heights::MassParameters;
use crate::kit::KitDefinition;
use crate::likelihood::locus_log_likelihood;
use crate::mcmc::CaseContext;
use crate::profile::EvidenceProfile;
use crate::version::VersionProfile;

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Grid points per template dimension.
    pub template_points: usize,
    /// Grid points per degradation dimension (1 pins degradation at its lower
    /// bound).
    pub degradation_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            template_points: 120,
            degradation_points: 1,
        }
    }
}

pub struct ExhaustivePosterior {
    pub loci: Vec<(String, LocusWeights)>,
    /// Set when halving the grid resolution moves any weight by more than the
    /// coarseness tolerance, suggesting the grid is too coarse.
    pub coarse_warning: Option<String>,
}

struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

fn logsumexp(values: &[f64]) -> f64 {
    let mut acc = LogSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Genotype weights by exhaustive integration over a parameter grid.
pub fn exhaustive_posterior(
    evidence: &EvidenceProfile,
    kit: &KitDefinition,
    noc: usize,
    flags: &VersionProfile,
    grid: GridSpec,
) -> Result<ExhaustivePosterior> {
    if noc > 2 {
        return Err(Error::Validation(
            "exhaustive posterior supports at most two contributors".into(),
        ));
    }
    if flags.varying_variances || flags.locus_amp_variance {
        return Err(Error::Validation(
            "exhaustive posterior requires fixed variance constants and amplification".into(),
        ));
    }
    let ctx = CaseContext::prepare(evidence, kit, noc, flags)?;
    if ctx.loci.len() > 2 {
        return Err(Error::Validation(
            "exhaustive posterior supports at most two loci with data".into(),
        ));
    }

    let (full, mass_share) = integrate(&ctx, flags, grid, 1)?;
    let (coarse, _) = integrate(&ctx, flags, grid, 2)?;
    // Two coarseness signals: a large share of the posterior mass on a single
    // grid point, or weights that move when the resolution is halved.
    let mut coarse_warning = if mass_share > 0.5 {
        Some(format!(
            "grid may be too coarse: {:.0}% of the posterior mass sits on one grid point",
            100.0 * mass_share
        ))
    } else {
        None
    };
    if coarse_warning.is_none() {
        'outer: for (l, (name, w)) in full.iter().enumerate() {
            for (set, wf) in &w.entries {
                let wc = coarse[l]
                    .1
                    .entries
                    .iter()
                    .find(|(s, _)| s == set)
                    .map_or(0.0, |(_, w)| *w);
                if (wf - wc).abs() > 0.02 {
                    coarse_warning = Some(format!(
                        "grid may be too coarse: weight at {name} moved by {:.4} when halving resolution",
                        (wf - wc).abs()
                    ));
                    break 'outer;
                }
            }
        }
    }

    Ok(ExhaustivePosterior {
        loci: full,
        coarse_warning,
    })
}

fn integrate(
    ctx: &CaseContext,
    flags: &VersionProfile,
    grid: GridSpec,
    stride: usize,
) -> Result<(Vec<(String, LocusWeights)>, f64)> {
    let noc = ctx.noc;
    let (t_lo, t_hi) = flags.template_prior;
    let (d_lo, d_hi) = flags.degradation_prior;

    let t_points: Vec<f64> = (0..grid.template_points)
        .step_by(stride)
        .map(|k| t_lo + (k as f64 + 0.5) * (t_hi - t_lo) / grid.template_points as f64)
        .collect();
    let d_points: Vec<f64> = if grid.degradation_points > 1 && d_hi > d_lo {
        (0..grid.degradation_points)
            .step_by(stride)
            .map(|k| d_lo + (k as f64 + 0.5) * (d_hi - d_lo) / grid.degradation_points as f64)
            .collect()
    } else {
        vec![d_lo]
    };

    let mut accumulators: Vec<Vec<LogSum>> = ctx
        .loci
        .iter()
        .map(|l| (0..l.sets.len()).map(|_| LogSum::new()).collect())
        .collect();
    let mut joint_mass = LogSum::new();
    let mut max_point = f64::NEG_INFINITY;

    // nested grid over noc template dims and noc degradation dims
    let mut t_idx = vec![0usize; noc];
    let mut d_idx = vec![0usize; noc];
    let mut ll_buf: Vec<Vec<f64>> = ctx.loci.iter().map(|l| vec![0.0; l.sets.len()]).collect();

    loop {
        let mass = MassParameters {
            templates: t_idx.iter().map(|&i| t_points[i]).collect(),
            degradations: d_idx.iter().map(|&i| d_points[i]).collect(),
            amp_efficiency: vec![1.0; ctx.loci.len()],
            c2_allele: flags.c2_allele,
            c2_stutter: flags.c2_stutter,
            drop_in_rate: flags.drop_in_rate,
            drop_in_lambda: flags.drop_in_lambda,
        };

        let mut total = 0.0;
        let mut locus_lse = Vec::with_capacity(ctx.loci.len());
        for (l, lc) in ctx.loci.iter().enumerate() {
            for (s, set) in lc.sets.iter().enumerate() {
                ll_buf[l][s] =
                    locus_log_likelihood(lc.profile, set, &mass, lc.index, lc.kit, ctx.at, flags)?;
            }
            let lse = logsumexp(&ll_buf[l]);
            locus_lse.push(lse);
            total += lse;
        }

        if total.is_finite() {
            joint_mass.add(total);
            max_point = max_point.max(total);
            for (l, lc) in ctx.loci.iter().enumerate() {
                for s in 0..lc.sets.len() {
                    accumulators[l][s].add(ll_buf[l][s] + total - locus_lse[l]);
                }
            }
        }

        // advance the grid odometer
        let mut done = true;
        for slot in 0..noc {
            t_idx[slot] += 1;
            if t_idx[slot] < t_points.len() {
                done = false;
                break;
            }
            t_idx[slot] = 0;
        }
        if done {
            let mut d_done = true;
            for slot in 0..noc {
                d_idx[slot] += 1;
                if d_idx[slot] < d_points.len() {
                    d_done = false;
                    break;
                }
                d_idx[slot] = 0;
            }
            if d_done {
                break;
            }
        }
    }

    let mut out = Vec::with_capacity(ctx.loci.len());
    for (l, lc) in ctx.loci.iter().enumerate() {
        let log_weights: Vec<f64> = accumulators[l].iter().map(|a| a.value()).collect();
        let norm = logsumexp(&log_weights);
        if !norm.is_finite() {
            return Err(Error::Domain(format!(
                "exhaustive posterior at locus {} has zero total mass",
                lc.name
            )));
        }
        let weights = normalize_weights(
            lc.sets
                .iter()
                .cloned()
                .zip(log_weights.iter().map(|lw| (lw - norm).exp()))
                .filter(|(_, w)| *w > 0.0)
                .collect(),
        )?;
        out.push((lc.name.clone(), weights));
    }
    let mass_share = if joint_mass.value().is_finite() {
        (max_point - joint_mass.value()).exp()
    } else {
        1.0
    };
    Ok((out, mass_share))
}
