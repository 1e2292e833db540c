//! Metropolis-Hastings sampler over mass parameters and genotype sets.
//!
//! Each iteration performs one Gaussian-walk block update on a parameter
//! class (templates, degradations, amplification multipliers, variance
//! constants) followed by one independence proposal on the genotype set of
//! every locus. Post-burn-in genotype visit counts become the posterior
//! weights.
//!
//! A single chain is strictly sequential; chains run concurrently and merge
//! by index, so results are bit-identical for a fixed seed regardless of
//! thread count.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genotype::{enumerate_genotype_sets, normalize_weights, GenotypeSet, LocusWeights};
use crate::heights::MassParameters;
use crate::kit::{KitDefinition, KitLocus};
use crate::likelihood::locus_log_likelihood;
use crate::profile::{EvidenceProfile, LocusProfile};
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::version::VersionProfile;

/// Gaussian-walk step sizes per parameter class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProposalSteps {
    pub template_sd: f64,
    pub degradation_sd: f64,
    pub amp_sd: f64,
    pub variance_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McmcConfig {
    pub burn_in: u32,
    pub post_burn: u32,
    pub chains: u32,
    pub seed: u64,
    pub steps: ProposalSteps,
    pub flags: VersionProfile,
}

impl McmcConfig {
    /// Desk-scale defaults: 4 chains of 10,000 burn-in + 50,000 recorded
    /// iterations.
    pub fn new(flags: VersionProfile, seed: u64) -> Self {
        McmcConfig {
            burn_in: 10_000,
            post_burn: 50_000,
            chains: 4,
            seed,
            steps: ProposalSteps {
                template_sd: flags.template_step_sd,
                degradation_sd: flags.degradation_step_sd,
                amp_sd: flags.amp_step_sd,
                variance_sd: flags.variance_step_sd,
            },
            flags,
        }
    }

    pub fn with_iterations(mut self, burn_in: u32, post_burn: u32) -> Self {
        assert!(burn_in > 0 && post_burn > 0);
        self.burn_in = burn_in;
        self.post_burn = post_burn;
        self
    }

    pub fn with_chains(mut self, chains: u32) -> Self {
        assert!(chains >= 1);
        self.chains = chains;
        self
    }
}

/// One locus of a prepared case: profile, kit entry, and enumerated support.
pub struct LocusContext<'a> {
    pub name: String,
    pub index: usize,
    pub profile: &'a LocusProfile,
    pub kit: &'a KitLocus,
    pub sets: Vec<GenotypeSet>,
}

/// A case ready to sample: non-empty loci in kit order with their genotype
/// supports enumerated. Empty loci are carried separately (they take no part
/// in the deconvolution and report LR 1).
pub struct CaseContext<'a> {
    pub sample_id: String,
    pub noc: usize,
    pub at: f64,
    pub loci: Vec<LocusContext<'a>>,
    pub empty_loci: Vec<String>,
    /// All evidence loci in kit order, empty ones included.
    pub locus_order: Vec<String>,
}

impl<'a> CaseContext<'a> {
    pub fn prepare(
        evidence: &'a EvidenceProfile,
        kit: &'a KitDefinition,
        noc: usize,
        flags: &VersionProfile,
    ) -> Result<Self> {
        let mut loci = Vec::new();
        let mut empty = Vec::new();
        let mut order = Vec::new();
        for kit_locus in &kit.loci {
            let Some(profile) = evidence.locus(&kit_locus.locus) else {
                continue;
            };
            order.push(kit_locus.locus.clone());
            if profile.is_empty() {
                empty.push(kit_locus.locus.clone());
                continue;
            }
            let sets = enumerate_genotype_sets(profile, kit_locus, noc, flags)?;
            loci.push(LocusContext {
                name: kit_locus.locus.clone(),
                index: loci.len(),
                profile,
                kit: kit_locus,
                sets,
            });
        }
        if loci.is_empty() {
            return Err(Error::Validation(format!(
                "profile {} has no locus with peaks",
                evidence.sample_id
            )));
        }
        Ok(CaseContext {
            sample_id: evidence.sample_id.clone(),
            noc,
            at: evidence.analytical_threshold,
            loci,
            empty_loci: empty,
            locus_order: order,
        })
    }
}

/// Parameter classes updated by the Gaussian walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamClass {
    Templates,
    Degradations,
    AmpEfficiency,
    VarianceConstants,
}

impl ParamClass {
    pub fn name(self) -> &'static str {
        match self {
            ParamClass::Templates => "templates",
            ParamClass::Degradations => "degradations",
            ParamClass::AmpEfficiency => "amp_efficiency",
            ParamClass::VarianceConstants => "variance_constants",
        }
    }
}

fn active_classes(flags: &VersionProfile) -> Vec<ParamClass> {
    let mut classes = vec![ParamClass::Templates];
    if flags.degradation_prior.1 > flags.degradation_prior.0 {
        classes.push(ParamClass::Degradations);
    }
    if flags.locus_amp_variance {
        classes.push(ParamClass::AmpEfficiency);
    }
    if flags.varying_variances {
        classes.push(ParamClass::VarianceConstants);
    }
    classes
}

/// Reflect a proposed value at zero to keep it positive.
pub fn reflect(x: f64) -> f64 {
    x.abs()
}

/// Perturb one parameter class with centred Gaussian noise, reflecting at
/// zero. The proposal is symmetric so the Hastings ratio is 1.
pub fn propose_mass(
    current: &MassParameters,
    class: ParamClass,
    steps: &ProposalSteps,
    rng: &mut Rng,
) -> MassParameters {
    let mut cand = current.clone();
    let mut step = |v: &mut f64, sd: f64| {
        if sd > 0.0 {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            *v = reflect(*v + sd * z);
        }
    };
    match class {
        ParamClass::Templates => cand
            .templates
            .iter_mut()
            .for_each(|t| step(t, steps.template_sd)),
        ParamClass::Degradations => cand
            .degradations
            .iter_mut()
            .for_each(|d| step(d, steps.degradation_sd)),
        ParamClass::AmpEfficiency => cand
            .amp_efficiency
            .iter_mut()
            .for_each(|a| step(a, steps.amp_sd)),
        ParamClass::VarianceConstants => {
            step(&mut cand.c2_allele, steps.variance_sd);
            step(&mut cand.c2_stutter, steps.variance_sd);
        }
    }
    cand
}

/// Accept with probability `min(1, exp(candidate - current))`.
pub fn metropolis_accept(
    log_post_current: f64,
    log_post_candidate: f64,
    rng: &mut Rng,
) -> Result<bool> {
    if log_post_current.is_nan() || log_post_candidate.is_nan() {
        return Err(Error::Domain("NaN log posterior in Metropolis step".into()));
    }
    if !log_post_current.is_finite() && log_post_current > 0.0 {
        return Err(Error::Domain("non-finite current log posterior".into()));
    }
    let delta = log_post_candidate - log_post_current;
    let u: f64 = rng.random::<f64>();
    Ok(u < delta.exp())
}

/// With the symmetry restriction on, a template proposal may not cross the
/// plane of symmetry between contributors: the candidate must preserve the
/// descending template order. Applied pairwise to adjacent templates.
pub fn symmetry_guard(_current: &[f64], candidate: &[f64]) -> bool {
    candidate.windows(2).all(|w| w[0] >= w[1])
}

fn log_prior(mass: &MassParameters, flags: &VersionProfile) -> f64 {
    let (t_lo, t_hi) = flags.template_prior;
    for &t in &mass.templates {
        if t <= t_lo || t > t_hi {
            return f64::NEG_INFINITY;
        }
    }
    let (d_lo, d_hi) = flags.degradation_prior;
    for &d in &mass.degradations {
        if d < d_lo || d > d_hi {
            return f64::NEG_INFINITY;
        }
    }
    let mut lp = 0.0;
    if flags.locus_amp_variance {
        let s = flags.amp_prior_sd;
        for &a in &mass.amp_efficiency {
            if a <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let la = a.ln();
            lp += -la * la / (2.0 * s * s) - la;
        }
    }
    if flags.varying_variances {
        let shape = flags.variance_prior_shape;
        for (c2, c2_0) in [
            (mass.c2_allele, flags.c2_allele),
            (mass.c2_stutter, flags.c2_stutter),
        ] {
            // inverse-gamma around the configured constant, hard-bounded at
            // ten times it: an unbounded variance constant can blanket-excuse
            // arbitrarily bad fits through tiny composite components
            if c2 <= 0.0 || c2 > 10.0 * c2_0 {
                return f64::NEG_INFINITY;
            }
            let scale = flags.variance_prior_scale(c2_0);
            lp += -(shape + 1.0) * c2.ln() - scale / c2;
        }
    }
    lp
}

/// Chain state with cached per-locus log-likelihoods and log posterior.
pub struct ChainState {
    pub mass: MassParameters,
    pub set_indices: Vec<usize>,
    pub locus_ll: Vec<f64>,
    pub log_prior: f64,
    pub log_post: f64,
}

/// Starting state. Templates start at 1000 rfu under the legacy flag, or at
/// profile-driven values: the mean total observed height per locus, split
/// between contributors in proportion to the summed heights of consecutive
/// descending peak pairs. Genotype sets start at their single-assignment
/// likelihood maximum.
pub fn initialize_chain<F>(ctx: &CaseContext, config: &McmcConfig, ll: &F) -> Result<ChainState>
where
    F: Fn(&LocusContext, usize, &MassParameters) -> Result<f64>,
{
    let flags = &config.flags;
    let noc = ctx.noc;
    let (_, t_hi) = flags.template_prior;

    // profile-driven descending template estimate
    let totals: Vec<f64> = ctx.loci.iter().map(|l| l.profile.total_height()).collect();
    let mean_total = totals.iter().sum::<f64>() / totals.len() as f64;
    let mut shares = vec![0.0f64; noc];
    for lc in &ctx.loci {
        let mut heights: Vec<f64> = lc.profile.peaks.iter().map(|p| p.height).collect();
        heights.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = heights.iter().sum();
        for n in 0..noc {
            let pair: f64 = heights.iter().skip(2 * n).take(2).sum();
            shares[n] += pair / total;
        }
    }
    let floor = 0.05 / noc as f64;
    for s in shares.iter_mut() {
        *s = (*s / ctx.loci.len() as f64).max(floor);
    }
    let norm: f64 = shares.iter().sum();
    let mut dynamic: Vec<f64> = shares.iter().map(|s| mean_total * s / norm).collect();
    for t in dynamic.iter_mut() {
        *t = t.clamp(1.0, 0.999 * t_hi);
    }
    dynamic.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let templates = if flags.dynamic_start_templates {
        dynamic.clone()
    } else {
        vec![1000.0f64.clamp(1.0, 0.999 * t_hi); noc]
    };

    let mass = MassParameters {
        templates,
        degradations: vec![flags.degradation_prior.0; noc],
        amp_efficiency: vec![1.0; ctx.loci.len()],
        c2_allele: flags.c2_allele,
        c2_stutter: flags.c2_stutter,
        drop_in_rate: flags.drop_in_rate,
        drop_in_lambda: flags.drop_in_lambda,
    };

    // Genotype sets start at their single-assignment likelihood maximum. The
    // maximisation is evaluated at the profile-driven descending templates
    // even under the legacy equal start: with exactly equal templates all
    // contributor orderings tie and a chain could be seeded against the
    // descending-label convention, in a mode the symmetry restriction then
    // stops it from leaving.
    let seeding_mass = MassParameters {
        templates: dynamic,
        ..mass.clone()
    };
    let mut set_indices = Vec::with_capacity(ctx.loci.len());
    for lc in &ctx.loci {
        let mut best = (0usize, f64::NEG_INFINITY);
        for idx in 0..lc.sets.len() {
            let v = ll(lc, idx, &seeding_mass)?;
            if v > best.1 {
                best = (idx, v);
            }
        }
        set_indices.push(best.0);
    }

    let mut locus_ll = Vec::with_capacity(ctx.loci.len());
    for (l, lc) in ctx.loci.iter().enumerate() {
        locus_ll.push(ll(lc, set_indices[l], &mass)?);
    }

    let lp = log_prior(&mass, flags);
    let total = locus_ll.iter().sum::<f64>() + lp;
    Ok(ChainState {
        mass,
        set_indices,
        locus_ll,
        log_prior: lp,
        log_post: total,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceRate {
    pub class: String,
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptanceRate {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

pub(crate) struct ChainOutput {
    counts: Vec<Vec<u64>>,
    accept: Vec<AcceptanceRate>,
    genotype: AcceptanceRate,
    label_swap: AcceptanceRate,
    order_flips: u64,
    n_samples: u64,
    t_sum: Vec<f64>,
    t_sq: Vec<f64>,
    d_sum: Vec<f64>,
    d_sq: Vec<f64>,
    amp_sum: Vec<f64>,
    amp_sq: Vec<f64>,
    prop_sum: Vec<f64>,
    c2_sum: [f64; 2],
    c2_sq: [f64; 2],
}

pub(crate) fn run_chain_with<F>(
    ctx: &CaseContext,
    config: &McmcConfig,
    chain_seed: u64,
    ll: &F,
) -> Result<ChainOutput>
where
    F: Fn(&LocusContext, usize, &MassParameters) -> Result<f64>,
{
    let flags = &config.flags;
    let mut rng = rng_from_seed(chain_seed);
    let mut state = initialize_chain(ctx, config, ll)?;
    let classes = active_classes(flags);
    let n_loci = ctx.loci.len();
    let noc = ctx.noc;

    let mut out = ChainOutput {
        counts: ctx.loci.iter().map(|l| vec![0u64; l.sets.len()]).collect(),
        accept: classes
            .iter()
            .map(|c| AcceptanceRate {
                class: c.name().to_string(),
                proposed: 0,
                accepted: 0,
            })
            .collect(),
        genotype: AcceptanceRate {
            class: "genotype".to_string(),
            proposed: 0,
            accepted: 0,
        },
        label_swap: AcceptanceRate {
            class: "label_swap".to_string(),
            proposed: 0,
            accepted: 0,
        },
        order_flips: 0,
        n_samples: 0,
        t_sum: vec![0.0; noc],
        t_sq: vec![0.0; noc],
        d_sum: vec![0.0; noc],
        d_sq: vec![0.0; noc],
        amp_sum: vec![0.0; n_loci],
        amp_sq: vec![0.0; n_loci],
        prop_sum: vec![0.0; noc],
        c2_sum: [0.0; 2],
        c2_sq: [0.0; 2],
    };

    let total_iters = config.burn_in as u64 + config.post_burn as u64;
    let mut prev_order: Option<Vec<bool>> = None;

    for iter in 0..total_iters {
        // --- mass-parameter block update ---
        let ci = (iter % classes.len() as u64) as usize;
        let class = classes[ci];
        let cand_mass = propose_mass(&state.mass, class, &config.steps, &mut rng);
        out.accept[ci].proposed += 1;

        let guard_ok = !(class == ParamClass::Templates && flags.symmetry_restriction)
            || symmetry_guard(&state.mass.templates, &cand_mass.templates);
        if guard_ok {
            let cand_prior = log_prior(&cand_mass, flags);
            let (cand_lls, cand_post) = if cand_prior.is_finite() {
                let mut lls = Vec::with_capacity(n_loci);
                let mut total = cand_prior;
                for (l, lc) in ctx.loci.iter().enumerate() {
                    let v = ll(lc, state.set_indices[l], &cand_mass)?;
                    total += v;
                    lls.push(v);
                }
                (Some(lls), total)
            } else {
                (None, f64::NEG_INFINITY)
            };
            if metropolis_accept(state.log_post, cand_post, &mut rng)? {
                state.mass = cand_mass;
                state.locus_ll = cand_lls.expect("accepted candidate has likelihoods");
                state.log_prior = cand_prior;
                state.log_post = cand_post;
                out.accept[ci].accepted += 1;
            }
        }

        // --- one genotype update per locus ---
        for (l, lc) in ctx.loci.iter().enumerate() {
            out.genotype.proposed += 1;
            let idx = rng.random_range(0..lc.sets.len());
            if idx == state.set_indices[l] {
                out.genotype.accepted += 1;
                continue;
            }
            let cand_ll = ll(lc, idx, &state.mass)?;
            if metropolis_accept(state.locus_ll[l], cand_ll, &mut rng)? {
                state.log_post += cand_ll - state.locus_ll[l];
                state.locus_ll[l] = cand_ll;
                state.set_indices[l] = idx;
                out.genotype.accepted += 1;
            }
        }

        // --- contributor label swap ---
        // A joint transposition of two contributors' parameters and every
        // locus's genotypes. The posterior is invariant under relabeling, so
        // this mixes the order-swapped modes that the walk alone crosses
        // slowly. Disabled under the symmetry restriction, which exists to
        // forbid exactly this crossing.
        if noc >= 2 && !flags.symmetry_restriction {
            out.label_swap.proposed += 1;
            let i = rng.random_range(0..noc);
            let j = rng.random_range(0..noc);
            if i != j {
                let mut cand_mass = state.mass.clone();
                cand_mass.templates.swap(i, j);
                cand_mass.degradations.swap(i, j);
                let mut cand_indices = Vec::with_capacity(n_loci);
                let mut ok = true;
                for (l, lc) in ctx.loci.iter().enumerate() {
                    let swapped = lc.sets[state.set_indices[l]].swapped(i, j);
                    match lc.sets.binary_search(&swapped) {
                        Ok(idx) => cand_indices.push(idx),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    let cand_prior = log_prior(&cand_mass, flags);
                    let mut cand_post = cand_prior;
                    let mut cand_lls = Vec::with_capacity(n_loci);
                    for (l, lc) in ctx.loci.iter().enumerate() {
                        let v = ll(lc, cand_indices[l], &cand_mass)?;
                        cand_post += v;
                        cand_lls.push(v);
                    }
                    if metropolis_accept(state.log_post, cand_post, &mut rng)? {
                        state.mass = cand_mass;
                        state.set_indices = cand_indices;
                        state.locus_ll = cand_lls;
                        state.log_prior = cand_prior;
                        state.log_post = cand_post;
                        out.label_swap.accepted += 1;
                    }
                }
            } else {
                out.label_swap.accepted += 1;
            }
        }

        // cached values must equal recomputation
        #[cfg(debug_assertions)]
        if iter % 1000 == 999 {
            let mut total = log_prior(&state.mass, flags);
            for (l, lc) in ctx.loci.iter().enumerate() {
                total += ll(lc, state.set_indices[l], &state.mass)?;
            }
            debug_assert!(
                (total - state.log_post).abs() < 1e-9,
                "cached log posterior drifted: {total} vs {}",
                state.log_post
            );
        }

        // --- post-burn bookkeeping ---
        if iter >= config.burn_in as u64 {
            out.n_samples += 1;
            for (l, &s) in state.set_indices.iter().enumerate() {
                out.counts[l][s] += 1;
            }
            let order: Vec<bool> = state
                .mass
                .templates
                .windows(2)
                .map(|w| w[0] >= w[1])
                .collect();
            if let Some(prev) = &prev_order {
                if *prev != order {
                    out.order_flips += 1;
                }
            }
            prev_order = Some(order);

            for n in 0..noc {
                let t = state.mass.templates[n];
                out.t_sum[n] += t;
                out.t_sq[n] += t * t;
                let d = state.mass.degradations[n];
                out.d_sum[n] += d;
                out.d_sq[n] += d * d;
            }
            let total_t: f64 = state.mass.templates.iter().sum();
            for n in 0..noc {
                out.prop_sum[n] += state.mass.templates[n] / total_t;
            }
            for l in 0..n_loci {
                let a = state.mass.amp_efficiency[l];
                out.amp_sum[l] += a;
                out.amp_sq[l] += a * a;
            }
            out.c2_sum[0] += state.mass.c2_allele;
            out.c2_sq[0] += state.mass.c2_allele * state.mass.c2_allele;
            out.c2_sum[1] += state.mass.c2_stutter;
            out.c2_sq[1] += state.mass.c2_stutter * state.mass.c2_stutter;
        }
    }

    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParameterSummary {
    pub mean: f64,
    pub sd: f64,
}

fn summarize(sum: f64, sq: f64, n: f64) -> ParameterSummary {
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0);
    ParameterSummary {
        mean,
        sd: var.sqrt(),
    }
}

/// Posterior genotype weights and parameter summaries for one locus.
#[derive(Debug, Clone, Serialize)]
pub struct LocusDeconvolution {
    pub locus: String,
    pub sets: Vec<GenotypeSet>,
    pub counts: Vec<u64>,
    pub per_chain_counts: Vec<Vec<u64>>,
    pub weights: LocusWeights,
}

impl LocusDeconvolution {
    /// Weights visited by a single chain.
    pub fn chain_weights(&self, chain: usize) -> Result<LocusWeights> {
        let counts = &self.per_chain_counts[chain];
        normalize_weights(
            self.sets
                .iter()
                .cloned()
                .zip(counts.iter().map(|&c| c as f64))
                .filter(|(_, c)| *c > 0.0)
                .collect(),
        )
    }

    /// Sample variance across chains of each set's weight, largest first.
    pub fn weight_variance_across_chains(&self) -> Vec<f64> {
        let chains = self.per_chain_counts.len();
        let mut vars = Vec::with_capacity(self.sets.len());
        for s in 0..self.sets.len() {
            let ws: Vec<f64> = (0..chains)
                .map(|c| {
                    let total: u64 = self.per_chain_counts[c].iter().sum();
                    self.per_chain_counts[c][s] as f64 / total as f64
                })
                .collect();
            let mean = ws.iter().sum::<f64>() / chains as f64;
            let var = ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / chains as f64;
            vars.push(var);
        }
        vars
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvolutionResult {
    pub sample_id: String,
    pub noc: usize,
    pub profile_name: String,
    pub seed: u64,
    pub chains: u32,
    pub burn_in: u32,
    pub post_burn: u32,
    pub loci: Vec<LocusDeconvolution>,
    pub empty_loci: Vec<String>,
    /// All evidence loci in kit order, empty ones included.
    pub locus_order: Vec<String>,
    pub templates: Vec<ParameterSummary>,
    pub degradations: Vec<ParameterSummary>,
    pub mixture_proportions: Vec<f64>,
    pub amp_efficiency: Vec<ParameterSummary>,
    pub c2_allele: ParameterSummary,
    pub c2_stutter: ParameterSummary,
    pub acceptance: Vec<AcceptanceRate>,
    pub order_flips_per_chain: Vec<u64>,
}

impl DeconvolutionResult {
    pub fn locus(&self, name: &str) -> Option<&LocusDeconvolution> {
        self.loci.iter().find(|l| l.locus == name)
    }
}

/// Run the full deconvolution: `chains` independent chains with seed-derived
/// sub-seeds, merged by index.
pub fn deconvolve(
    evidence: &EvidenceProfile,
    kit: &KitDefinition,
    noc: usize,
    config: &McmcConfig,
) -> Result<DeconvolutionResult> {
    let ctx = CaseContext::prepare(evidence, kit, noc, &config.flags)?;
    let flags = config.flags.clone();
    let at = ctx.at;
    let ll = move |lc: &LocusContext, idx: usize, mass: &MassParameters| {
        locus_log_likelihood(
            lc.profile,
            &lc.sets[idx],
            mass,
            lc.index,
            lc.kit,
            at,
            &flags,
        )
    };
    deconvolve_with(&ctx, config, &ll)
}

pub(crate) fn deconvolve_with<F>(
    ctx: &CaseContext,
    config: &McmcConfig,
    ll: &F,
) -> Result<DeconvolutionResult>
where
    F: Fn(&LocusContext, usize, &MassParameters) -> Result<f64> + Sync,
{
    let outputs: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let seed = derive_seed(config.seed, c as u64, &ctx.sample_id);
            run_chain_with(ctx, config, seed, ll)
        })
        .collect::<Result<Vec<_>>>()?;

    let n_loci = ctx.loci.len();
    let noc = ctx.noc;
    let n_total: f64 = outputs.iter().map(|o| o.n_samples as f64).sum();

    let mut loci = Vec::with_capacity(n_loci);
    for (l, lc) in ctx.loci.iter().enumerate() {
        let mut counts = vec![0u64; lc.sets.len()];
        let mut per_chain = Vec::with_capacity(outputs.len());
        for o in &outputs {
            for (s, &c) in o.counts[l].iter().enumerate() {
                counts[s] += c;
            }
            per_chain.push(o.counts[l].clone());
        }
        let weights = normalize_weights(
            lc.sets
                .iter()
                .cloned()
                .zip(counts.iter().map(|&c| c as f64))
                .filter(|(_, c)| *c > 0.0)
                .collect(),
        )?;
        loci.push(LocusDeconvolution {
            locus: lc.name.clone(),
            sets: lc.sets.clone(),
            counts,
            per_chain_counts: per_chain,
            weights,
        });
    }

    let sum_over = |f: &dyn Fn(&ChainOutput) -> f64| outputs.iter().map(f).sum::<f64>();
    let templates: Vec<ParameterSummary> = (0..noc)
        .map(|n| summarize(sum_over(&|o| o.t_sum[n]), sum_over(&|o| o.t_sq[n]), n_total))
        .collect();
    let degradations: Vec<ParameterSummary> = (0..noc)
        .map(|n| summarize(sum_over(&|o| o.d_sum[n]), sum_over(&|o| o.d_sq[n]), n_total))
        .collect();
    let amp: Vec<ParameterSummary> = (0..n_loci)
        .map(|l| {
            summarize(
                sum_over(&|o| o.amp_sum[l]),
                sum_over(&|o| o.amp_sq[l]),
                n_total,
            )
        })
        .collect();
    let proportions: Vec<f64> = (0..noc)
        .map(|n| sum_over(&|o| o.prop_sum[n]) / n_total)
        .collect();

    let mut acceptance: Vec<AcceptanceRate> = Vec::new();
    for o in &outputs {
        let extras = [&o.genotype, &o.label_swap];
        for (i, a) in o.accept.iter().chain(extras).enumerate() {
            if acceptance.len() <= i {
                acceptance.push(AcceptanceRate {
                    class: a.class.clone(),
                    proposed: 0,
                    accepted: 0,
                });
            }
            acceptance[i].proposed += a.proposed;
            acceptance[i].accepted += a.accepted;
        }
    }

    Ok(DeconvolutionResult {
        sample_id: ctx.sample_id.clone(),
        noc,
        profile_name: config.flags.name.clone(),
        seed: config.seed,
        chains: config.chains,
        burn_in: config.burn_in,
        post_burn: config.post_burn,
        loci,
        empty_loci: ctx.empty_loci.clone(),
        locus_order: ctx.locus_order.clone(),
        templates,
        degradations,
        mixture_proportions: proportions,
        amp_efficiency: amp,
        c2_allele: summarize(
            sum_over(&|o| o.c2_sum[0]),
            sum_over(&|o| o.c2_sq[0]),
            n_total,
        ),
        c2_stutter: summarize(
            sum_over(&|o| o.c2_sum[1]),
            sum_over(&|o| o.c2_sq[1]),
            n_total,
        ),
        acceptance,
        order_flips_per_chain: outputs.iter().map(|o| o.order_flips).collect(),
    })
}
