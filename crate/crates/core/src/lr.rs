//! Likelihood ratios from posterior genotype weights.
//!
//! Under Hp the person of interest occupies one contributor position and the
//! remaining positions are unknown; under Hd all non-assumed positions are
//! unknown. Unknown genotypes are priced with the Balding-Nichols
//! subpopulation model, sequentially conditioned on the typed individuals'
//! alleles (POI first, then assumed contributors) and on previously priced
//! unknowns within the same genotype set.
//!
//! The per-draw probability of allele `a` after seeing `j` copies of `a`
//! among `m` conditioning alleles is
//!
//! ```text
//! ((j+1) theta + (1-theta) p_a) / (1 + (m+1) theta)
//! ```
//!
//! which reduces exactly to `p_a` at theta = 0. Heterozygotes carry a factor
//! of 2.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::frequencies::{allele_frequency, AlleleFrequencyTable, MIN_ALLELE_COUNT};
use crate::genotype::{Genotype, LocusWeights};
use crate::mcmc::DeconvolutionResult;
use crate::profile::{EvidenceProfile, ReferenceProfile};
use crate::seed::Rng;
use crate::version::VersionProfile;

/// Log10 value reported when the likelihood ratio is zero.
pub const LOG10_LR_ZERO_SENTINEL: f64 = -30.0;

/// Per-locus allele frequencies for one population, with the dropout
/// pseudo-allele priced as the complement of the observed alleles.
#[derive(Debug, Clone)]
pub struct LocusFreqView {
    freqs: BTreeMap<Allele, f64>,
    q_freq: f64,
    unseen: f64,
}

impl LocusFreqView {
    pub fn frequency(&self, allele: Allele) -> f64 {
        match allele {
            Allele::Q => self.q_freq,
            a => self.freqs.get(&a).copied().unwrap_or(self.unseen),
        }
    }

    pub fn from_table(
        table: &AlleleFrequencyTable,
        population: &str,
        locus: &str,
        observed: &[Allele],
    ) -> Result<Self> {
        let pop = table
            .population(population)
            .ok_or_else(|| Error::Lookup(format!("unknown population {population}")))?;
        let counts = table
            .locus_counts(population, locus)
            .ok_or_else(|| Error::Lookup(format!("no counts for locus {locus} in {population}")))?;
        let floor = MIN_ALLELE_COUNT / (2.0 * pop.n);
        let mut freqs = BTreeMap::new();
        for &a in counts.keys() {
            freqs.insert(a, allele_frequency(table, population, locus, a)?);
        }
        Ok(Self::assemble(freqs, floor, observed))
    }

    /// View over explicit frequencies with a floor, used by the HPD
    /// resampler.
    pub fn from_frequencies(freqs: BTreeMap<Allele, f64>, floor: f64, observed: &[Allele]) -> Self {
        Self::assemble(freqs, floor, observed)
    }

    fn assemble(mut freqs: BTreeMap<Allele, f64>, floor: f64, observed: &[Allele]) -> Self {
        for f in freqs.values_mut() {
            *f = f.max(floor).min(1.0);
        }
        let seen: f64 = observed
            .iter()
            .map(|a| freqs.get(a).copied().unwrap_or(floor))
            .sum();
        let q_freq = (1.0 - seen).clamp(floor, 1.0);
        LocusFreqView {
            freqs,
            q_freq,
            unseen: floor,
        }
    }
}

fn bn_draw(prior_copies: usize, prior_total: usize, theta: f64, p: f64) -> f64 {
    ((prior_copies as f64 + 1.0) * theta + (1.0 - theta) * p)
        / (1.0 + (prior_total as f64 + 1.0) * theta)
}

/// Balding-Nichols probability of an unknown contributor's genotype given
/// previously sampled conditioning alleles.
pub fn genotype_probability_bn(
    genotype: &Genotype,
    conditioning: &[Allele],
    view: &LocusFreqView,
    theta: f64,
) -> f64 {
    let m = conditioning.len();
    let j1 = conditioning.iter().filter(|&&x| x == genotype.a()).count();
    let p1 = bn_draw(j1, m, theta, view.frequency(genotype.a()));
    let j2 = conditioning.iter().filter(|&&x| x == genotype.b()).count()
        + usize::from(genotype.a() == genotype.b());
    let p2 = bn_draw(j2, m + 1, theta, view.frequency(genotype.b()));
    let het = if genotype.is_homozygote() { 1.0 } else { 2.0 };
    het * p1 * p2
}

/// Probability of the evidence under a hypothesis at one locus: the weighted
/// sum over genotype sets of the BN price of every unknown position, with the
/// fixed positions required to support their reference genotypes.
#[allow(clippy::too_many_arguments)]
fn locus_pr(
    weights: &LocusWeights,
    fixed: &[(usize, &Genotype)],
    base_conditioning: &[Allele],
    noc: usize,
    view: &LocusFreqView,
    theta: f64,
    sentinel_matching: bool,
) -> f64 {
    let mut pr = 0.0;
    'entry: for (set, w) in &weights.entries {
        for &(pos, g) in fixed {
            if !set.genotypes[pos].supports(g, sentinel_matching) {
                continue 'entry;
            }
        }
        let mut cond: Vec<Allele> = base_conditioning.to_vec();
        let mut prob = *w;
        for pos in 0..noc {
            if fixed.iter().any(|&(p, _)| p == pos) {
                continue;
            }
            let g = &set.genotypes[pos];
            prob *= genotype_probability_bn(g, &cond, view, theta);
            cond.push(g.a());
            cond.push(g.b());
        }
        pr += prob;
    }
    pr
}

/// Per-locus likelihood-ratio decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct LocusLr {
    pub locus: String,
    pub pr_hp: f64,
    pub pr_hd: f64,
    pub lr: f64,
    pub has_data: bool,
}

/// Pr(E|Hp), Pr(E|Hd) and their ratio at one locus.
#[allow(clippy::too_many_arguments)]
pub fn locus_lr(
    weights: &LocusWeights,
    poi: &Genotype,
    poi_position: usize,
    assumed: &[(usize, &Genotype)],
    noc: usize,
    view: &LocusFreqView,
    theta: f64,
    sentinel_matching: bool,
) -> Result<(f64, f64, f64)> {
    let mut base: Vec<Allele> = vec![poi.a(), poi.b()];
    for (_, g) in assumed {
        base.push(g.a());
        base.push(g.b());
    }
    let mut fixed_hp: Vec<(usize, &Genotype)> = vec![(poi_position, poi)];
    fixed_hp.extend_from_slice(assumed);

    let pr_hp = locus_pr(
        weights,
        &fixed_hp,
        &base,
        noc,
        view,
        theta,
        sentinel_matching,
    );
    let pr_hd = locus_pr(weights, assumed, &base, noc, view, theta, sentinel_matching);
    if !(pr_hd > 0.0) {
        return Err(Error::UndefinedLr);
    }
    Ok((pr_hp, pr_hd, pr_hp / pr_hd))
}

/// Profile totals: the product over loci (empty loci contribute 1) and the
/// sub-source value scaled by the supported-position count over the number of
/// contributors.
pub fn sub_source_lr(per_locus: &[f64], noc: usize, hp_position_count: usize) -> (f64, f64) {
    let sub_sub: f64 = per_locus.iter().product();
    let sub_source = sub_sub * hp_position_count as f64 / noc as f64;
    (sub_sub, sub_source)
}

/// Proportion-weighted combination across populations: Pr(E|Hp) and Pr(E|Hd)
/// are weighted before dividing.
pub fn stratify(prs: &[(f64, f64)], proportions: &[f64]) -> Result<f64> {
    if prs.len() != proportions.len() {
        return Err(Error::Validation(format!(
            "{} population results but {} proportions",
            prs.len(),
            proportions.len()
        )));
    }
    let hp: f64 = prs.iter().zip(proportions).map(|((p, _), w)| p * w).sum();
    let hd: f64 = prs.iter().zip(proportions).map(|((_, q), w)| q * w).sum();
    if !(hd > 0.0) {
        return Err(Error::UndefinedLr);
    }
    Ok(hp / hd)
}

/// log10 of a likelihood ratio, with exactly -30 for zero.
pub fn log10_report(lr: f64) -> Result<f64> {
    if lr < 0.0 || lr.is_nan() {
        return Err(Error::Domain(format!("negative likelihood ratio {lr}")));
    }
    if lr == 0.0 {
        Ok(LOG10_LR_ZERO_SENTINEL)
    } else {
        Ok(lr.log10())
    }
}

/// Contributor positions chosen for the typed individuals.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedPropositions {
    pub poi_position: usize,
    pub assumed_positions: Vec<usize>,
    /// Positions at which the POI is supported across the whole profile.
    pub hp_position_count: usize,
}

/// One locus of a prepared LR computation, in kit order.
#[derive(Debug, Clone)]
pub struct LrLocus {
    pub name: String,
    pub weights: Option<LocusWeights>,
    pub poi: Option<Genotype>,
    pub assumed: Vec<Genotype>,
    pub observed: Vec<Allele>,
}

/// A case prepared for LR evaluation under any frequency source.
#[derive(Debug, Clone)]
pub struct LrCase {
    pub sample_id: String,
    pub poi_id: String,
    pub noc: usize,
    pub loci: Vec<LrLocus>,
    pub resolved: ResolvedPropositions,
    pub sentinel_matching: bool,
}

fn injective_assignments(noc: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for partial in &out {
            for pos in 0..noc {
                if !partial.contains(&pos) {
                    let mut p = partial.clone();
                    p.push(pos);
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

/// Assemble an [`LrCase`]: gather per-locus weights, reference genotypes and
/// observed alleles, then resolve contributor positions for the assumed
/// contributors (best-supported assignment under Hd) and the POI (remaining
/// position with the largest profile-wide Hp support). Resolution uses the
/// first population of the table; support itself is frequency-independent.
pub fn build_lr_case(
    deconv: &DeconvolutionResult,
    evidence: &EvidenceProfile,
    poi: &ReferenceProfile,
    assumed: &[&ReferenceProfile],
    table: &AlleleFrequencyTable,
    theta: f64,
    flags: &VersionProfile,
) -> Result<LrCase> {
    let noc = deconv.noc;
    if assumed.len() >= noc {
        return Err(Error::Validation(format!(
            "{} assumed contributors leave no position for the POI (noc {noc})",
            assumed.len()
        )));
    }

    let mut loci = Vec::new();
    for name in &deconv.locus_order {
        let weights = deconv.locus(name).map(|l| l.weights.clone());
        let observed: Vec<Allele> = evidence
            .locus(name)
            .map(|l| l.alleles().collect())
            .unwrap_or_default();
        let poi_gt = poi.genotype(name).cloned();
        if weights.is_some() && poi_gt.is_none() {
            return Err(Error::Validation(format!(
                "POI {} has no reference genotype at locus {name}",
                poi.sample_id
            )));
        }
        let mut assumed_gts = Vec::new();
        for a in assumed {
            let g = a.genotype(name).cloned().ok_or_else(|| {
                Error::Validation(format!(
                    "assumed contributor {} has no reference genotype at locus {name}",
                    a.sample_id
                ))
            })?;
            assumed_gts.push(g);
        }
        loci.push(LrLocus {
            name: name.clone(),
            weights,
            poi: poi_gt,
            assumed: assumed_gts,
            observed,
        });
    }

    let population = table
        .populations
        .first()
        .ok_or_else(|| Error::Validation("frequency table has no populations".into()))?
        .name
        .clone();
    let views = standard_views(&loci, table, &population)?;

    // assumed contributors: the assignment with the largest Hd support
    let mut best_assumed: (Vec<usize>, f64) = (Vec::new(), f64::NEG_INFINITY);
    for assignment in injective_assignments(noc, assumed.len()) {
        let mut log_score = 0.0;
        for locus in &loci {
            let Some(w) = &locus.weights else { continue };
            let fixed: Vec<(usize, &Genotype)> = assignment
                .iter()
                .copied()
                .zip(locus.assumed.iter())
                .collect();
            let mut base: Vec<Allele> = Vec::new();
            if let Some(p) = &locus.poi {
                base.extend(p.alleles());
            }
            for g in &locus.assumed {
                base.extend(g.alleles());
            }
            let pr = locus_pr(
                w,
                &fixed,
                &base,
                noc,
                &views[&locus.name],
                theta,
                flags.sentinel_matching,
            );
            log_score += if pr > 0.0 { pr.ln() } else { f64::NEG_INFINITY };
        }
        if log_score > best_assumed.1 {
            best_assumed = (assignment, log_score);
        }
    }
    let assumed_positions = if assumed.is_empty() {
        Vec::new()
    } else {
        if best_assumed.1 == f64::NEG_INFINITY {
            return Err(Error::Validation(
                "no contributor-position assignment supports the assumed contributors".into(),
            ));
        }
        best_assumed.0
    };

    // POI: profile-wide Hp support per remaining position
    let mut supported = Vec::new();
    let mut best_poi: (usize, f64) = (usize::MAX, f64::NEG_INFINITY);
    for pos in 0..noc {
        if assumed_positions.contains(&pos) {
            continue;
        }
        if best_poi.0 == usize::MAX {
            best_poi.0 = pos;
        }
        let mut log_score = 0.0;
        for locus in &loci {
            let (Some(w), Some(poi_gt)) = (&locus.weights, &locus.poi) else {
                continue;
            };
            let mut fixed: Vec<(usize, &Genotype)> = vec![(pos, poi_gt)];
            fixed.extend(assumed_positions.iter().copied().zip(locus.assumed.iter()));
            let mut base: Vec<Allele> = poi_gt.alleles().to_vec();
            for g in &locus.assumed {
                base.extend(g.alleles());
            }
            let pr = locus_pr(
                w,
                &fixed,
                &base,
                noc,
                &views[&locus.name],
                theta,
                flags.sentinel_matching,
            );
            log_score += if pr > 0.0 { pr.ln() } else { f64::NEG_INFINITY };
        }
        if log_score > f64::NEG_INFINITY {
            supported.push(pos);
            if log_score > best_poi.1 {
                best_poi = (pos, log_score);
            }
        }
    }

    Ok(LrCase {
        sample_id: deconv.sample_id.clone(),
        poi_id: poi.sample_id.clone(),
        noc,
        loci,
        resolved: ResolvedPropositions {
            poi_position: best_poi.0,
            assumed_positions,
            hp_position_count: supported.len(),
        },
        sentinel_matching: flags.sentinel_matching,
    })
}

fn standard_views(
    loci: &[LrLocus],
    table: &AlleleFrequencyTable,
    population: &str,
) -> Result<BTreeMap<String, LocusFreqView>> {
    let mut views = BTreeMap::new();
    for locus in loci {
        if locus.weights.is_some() {
            views.insert(
                locus.name.clone(),
                LocusFreqView::from_table(table, population, &locus.name, &locus.observed)?,
            );
        }
    }
    Ok(views)
}

/// The per-locus table and totals for one population.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationLr {
    pub population: String,
    pub rows: Vec<LocusLr>,
    /// Product over loci of Pr(E|Hp) (data loci only).
    pub pr_hp_product: f64,
    pub pr_hd_product: f64,
    pub sub_sub_source: f64,
    pub sub_source: f64,
    pub log10_sub_source: f64,
}

/// Evaluate one population given prepared frequency views.
pub fn population_lr_with_views(
    case: &LrCase,
    views: &BTreeMap<String, LocusFreqView>,
    population: &str,
    theta: f64,
) -> Result<PopulationLr> {
    let mut rows = Vec::with_capacity(case.loci.len());
    let mut lrs = Vec::new();
    let (mut hp_prod, mut hd_prod) = (1.0, 1.0);
    for locus in &case.loci {
        let Some(w) = &locus.weights else {
            rows.push(LocusLr {
                locus: locus.name.clone(),
                pr_hp: 1.0,
                pr_hd: 1.0,
                lr: 1.0,
                has_data: false,
            });
            continue;
        };
        let poi_gt = locus.poi.as_ref().expect("validated at build");
        let fixed: Vec<(usize, &Genotype)> = case
            .resolved
            .assumed_positions
            .iter()
            .copied()
            .zip(locus.assumed.iter())
            .collect();
        let (pr_hp, pr_hd, lr) = locus_lr(
            w,
            poi_gt,
            case.resolved.poi_position,
            &fixed,
            case.noc,
            &views[&locus.name],
            theta,
            case.sentinel_matching,
        )?;
        hp_prod *= pr_hp;
        hd_prod *= pr_hd;
        lrs.push(lr);
        rows.push(LocusLr {
            locus: locus.name.clone(),
            pr_hp,
            pr_hd,
            lr,
            has_data: true,
        });
    }
    let (sub_sub, sub_source) = sub_source_lr(&lrs, case.noc, case.resolved.hp_position_count);
    Ok(PopulationLr {
        population: population.to_string(),
        rows,
        pr_hp_product: hp_prod,
        pr_hd_product: hd_prod,
        sub_sub_source: sub_sub,
        sub_source,
        log10_sub_source: log10_report(sub_source)?,
    })
}

pub fn population_lr(
    case: &LrCase,
    table: &AlleleFrequencyTable,
    population: &str,
    theta: f64,
) -> Result<PopulationLr> {
    let views = standard_views(&case.loci, table, population)?;
    population_lr_with_views(case, &views, population, theta)
}

#[derive(Debug, Clone, Serialize)]
pub struct StratifiedLr {
    pub lr: f64,
    pub log10: f64,
    pub minimum: f64,
    pub minimum_population: String,
}

/// Full report: per-population tables, proportion-weighted stratified value
/// and the across-population minimum.
#[derive(Debug, Clone, Serialize)]
pub struct LrReport {
    pub sample_id: String,
    pub poi_id: String,
    pub noc: usize,
    pub theta: f64,
    pub resolved: ResolvedPropositions,
    pub populations: Vec<PopulationLr>,
    pub stratified: StratifiedLr,
}

pub fn lr_report(case: &LrCase, table: &AlleleFrequencyTable, theta: f64) -> Result<LrReport> {
    let mut populations = Vec::new();
    for p in &table.populations {
        populations.push(population_lr(case, table, &p.name, theta)?);
    }
    let prs: Vec<(f64, f64)> = populations
        .iter()
        .map(|p| (p.pr_hp_product, p.pr_hd_product))
        .collect();
    let proportions: Vec<f64> = table.populations.iter().map(|p| p.proportion).collect();
    let scale = case.resolved.hp_position_count as f64 / case.noc as f64;
    let stratified_lr = stratify(&prs, &proportions)? * scale;
    let (minimum, minimum_population) = populations
        .iter()
        .map(|p| (p.sub_source, p.population.clone()))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("at least one population");
    Ok(LrReport {
        sample_id: case.sample_id.clone(),
        poi_id: case.poi_id.clone(),
        noc: case.noc,
        theta,
        resolved: case.resolved.clone(),
        populations,
        stratified: StratifiedLr {
            lr: stratified_lr,
            log10: log10_report(stratified_lr)?,
            minimum,
            minimum_population,
        },
    })
}

/// Table-style CSV for one population: one row per locus (blank for data-free
/// loci), probabilities in 3-significant-digit scientific notation, and the
/// two profile totals as footer rows.
pub fn lr_report_csv(report: &PopulationLr) -> String {
    use crate::format::sci;
    let mut out = String::from("Locus,PrE_Hp,PrE_Hd,LR\n");
    for row in &report.rows {
        if row.has_data {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.locus,
                sci(row.pr_hp, 3),
                sci(row.pr_hd, 3),
                sci(row.lr, 3)
            ));
        } else {
            out.push_str(&format!("{},,,\n", row.locus));
        }
    }
    out.push_str(&format!(
        "Sub-Sub-Source,,,{}\n",
        sci(report.sub_sub_source, 3)
    ));
    out.push_str(&format!("Sub-source,,,{}\n", sci(report.sub_source, 3)));
    out
}

/// Draw a random reference profile from the population's allele frequencies:
/// two independent draws per locus, proportional to the observation counts.
pub fn generate_non_donor(
    table: &AlleleFrequencyTable,
    population: &str,
    id: &str,
    rng: &mut Rng,
) -> Result<ReferenceProfile> {
    use rand::Rng as _;
    let loci = table
        .counts
        .get(population)
        .ok_or_else(|| Error::Lookup(format!("unknown population {population}")))?;
    let mut genotypes = Vec::new();
    for (locus, counts) in loci {
        let total: f64 = counts.values().sum();
        if !(total > 0.0) {
            return Err(Error::Validation(format!(
                "population {population} has no observations at locus {locus}"
            )));
        }
        let mut draw = || {
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            for (&a, &c) in counts {
                acc += c;
                if u < acc {
                    return a;
                }
            }
            *counts.keys().next_back().unwrap()
        };
        let g = Genotype::new(draw(), draw());
        genotypes.push((locus.clone(), g));
    }
    Ok(ReferenceProfile {
        sample_id: id.to_string(),
        genotypes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn view(entries: &[(&str, f64)]) -> LocusFreqView {
        let freqs: BTreeMap<Allele, f64> = entries
            .iter()
            .map(|(a, f)| (Allele::parse(a).unwrap(), *f))
            .collect();
        LocusFreqView {
            freqs,
            q_freq: 0.01,
            unseen: 0.001,
        }
    }

    #[test]
    fn bn_reduces_to_hwe_at_zero_theta() {
        let v = view(&[("10", 0.2), ("12", 0.3)]);
        let het = genotype_probability_bn(&Genotype::parse("10", "12").unwrap(), &[], &v, 0.0);
        assert_eq!(het, 2.0 * 0.2 * 0.3);
        let hom = genotype_probability_bn(&Genotype::parse("10", "10").unwrap(), &[], &v, 0.0);
        assert_eq!(hom, 0.2 * 0.2);
    }

    #[test]
    fn bn_homozygote_matches_closed_form() {
        let theta = 0.03f64;
        let p = 0.1f64;
        let v = view(&[("10", 0.1)]);
        let got = genotype_probability_bn(&Genotype::parse("10", "10").unwrap(), &[], &v, theta);
        let expected = ((theta + (1.0 - theta) * p) * (2.0 * theta + (1.0 - theta) * p))
            / ((1.0 + theta) * (1.0 + 2.0 * theta));
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!((got - 0.018262).abs() < 1e-6, "{got}");
    }

    #[test]
    fn bn_conditioning_shifts_the_draw() {
        let theta = 0.02;
        let v = view(&[("10", 0.2)]);
        let g = Genotype::parse("10", "10").unwrap();
        let unconditioned = genotype_probability_bn(&g, &[], &v, theta);
        let conditioned = genotype_probability_bn(
            &g,
            &[Allele::parse("10").unwrap(), Allele::parse("10").unwrap()],
            &v,
            theta,
        );
        assert!(conditioned > unconditioned);
    }

    #[test]
    fn log10_sentinel_and_values() {
        assert_eq!(log10_report(0.0).unwrap(), -30.0);
        assert_eq!(log10_report(1.0).unwrap(), 0.0);
        let l = log10_report(1.38e7).unwrap();
        assert!((l - 7.14).abs() < 0.005, "{l}");
        assert!(log10_report(-0.5).is_err());
    }

    #[test]
    fn stratify_examples() {
        // degenerate single population
        assert_eq!(stratify(&[(0.02, 0.01)], &[1.0]).unwrap(), 2.0);
        // equal LRs stay put
        let v = stratify(&[(0.04, 0.02), (0.02, 0.01)], &[0.5, 0.5]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // weighted numerators and denominators
        let v = stratify(&[(0.02, 0.01), (0.03, 0.01)], &[0.5, 0.5]).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        // proportion mismatch
        assert!(stratify(&[(0.02, 0.01)], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn sub_source_scales_by_position_count() {
        let (sub_sub, sub_source) = sub_source_lr(&[2.0, 3.0, 1.0], 2, 1);
        assert_eq!(sub_sub, 6.0);
        assert_eq!(sub_source, 3.0);
        let (s1, s2) = sub_source_lr(&[1.0, 1.0], 1, 1);
        assert_eq!((s1, s2), (1.0, 1.0));
        // zero supported positions zero the profile LR
        assert_eq!(sub_source_lr(&[5.0], 2, 0).1, 0.0);
    }

    #[test]
    fn locus_lr_zero_when_no_set_supports_poi() {
        let weights = crate::genotype::normalize_weights(vec![(
            GenotypeSetFixture::make(&[("8", "9.3"), ("7", "9")]),
            1.0,
        )])
        .unwrap();
        let v = view(&[("7", 0.1), ("8", 0.2), ("9", 0.15), ("9.3", 0.25)]);
        let poi = Genotype::parse("9", "9.3").unwrap();
        let (pr_hp, pr_hd, lr) = locus_lr(&weights, &poi, 1, &[], 2, &v, 0.0, true).unwrap();
        assert_eq!(pr_hp, 0.0);
        assert!(pr_hd > 0.0);
        assert_eq!(lr, 0.0);
    }

    #[test]
    fn locus_lr_invariant_under_weight_scaling() {
        let s1 = GenotypeSetFixture::make(&[("10", "12"), ("10", "10")]);
        let s2 = GenotypeSetFixture::make(&[("10", "12"), ("12", "12")]);
        let v = view(&[("10", 0.2), ("12", 0.3)]);
        let poi = Genotype::parse("10", "12").unwrap();
        let w1 =
            crate::genotype::normalize_weights(vec![(s1.clone(), 3.0), (s2.clone(), 1.0)]).unwrap();
        let w2 = crate::genotype::normalize_weights(vec![(s1, 300.0), (s2, 100.0)]).unwrap();
        let a = locus_lr(&w1, &poi, 0, &[], 2, &v, 0.01, true).unwrap();
        let b = locus_lr(&w2, &poi, 0, &[], 2, &v, 0.01, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn homozygote_match_lr_declines_with_theta_on_realistic_grid() {
        // single-source profile, weights 1 on the POI's homozygote genotype
        for &p in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.45] {
            let v = view(&[("10", p)]);
            let g = Genotype::parse("10", "10").unwrap();
            let weights = crate::genotype::normalize_weights(vec![(
                crate::genotype::GenotypeSet::new(vec![g], vec![]),
                1.0,
            )])
            .unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=25 {
                let theta = 0.5 * k as f64 / 25.0;
                let (_, _, lr) = locus_lr(&weights, &g, 0, &[], 1, &v, theta, true).unwrap();
                assert!(
                    lr <= prev + 1e-12,
                    "p {p} theta {theta}: LR rose from {prev} to {lr}"
                );
                prev = lr;
            }
        }
    }

    struct GenotypeSetFixture;

    impl GenotypeSetFixture {
        fn make(genotypes: &[(&str, &str)]) -> crate::genotype::GenotypeSet {
            crate::genotype::GenotypeSet::new(
                genotypes
                    .iter()
                    .map(|(a, b)| Genotype::parse(a, b).unwrap())
                    .collect(),
                vec![],
            )
        }
    }
}
