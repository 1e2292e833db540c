//! Shared fixtures for the integration and acceptance suites.

#![allow(dead_code)]

use std::collections::BTreeMap;

use pgmix::allele::Allele;
use pgmix::frequencies::{AlleleFrequencyTable, Population};
use pgmix::genotype::Genotype;
use pgmix::kit::{KitLocus, StutterRegression};
use pgmix::profile::{EvidenceProfile, LocusProfile, Peak, ReferenceProfile};
use pgmix::version::VersionProfile;

pub fn allele(s: &str) -> Allele {
    Allele::parse(s).unwrap()
}

pub fn genotype(a: &str, b: &str) -> Genotype {
    Genotype::parse(a, b).unwrap()
}

/// A kit locus with a dense LUS table (LUS = repeat count for whole repeats),
/// published-style back-stutter regression and optional maxima.
pub fn kit_locus(
    name: &str,
    back: (f64, f64),
    forward: f64,
    max_back: Option<f64>,
    max_forward: Option<f64>,
) -> KitLocus {
    let mut lus = BTreeMap::new();
    for units in 4..40u32 {
        for frac in [0u32, 1, 2, 3] {
            lus.insert(Allele::Repeat(units * 10 + frac), units as f64);
        }
    }
    KitLocus {
        locus: name.into(),
        back_stutter: StutterRegression {
            intercept: back.0,
            slope_lus: back.1,
        },
        forward_stutter_ratio: forward,
        lus,
        generalised: vec![],
        max_back_stutter_ratio: max_back,
        max_forward_stutter_ratio: max_forward,
        repeat_bp: 4.0,
    }
}

/// A kit locus with no stutter anywhere: no LUS entries and zero forward
/// ratio, so no peak can ever be a stutter position.
pub fn stutterless_locus(name: &str) -> KitLocus {
    KitLocus {
        locus: name.into(),
        back_stutter: StutterRegression {
            intercept: 0.0,
            slope_lus: 0.0,
        },
        forward_stutter_ratio: 0.0,
        lus: BTreeMap::new(),
        generalised: vec![],
        max_back_stutter_ratio: None,
        max_forward_stutter_ratio: None,
        repeat_bp: 4.0,
    }
}

/// Peaks from (allele, height) pairs; sizes follow 4 bp per repeat from a
/// locus-specific offset so sizes are unique and ordered.
pub fn locus_profile(name: &str, peaks: &[(&str, f64)]) -> LocusProfile {
    let peaks = peaks
        .iter()
        .map(|(a, h)| {
            let al = allele(a);
            let tenths = al.tenths().unwrap() as f64;
            Peak {
                allele: al,
                height: *h,
                mwt: 60.0 + tenths / 10.0 * 4.0,
            }
        })
        .collect();
    LocusProfile::new(name, peaks).unwrap()
}

pub fn evidence(sample: &str, at: f64, loci: Vec<LocusProfile>) -> EvidenceProfile {
    EvidenceProfile {
        sample_id: sample.into(),
        loci,
        analytical_threshold: at,
    }
}

pub fn reference(id: &str, genotypes: &[(&str, &str, &str)]) -> ReferenceProfile {
    ReferenceProfile {
        sample_id: id.into(),
        genotypes: genotypes
            .iter()
            .map(|(locus, a, b)| (locus.to_string(), genotype(a, b)))
            .collect(),
    }
}

/// Single-population frequency table over the given loci; every listed locus
/// gets the same allele/count pattern unless counts are provided per locus.
pub fn frequency_table(loci: &[(&str, Vec<(&str, f64)>)], n: f64) -> AlleleFrequencyTable {
    let mut counts = BTreeMap::new();
    let mut by_locus = BTreeMap::new();
    for (locus, alleles) in loci {
        let mut m = BTreeMap::new();
        for (a, c) in alleles {
            m.insert(allele(a), *c);
        }
        by_locus.insert(locus.to_string(), m);
    }
    counts.insert("Pop".to_string(), by_locus);
    AlleleFrequencyTable {
        populations: vec![Population {
            name: "Pop".into(),
            proportion: 1.0,
            n,
        }],
        counts,
    }
}

/// A generous default allele pool for synthetic loci.
pub fn default_counts() -> Vec<(&'static str, f64)> {
    vec![
        ("8", 30.0),
        ("9", 40.0),
        ("9.3", 25.0),
        ("10", 60.0),
        ("11", 80.0),
        ("12", 90.0),
        ("13", 70.0),
        ("14", 50.0),
        ("15", 35.0),
        ("16", 20.0),
        ("17", 30.0),
        ("18", 15.0),
        ("19", 25.0),
        ("20", 10.0),
        ("21", 20.0),
        ("22", 10.0),
        ("25.2", 5.0),
    ]
}

/// Flags for sampler-vs-oracle comparisons: fixed variance constants, no
/// per-locus amplification, no symmetry restriction, and a template prior
/// narrow enough for a dense grid.
pub fn oracle_flags() -> VersionProfile {
    let mut f = VersionProfile::resolve("v2.9-like").unwrap();
    f.name = "oracle".into();
    f.varying_variances = false;
    f.locus_amp_variance = false;
    f.symmetry_restriction = false;
    f.dynamic_start_templates = true;
    f.template_prior = (0.0, 2500.0);
    f.degradation_prior = (0.0, 0.0);
    f.overrides = vec![
        "varying_variances".into(),
        "locus_amp_variance".into(),
        "symmetry_restriction".into(),
        "template_prior".into(),
        "degradation_prior".into(),
    ];
    f
}

/// Independent brute-force genotype-set generator: nested loops over all
/// genotype tuples and all drop-in subsets, filtered by the stated
/// invariants. Kept deliberately naive and separate from the engine's
/// enumeration path.
pub fn brute_force_sets(
    locus: &LocusProfile,
    kit: &pgmix::kit::KitLocus,
    noc: usize,
    flags: &VersionProfile,
) -> Vec<pgmix::genotype::GenotypeSet> {
    use pgmix::genotype::GenotypeSet;

    let observed: Vec<Allele> = locus.peaks.iter().map(|p| p.allele).collect();

    // candidate genotypes
    let mut pool: Vec<Genotype> = Vec::new();
    for i in 0..observed.len() {
        for j in i..observed.len() {
            pool.push(Genotype::new(observed[i], observed[j]));
        }
    }
    if flags.allow_dropout {
        for &a in &observed {
            pool.push(Genotype::new(Allele::Q, a));
        }
        if flags.allow_double_dropout {
            pool.push(Genotype::new(Allele::Q, Allele::Q));
        }
    }

    // which parents could make `child` a stutter product, and is the observed
    // ratio admissible for any of them
    let stutter_relations = |child: Allele, covered: &std::collections::BTreeSet<Allele>| {
        let child_peak = locus.peak(child).unwrap();
        let mut is_position = false;
        let mut admissible = false;
        let mut check = |parent: Option<Allele>, expected: Option<f64>, max: Option<f64>| {
            let (Some(parent), Some(expected)) = (parent, expected) else {
                return;
            };
            if expected <= 0.0 || !covered.contains(&parent) {
                return;
            }
            is_position = true;
            let Some(parent_peak) = locus.peak(parent) else {
                return;
            };
            let ratio = child_peak.height / parent_peak.height;
            if max.is_none_or(|m| ratio <= m) {
                admissible = true;
            }
        };
        // back stutter falls one repeat below its parent
        let back_parent = child.forward_position();
        check(
            back_parent,
            back_parent.and_then(|p| kit.back_stutter_ratio(p)),
            kit.max_back_stutter_ratio,
        );
        if flags.forward_stutter && kit.forward_stutter_ratio > 0.0 {
            check(
                child.back_position(),
                Some(kit.forward_stutter_ratio),
                kit.max_forward_stutter_ratio,
            );
        }
        if flags.generalised_stutter {
            for entry in &kit.generalised {
                for &parent in covered.iter() {
                    let lands = match entry.kind {
                        pgmix::kit::GeneralisedKind::DoubleBack => parent.double_back_position(),
                        pgmix::kit::GeneralisedKind::MinusTwoBp => {
                            parent.minus_two_bp(kit.repeat_bp.round() as u32)
                        }
                    } == Some(child);
                    if lands {
                        check(
                            Some(parent),
                            kit.generalised_ratio(entry, parent),
                            entry.max_ratio,
                        );
                    }
                }
            }
        }
        (is_position, admissible)
    };

    let mut out = Vec::new();
    let mut tuple = vec![0usize; noc];
    'tuples: loop {
        let genotypes: Vec<Genotype> = tuple.iter().map(|&i| pool[i]).collect();
        let covered: std::collections::BTreeSet<Allele> = genotypes
            .iter()
            .flat_map(|g| g.alleles())
            .filter(|a| !a.is_q())
            .collect();

        let uncovered: Vec<Allele> = observed
            .iter()
            .copied()
            .filter(|a| !covered.contains(a))
            .collect();
        for mask in 0..(1usize << uncovered.len()) {
            let drop_in: Vec<Allele> = uncovered
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &a)| a)
                .collect();
            if drop_in.len() > flags.max_dropins as usize {
                continue;
            }
            let mut valid = true;
            for &peak in &uncovered {
                let labelled_drop_in = drop_in.contains(&peak);
                let (is_position, admissible) = stutter_relations(peak, &covered);
                let peak_ok = if flags.stutter_dropin_preference {
                    if admissible {
                        true
                    } else {
                        labelled_drop_in
                    }
                } else if is_position {
                    admissible && !labelled_drop_in
                } else {
                    labelled_drop_in
                };
                if !peak_ok {
                    valid = false;
                    break;
                }
            }
            if valid {
                out.push(GenotypeSet::new(genotypes.clone(), drop_in));
            }
        }

        for slot in (0..noc).rev() {
            tuple[slot] += 1;
            if tuple[slot] < pool.len() {
                continue 'tuples;
            }
            tuple[slot] = 0;
            if slot == 0 {
                break 'tuples;
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
