//! Property-based invariants.

mod common;

use common::*;
use pgmix::allele::Allele;
use pgmix::genotype::{enumerate_genotype_sets, normalize_weights, GenotypeSet};
use pgmix::harness::classify_band;
use pgmix::heights::MassParameters;
use pgmix::likelihood::locus_log_likelihood;
use pgmix::profile::{apply_analytical_threshold, observed_stutter_ratio, EvidenceProfile, Peak};
use pgmix::version::VersionProfile;
use proptest::prelude::*;

fn arb_allele() -> impl Strategy<Value = Allele> {
    (4u32..40, 0u32..4).prop_map(|(units, frac)| Allele::Repeat(units * 10 + frac))
}

fn arb_peaks(max: usize) -> impl Strategy<Value = Vec<(Allele, f64)>> {
    proptest::collection::btree_set(arb_allele(), 1..=max).prop_flat_map(|alleles| {
        let n = alleles.len();
        proptest::collection::vec(40f64..2000.0, n).prop_map(move |heights| {
            alleles
                .iter()
                .copied()
                .zip(heights.iter().copied())
                .collect()
        })
    })
}

fn profile_from(peaks: &[(Allele, f64)]) -> pgmix::profile::LocusProfile {
    let peaks: Vec<Peak> = peaks
        .iter()
        .map(|(a, h)| Peak {
            allele: *a,
            height: *h,
            mwt: 60.0 + a.tenths().unwrap() as f64 / 10.0 * 4.0,
        })
        .collect();
    pgmix::profile::LocusProfile::new("L", peaks).unwrap()
}

proptest! {
    #[test]
    fn allele_designations_round_trip(a in arb_allele()) {
        let text = a.to_string();
        prop_assert_eq!(Allele::parse(&text).unwrap(), a);
    }

    #[test]
    fn threshold_filtering_is_idempotent(peaks in arb_peaks(6), at in 0f64..500.0) {
        let profile = EvidenceProfile {
            sample_id: "p".into(),
            loci: vec![profile_from(&peaks)],
            analytical_threshold: 0.0,
        };
        let once = apply_analytical_threshold(&profile, at);
        let twice = apply_analytical_threshold(&once, at);
        prop_assert_eq!(&once, &twice);
        for p in &once.loci[0].peaks {
            prop_assert!(p.height >= at);
        }
    }

    #[test]
    fn stutter_ratio_is_scale_invariant(parent in 50f64..5000.0, child in 1f64..500.0, k in 0.01f64..100.0) {
        let mk = |h: f64, allele: &str, mwt: f64| Peak {
            allele: Allele::parse(allele).unwrap(),
            height: h,
            mwt,
        };
        let base = observed_stutter_ratio(&mk(parent, "10", 104.0), &mk(child, "9", 100.0)).unwrap();
        let scaled =
            observed_stutter_ratio(&mk(parent * k, "10", 104.0), &mk(child * k, "9", 100.0)).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(scaled));
    }

    #[test]
    fn normalized_weights_sum_to_one(counts in proptest::collection::vec(0.0f64..1e6, 1..20)) {
        prop_assume!(counts.iter().any(|&c| c > 0.0));
        let raw: Vec<(GenotypeSet, f64)> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let a = Allele::Repeat(40 + 10 * i as u32);
                (GenotypeSet::new(vec![pgmix::Genotype::new(a, a)], vec![]), c)
            })
            .collect();
        let w = normalize_weights(raw).unwrap();
        prop_assert!((w.weight_sum() - 1.0).abs() <= 1e-9);
        for pair in w.entries.windows(2) {
            prop_assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn band_classification_is_symmetric(delta in -40f64..40.0, tol in 0.0f64..0.5) {
        prop_assert_eq!(classify_band(delta, tol), classify_band(-delta, tol));
    }

    #[test]
    fn enumeration_matches_brute_force_on_random_cases(
        peaks in arb_peaks(4),
        noc in 1usize..=2,
        allow_dropout in any::<bool>(),
        max_dropins in 0u32..=2,
        preference in any::<bool>(),
        forward in any::<bool>(),
        stuttery in any::<bool>(),
    ) {
        let profile = profile_from(&peaks);
        let kit = if stuttery {
            kit_locus("L", (0.004, 0.001), 0.006, Some(0.15), Some(0.08))
        } else {
            stutterless_locus("L")
        };
        let mut flags = VersionProfile::resolve("v2.9-like").unwrap();
        flags.allow_dropout = allow_dropout;
        flags.allow_double_dropout = false;
        flags.max_dropins = max_dropins;
        flags.stutter_dropin_preference = preference;
        flags.forward_stutter = forward;
        flags.generalised_stutter = false;

        let brute = brute_force_sets(&profile, &kit, noc, &flags);
        match enumerate_genotype_sets(&profile, &kit, noc, &flags) {
            Ok(sets) => {
                prop_assert_eq!(&sets, &brute);
                let again = enumerate_genotype_sets(&profile, &kit, noc, &flags).unwrap();
                prop_assert_eq!(sets, again);
            }
            Err(_) => prop_assert!(brute.is_empty()),
        }
    }

    #[test]
    fn hwe_reduction_is_exact_for_any_frequency(p in 1e-6f64..1.0, q in 1e-6f64..1.0) {
        let view = pgmix::lr::LocusFreqView::from_frequencies(
            [(Allele::Repeat(100), p), (Allele::Repeat(120), q)].into_iter().collect(),
            1e-9,
            &[],
        );
        let het = pgmix::genotype_probability_bn(
            &pgmix::Genotype::parse("10", "12").unwrap(),
            &[],
            &view,
            0.0,
        );
        prop_assert_eq!(het, 2.0 * p.min(1.0) * q.min(1.0));
    }

    #[test]
    fn relabeling_contributors_leaves_the_likelihood_unchanged(
        peaks in arb_peaks(4),
        t1 in 100f64..2000.0,
        t2 in 100f64..2000.0,
        g1 in 0usize..6,
        g2 in 0usize..6,
    ) {
        let profile = profile_from(&peaks);
        let kit = kit_locus("L", (0.004, 0.001), 0.006, None, None);
        let mut flags = VersionProfile::resolve("v2.9-like").unwrap();
        flags.max_dropins = 2;
        let Ok(sets) = enumerate_genotype_sets(&profile, &kit, 2, &flags) else {
            return Ok(());
        };
        let set = &sets[(g1 * 31 + g2) % sets.len()];
        let swapped = set.swapped(0, 1);
        let mass = |ta, tb| MassParameters {
            templates: vec![ta, tb],
            degradations: vec![0.001, 0.002],
            amp_efficiency: vec![1.0],
            c2_allele: 25.0,
            c2_stutter: 15.0,
            drop_in_rate: 0.02,
            drop_in_lambda: 0.01,
        };
        let swapped_mass = MassParameters {
            templates: vec![t2, t1],
            degradations: vec![0.002, 0.001],
            ..mass(t1, t2)
        };
        let a = locus_log_likelihood(&profile, set, &mass(t1, t2), 0, &kit, 40.0, &flags).unwrap();
        let b = locus_log_likelihood(&profile, &swapped, &swapped_mass, 0, &kit, 40.0, &flags).unwrap();
        prop_assert!((a - b).abs() <= 1e-9_f64.max(1e-12 * a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn frequency_sums_are_bounded(counts in proptest::collection::vec(0.0f64..60.0, 1..12)) {
        use pgmix::frequencies::{AlleleFrequencyTable, Population, MIN_ALLELE_COUNT};
        let n = 200.0;
        let total: f64 = counts.iter().sum();
        prop_assume!(total <= 2.0 * n);
        let alleles: std::collections::BTreeMap<Allele, f64> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (Allele::Repeat(40 + 10 * i as u32), c))
            .collect();
        let mut table = AlleleFrequencyTable {
            populations: vec![Population { name: "P".into(), proportion: 1.0, n }],
            counts: Default::default(),
        };
        table
            .counts
            .entry("P".into())
            .or_default()
            .insert("L".into(), alleles.clone());

        let sum: f64 = alleles
            .keys()
            .map(|&a| pgmix::allele_frequency(&table, "P", "L", a).unwrap())
            .sum();
        let floored = alleles.values().filter(|&&c| c < MIN_ALLELE_COUNT).count() as f64;
        let excess = floored * MIN_ALLELE_COUNT / (2.0 * n);
        prop_assert!(sum <= total / (2.0 * n) + excess + 1e-12);
        if floored == 0.0 {
            prop_assert!((sum - total / (2.0 * n)).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn report_chain_never_emits_nan(
        lrs in proptest::collection::vec(0.0f64..1e12, 1..25),
        noc in 1usize..=4,
        count in 0usize..=4,
    ) {
        let count = count.min(noc);
        let (sub_sub, sub_source) = pgmix::sub_source_lr(&lrs, noc, count);
        prop_assert!(!sub_sub.is_nan() && !sub_source.is_nan());
        let log10 = pgmix::log10_report(sub_source).unwrap();
        prop_assert!(!log10.is_nan());
        if sub_source == 0.0 {
            prop_assert_eq!(log10, -30.0);
        }
    }
}
