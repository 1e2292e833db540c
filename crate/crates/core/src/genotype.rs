//! Genotype sets: the per-locus support of the deconvolution.
//!
//! A genotype set assigns one genotype to every contributor plus a list of
//! drop-in alleles. Every observed peak must be accounted for: by a
//! contributor allele, by the drop-in list, or by sitting in a stutter
//! position of a contributor allele. Which of those routes are open depends on
//! the active feature flags:
//!
//! * a peak can be designated stutter only if a contributor carries a parent
//!   with a positive expected stutter ratio and the observed ratio does not
//!   exceed the kit's per-locus maximum;
//! * with the stutter/drop-in preference flag off, a peak in a stutter
//!   position of a present parent is always scored as stutter and can never be
//!   drop-in — if the kit maximum rules stutter out too, the set is invalid;
//! * with the flag on, both explanations are enumerated and the likelihood
//!   arbitrates.
//!
//! Contributor positions are labelled (by descending template), so swapping
//! two contributors' genotypes yields a distinct set.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::kit::KitLocus;
use crate::profile::LocusProfile;
use crate::version::VersionProfile;

/// An unordered pair of alleles, stored low-to-high with the sentinel first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genotype {
    a: Allele,
    b: Allele,
}

impl Genotype {
    pub fn new(x: Allele, y: Allele) -> Self {
        if x <= y {
            Genotype { a: x, b: y }
        } else {
            Genotype { a: y, b: x }
        }
    }

    pub fn parse(a: &str, b: &str) -> Result<Self> {
        Ok(Genotype::new(Allele::parse(a)?, Allele::parse(b)?))
    }

    pub fn a(&self) -> Allele {
        self.a
    }

    pub fn b(&self) -> Allele {
        self.b
    }

    pub fn alleles(&self) -> [Allele; 2] {
        [self.a, self.b]
    }

    pub fn contains(&self, allele: Allele) -> bool {
        self.a == allele || self.b == allele
    }

    pub fn is_homozygote(&self) -> bool {
        self.a == self.b
    }

    pub fn has_sentinel(&self) -> bool {
        self.a.is_q() || self.b.is_q()
    }

    /// Copies of `allele` carried (dose).
    pub fn dose(&self, allele: Allele) -> u8 {
        (self.a == allele) as u8 + (self.b == allele) as u8
    }

    /// Whether this genotype supports a reference genotype. An exact match
    /// always does; with `sentinel_matching`, a sentinel stands for any single
    /// allele, so `[-1,21]` supports `[21,22]`.
    pub fn supports(&self, reference: &Genotype, sentinel_matching: bool) -> bool {
        if self == reference {
            return true;
        }
        if !sentinel_matching {
            return false;
        }
        match (self.a.is_q(), self.b.is_q()) {
            (true, false) => reference.contains(self.b),
            (false, true) => reference.contains(self.a),
            (true, true) => true,
            (false, false) => false,
        }
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// One genotype per contributor plus drop-in allele labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenotypeSet {
    pub genotypes: Vec<Genotype>,
    pub drop_in: Vec<Allele>,
}

impl GenotypeSet {
    pub fn new(genotypes: Vec<Genotype>, mut drop_in: Vec<Allele>) -> Self {
        drop_in.sort();
        GenotypeSet { genotypes, drop_in }
    }

    /// Alleles carried by at least one contributor (sentinel excluded).
    pub fn covered(&self) -> BTreeSet<Allele> {
        self.genotypes
            .iter()
            .flat_map(|g| g.alleles())
            .filter(|a| !a.is_q())
            .collect()
    }

    /// Total copies of `allele` across contributor `n`'s genotype.
    pub fn dose(&self, contributor: usize, allele: Allele) -> u8 {
        self.genotypes[contributor].dose(allele)
    }

    /// The set with two contributor positions exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> GenotypeSet {
        let mut genotypes = self.genotypes.clone();
        genotypes.swap(i, j);
        GenotypeSet {
            genotypes,
            drop_in: self.drop_in.clone(),
        }
    }

    pub fn drop_in_display(&self) -> String {
        self.drop_in
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for GenotypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genotypes.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{g}")?;
        }
        if !self.drop_in.is_empty() {
            write!(f, " +{{{}}}", self.drop_in_display())?;
        }
        Ok(())
    }
}

/// Posterior weights over the genotype sets of one locus, sorted by
/// descending weight (ties broken by canonical set order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusWeights {
    pub entries: Vec<(GenotypeSet, f64)>,
}

impl LocusWeights {
    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

/// The stutter explanations a peak could have, given covered alleles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StutterStatus {
    /// No present parent expects stutter on this position.
    NotAPosition,
    /// A parent expects stutter here but the observed ratio exceeds the kit
    /// maximum for every such parent.
    PositionOverMax,
    /// At least one parent can explain the peak as stutter.
    Explainable,
}

fn stutter_status(
    peak: Allele,
    observed_height: f64,
    covered: &BTreeSet<Allele>,
    profile: &LocusProfile,
    kit: &KitLocus,
    flags: &VersionProfile,
) -> StutterStatus {
    let mut any_position = false;
    let mut explainable = false;

    let mut consider = |parent: Allele, expected_ratio: Option<f64>, max_ratio: Option<f64>| {
        if !covered.contains(&parent) {
            return;
        }
        let Some(r) = expected_ratio else { return };
        if r <= 0.0 {
            return;
        }
        any_position = true;
        let parent_height = match profile.peak(parent) {
            Some(p) => p.height,
            None => return,
        };
        let observed_ratio = observed_height / parent_height;
        if max_ratio.is_none_or(|m| observed_ratio <= m) {
            explainable = true;
        }
    };

    // back stutter: parent one repeat above the peak
    if let Some(parent) = peak.forward_position() {
        consider(
            parent,
            kit.back_stutter_ratio(parent),
            kit.max_back_stutter_ratio,
        );
    }
    // forward stutter: parent one repeat below the peak
    if flags.forward_stutter && kit.forward_stutter_ratio > 0.0 {
        if let Some(parent) = peak.back_position() {
            consider(
                parent,
                Some(kit.forward_stutter_ratio),
                kit.max_forward_stutter_ratio,
            );
        }
    }
    // generalised offsets
    if flags.generalised_stutter {
        for entry in &kit.generalised {
            for &parent in covered.iter() {
                let lands_here = match entry.kind {
                    crate::kit::GeneralisedKind::DoubleBack => parent.double_back_position(),
                    crate::kit::GeneralisedKind::MinusTwoBp => {
                        parent.minus_two_bp(kit.repeat_bp.round() as u32)
                    }
                } == Some(peak);
                if lands_here {
                    consider(
                        parent,
                        kit.generalised_ratio(entry, parent),
                        entry.max_ratio,
                    );
                }
            }
        }
    }

    if explainable {
        StutterStatus::Explainable
    } else if any_position {
        StutterStatus::PositionOverMax
    } else {
        StutterStatus::NotAPosition
    }
}

/// Enumerate every genotype set consistent with the locus's observed peaks
/// under the active flags, in canonical (lexicographic) order.
pub fn enumerate_genotype_sets(
    locus: &LocusProfile,
    kit: &KitLocus,
    noc: usize,
    flags: &VersionProfile,
) -> Result<Vec<GenotypeSet>> {
    assert!(noc >= 1, "noc must be at least 1");
    let alleles: Vec<Allele> = locus.alleles().collect();

    // Candidate genotypes for a single contributor.
    let mut pool: Vec<Genotype> = Vec::new();
    for (i, &a) in alleles.iter().enumerate() {
        for &b in &alleles[i..] {
            pool.push(Genotype::new(a, b));
        }
    }
    if flags.allow_dropout {
        for &a in &alleles {
            pool.push(Genotype::new(Allele::Q, a));
        }
        if flags.allow_double_dropout {
            pool.push(Genotype::new(Allele::Q, Allele::Q));
        }
    }
    pool.sort();

    let mut out: Vec<GenotypeSet> = Vec::new();
    let mut combo = vec![0usize; noc];
    'outer: loop {
        let genotypes: Vec<Genotype> = combo.iter().map(|&i| pool[i]).collect();
        extend_with_drop_ins(&genotypes, locus, kit, flags, &mut out);

        // next tuple
        for slot in (0..noc).rev() {
            combo[slot] += 1;
            if combo[slot] < pool.len() {
                continue 'outer;
            }
            combo[slot] = 0;
            if slot == 0 {
                break 'outer;
            }
        }
    }

    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::LocusUnexplainable(locus.locus.clone()));
    }
    Ok(out)
}

/// Work out which drop-in labellings make a contributor-genotype combination
/// valid, and push the resulting sets.
fn extend_with_drop_ins(
    genotypes: &[Genotype],
    locus: &LocusProfile,
    kit: &KitLocus,
    flags: &VersionProfile,
    out: &mut Vec<GenotypeSet>,
) {
    let set = GenotypeSet::new(genotypes.to_vec(), vec![]);
    let covered = set.covered();

    let mut forced_drop_in: Vec<Allele> = Vec::new();
    let mut optional_drop_in: Vec<Allele> = Vec::new();

    for peak in &locus.peaks {
        if covered.contains(&peak.allele) {
            continue;
        }
        match stutter_status(peak.allele, peak.height, &covered, locus, kit, flags) {
            StutterStatus::Explainable => {
                if flags.stutter_dropin_preference {
                    optional_drop_in.push(peak.allele);
                }
                // preference off: scored as stutter, never drop-in
            }
            StutterStatus::PositionOverMax => {
                if flags.stutter_dropin_preference {
                    // stutter is ruled out by the kit maximum; drop-in may step in
                    forced_drop_in.push(peak.allele);
                } else {
                    // neither stutter (over max) nor drop-in (stutter position)
                    return;
                }
            }
            StutterStatus::NotAPosition => forced_drop_in.push(peak.allele),
        }
    }

    let max = flags.max_dropins as usize;
    if forced_drop_in.len() > max {
        return;
    }
    let budget = max - forced_drop_in.len();

    // Every subset of the optional (stutter-or-drop-in) peaks within budget.
    let n_opt = optional_drop_in.len();
    for mask in 0..(1usize << n_opt) {
        if (mask.count_ones() as usize) > budget {
            continue;
        }
        let mut drop_in = forced_drop_in.clone();
        for (i, &a) in optional_drop_in.iter().enumerate() {
            if mask & (1 << i) != 0 {
                drop_in.push(a);
            }
        }
        out.push(GenotypeSet::new(genotypes.to_vec(), drop_in));
    }
}

/// Turn visit counts into normalised weights, sorted descending.
pub fn normalize_weights(raw_counts: Vec<(GenotypeSet, f64)>) -> Result<LocusWeights> {
    let mut merged: Vec<(GenotypeSet, f64)> = Vec::new();
    for (set, count) in raw_counts {
        if count < 0.0 {
            return Err(Error::Domain("negative visit count".into()));
        }
        match merged.iter_mut().find(|(s, _)| *s == set) {
            Some((_, c)) => *c += count,
            None => merged.push((set, count)),
        }
    }
    let total: f64 = merged.iter().map(|(_, c)| c).sum();
    if !(total > 0.0) {
        return Err(Error::Domain("all visit counts are zero".into()));
    }
    let mut entries: Vec<(GenotypeSet, f64)> =
        merged.into_iter().map(|(s, c)| (s, c / total)).collect();
    entries.sort_by(|(sa, wa), (sb, wb)| wb.partial_cmp(wa).unwrap().then_with(|| sa.cmp(sb)));
    Ok(LocusWeights { entries })
}

/// Positions at which a reference genotype may sit when checking support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionPolicy {
    Any,
    Only(usize),
}

/// The entries whose genotype at an allowed contributor position supports the
/// given reference genotype.
pub fn sets_supporting<'a>(
    weights: &'a LocusWeights,
    reference: &Genotype,
    policy: PositionPolicy,
    sentinel_matching: bool,
) -> Vec<&'a (GenotypeSet, f64)> {
    weights
        .entries
        .iter()
        .filter(|(set, _)| match policy {
            PositionPolicy::Any => set
                .genotypes
                .iter()
                .any(|g| g.supports(reference, sentinel_matching)),
            PositionPolicy::Only(i) => set
                .genotypes
                .get(i)
                .is_some_and(|g| g.supports(reference, sentinel_matching)),
        })
        .collect()
}

/// Genotype-pdf dump: one row per entry, genotypes rendered `[a,b]`, drop-ins
/// comma-joined.
pub fn genotype_pdf_tsv(weights: &LocusWeights, noc: usize) -> String {
    use crate::format::sci;
    let mut out = String::new();
    for i in 0..noc {
        out.push_str(&format!("GenotypeC{}\t", i + 1));
    }
    out.push_str("DropIn\tWeight\n");
    for (set, w) in &weights.entries {
        for g in &set.genotypes {
            out.push_str(&format!("{g}\t"));
        }
        out.push_str(&set.drop_in_display());
        if *w >= 1e-3 {
            out.push_str(&format!("\t{:.9}\n", w));
        } else {
            out.push_str(&format!("\t{}\n", sci(*w, 3)));
        }
    }
    out
}
