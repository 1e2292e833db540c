//! Allele frequency tables with stratified populations.
//!
//! Frequencies are stored as observation counts over a database of N
//! individuals and derived as `count / 2N`, with a minimum-allele-count floor
//! of 5 observations so that rare and unseen alleles never get probability
//! zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};

/// Minimum allele count used when flooring rare/unseen allele frequencies.
pub const MIN_ALLELE_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub name: String,
    /// Mixing proportion across the stratified populations; they sum to 1.
    pub proportion: f64,
    /// Database size in individuals (2N alleles).
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlleleFrequencyTable {
    pub populations: Vec<Population>,
    /// population -> locus -> allele -> observation count.
    pub counts: BTreeMap<String, BTreeMap<String, BTreeMap<Allele, f64>>>,
}

impl AlleleFrequencyTable {
    pub fn population(&self, name: &str) -> Option<&Population> {
        self.populations.iter().find(|p| p.name == name)
    }

    pub fn locus_counts(&self, population: &str, locus: &str) -> Option<&BTreeMap<Allele, f64>> {
        self.counts.get(population).and_then(|m| m.get(locus))
    }

    pub fn validate(&self) -> Result<()> {
        if self.populations.is_empty() {
            return Err(Error::Validation(
                "frequency table declares no populations".into(),
            ));
        }
        let total: f64 = self.populations.iter().map(|p| p.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "population proportions sum to {total}, expected 1"
            )));
        }
        for p in &self.populations {
            if !(p.n > 0.0) {
                return Err(Error::Validation(format!(
                    "population {} has non-positive database size",
                    p.name
                )));
            }
            if p.proportion < 0.0 {
                return Err(Error::Validation(format!(
                    "population {} has negative proportion",
                    p.name
                )));
            }
        }
        for (pop, loci) in &self.counts {
            if self.population(pop).is_none() {
                return Err(Error::Validation(format!(
                    "counts reference undeclared population {pop}"
                )));
            }
            let two_n = 2.0 * self.population(pop).unwrap().n;
            for (locus, alleles) in loci {
                let mut sum = 0.0;
                for (allele, &count) in alleles {
                    if count < 0.0 {
                        return Err(Error::Validation(format!(
                            "negative count for {pop}/{locus}/{allele}"
                        )));
                    }
                    sum += count;
                }
                if sum > two_n + 1e-6 {
                    return Err(Error::Validation(format!(
                        "counts at {pop}/{locus} exceed 2N ({sum} > {two_n})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Frequency of an allele in a population: `max(count, 5) / 2N`. Alleles
/// absent from the table take the floor (count 0).
pub fn allele_frequency(
    table: &AlleleFrequencyTable,
    population: &str,
    locus: &str,
    allele: Allele,
) -> Result<f64> {
    let pop = table
        .population(population)
        .ok_or_else(|| Error::Lookup(format!("unknown population {population}")))?;
    let loci = table
        .counts
        .get(population)
        .ok_or_else(|| Error::Lookup(format!("no counts for population {population}")))?;
    let alleles = loci
        .get(locus)
        .ok_or_else(|| Error::Lookup(format!("no counts for locus {locus} in {population}")))?;
    let count = alleles.get(&allele).copied().unwrap_or(0.0);
    let two_n = 2.0 * pop.n;
    Ok((count.max(MIN_ALLELE_COUNT) / two_n).min(1.0))
}
