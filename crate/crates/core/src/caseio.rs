//! Case file ingestion and canonical serialisation.
//!
//! Formats:
//!
//! * Evidence CSV, header `Sample,Locus,Allele,Height,Size` (Size is the
//!   molecular weight in bp, two decimals). A row with an empty allele field
//!   registers the locus with no peaks.
//! * Reference CSV, header `SampleID,Locus,Allele1,Allele2`.
//! * Kit JSON: ordered locus array with stutter calibration.
//! * Frequency CSV, header `Population,Locus,Allele,Count,N`, preceded by a
//!   proportions stanza of `#population,<name>,<proportion>` lines.
//! * Case / manifest JSON tying the pieces together.
//!
//! Writers emit the canonical form: loading a canonical file and saving it
//! again reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allele::Allele;
use crate::error::{Error, Result};
use crate::frequencies::{AlleleFrequencyTable, Population};
use crate::genotype::Genotype;
use crate::kit::KitDefinition;
use crate::profile::{
    apply_analytical_threshold, EvidenceProfile, LocusProfile, Peak, ReferenceProfile,
};

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &str, contents: &str) -> Result<()> {
    if let Some(dir) = Path::new(path).parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- evidence

pub fn load_evidence_csv(path: &str) -> Result<EvidenceProfile> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    if header.1.trim() != "Sample,Locus,Allele,Height,Size" {
        return Err(Error::parse(
            path,
            1,
            "expected header 'Sample,Locus,Allele,Height,Size'",
        ));
    }

    let mut sample_id: Option<String> = None;
    let mut loci: Vec<(String, Vec<Peak>)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let sample = fields[0].trim();
        match &sample_id {
            None => sample_id = Some(sample.to_string()),
            Some(s) if s != sample => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("evidence file mixes samples {s} and {sample}"),
                ))
            }
            _ => {}
        }
        let locus = fields[1].trim().to_string();
        if locus.is_empty() {
            return Err(Error::parse(path, lineno, "empty locus name"));
        }
        let entry = match loci.iter_mut().find(|(l, _)| *l == locus) {
            Some(e) => e,
            None => {
                loci.push((locus.clone(), Vec::new()));
                loci.last_mut().unwrap()
            }
        };
        if fields[2].trim().is_empty() {
            // blank row: locus retained with no peaks
            continue;
        }
        let allele =
            Allele::parse(fields[2]).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let height: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad height '{}'", fields[3])))?;
        let mwt: f64 = fields[4]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad size '{}'", fields[4])))?;
        entry.1.push(Peak {
            allele,
            height,
            mwt,
        });
    }

    let sample_id = sample_id.ok_or_else(|| Error::parse(path, 1, "no data rows"))?;
    let loci = loci
        .into_iter()
        .map(|(name, peaks)| LocusProfile::new(name, peaks))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvidenceProfile {
        sample_id,
        loci,
        analytical_threshold: 0.0,
    })
}

pub fn evidence_csv(profile: &EvidenceProfile) -> String {
    let mut out = String::from("Sample,Locus,Allele,Height,Size\n");
    for locus in &profile.loci {
        if locus.peaks.is_empty() {
            out.push_str(&format!("{},{},,,\n", profile.sample_id, locus.locus));
            continue;
        }
        for p in &locus.peaks {
            out.push_str(&format!(
                "{},{},{},{},{:.2}\n",
                profile.sample_id, locus.locus, p.allele, p.height, p.mwt
            ));
        }
    }
    out
}

// --------------------------------------------------------------- references

pub fn load_references_csv(path: &str) -> Result<Vec<ReferenceProfile>> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    if header.1.trim() != "SampleID,Locus,Allele1,Allele2" {
        return Err(Error::parse(
            path,
            1,
            "expected header 'SampleID,Locus,Allele1,Allele2'",
        ));
    }
    let mut profiles: Vec<ReferenceProfile> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let id = fields[0].trim().to_string();
        let locus = fields[1].trim().to_string();
        let g = Genotype::parse(fields[2], fields[3])
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if g.has_sentinel() {
            return Err(Error::parse(
                path,
                lineno,
                "dropout sentinel not allowed in references",
            ));
        }
        let profile = match profiles.iter_mut().find(|p| p.sample_id == id) {
            Some(p) => p,
            None => {
                profiles.push(ReferenceProfile {
                    sample_id: id,
                    genotypes: Vec::new(),
                });
                profiles.last_mut().unwrap()
            }
        };
        if profile.genotypes.iter().any(|(l, _)| *l == locus) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate locus {locus} for sample {}", profile.sample_id),
            ));
        }
        profile.genotypes.push((locus, g));
    }
    Ok(profiles)
}

pub fn references_csv(profiles: &[ReferenceProfile]) -> String {
    let mut out = String::from("SampleID,Locus,Allele1,Allele2\n");
    for p in profiles {
        for (locus, g) in &p.genotypes {
            out.push_str(&format!("{},{},{},{}\n", p.sample_id, locus, g.a(), g.b()));
        }
    }
    out
}

// ---------------------------------------------------------------------- kit

pub fn load_kit_json(path: &str) -> Result<KitDefinition> {
    let text = read(path)?;
    let kit: KitDefinition = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_string(),
        source: e,
    })?;
    kit.validate()?;
    Ok(kit)
}

pub fn kit_json(kit: &KitDefinition) -> String {
    let mut s = serde_json::to_string_pretty(kit).expect("kit serialises");
    s.push('\n');
    s
}

// -------------------------------------------------------------- frequencies

pub fn load_frequencies_csv(path: &str) -> Result<AlleleFrequencyTable> {
    let text = read(path)?;
    let mut populations: Vec<Population> = Vec::new();
    let mut counts: BTreeMap<String, BTreeMap<String, BTreeMap<Allele, f64>>> = BTreeMap::new();
    let mut n_by_pop: BTreeMap<String, f64> = BTreeMap::new();
    let mut saw_header = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(stanza) = line.strip_prefix("#population,") {
            let fields: Vec<&str> = stanza.split(',').collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected '#population,<name>,<proportion>'",
                ));
            }
            let proportion: f64 = fields[1].trim().parse().map_err(|_| {
                Error::parse(path, lineno, format!("bad proportion '{}'", fields[1]))
            })?;
            populations.push(Population {
                name: fields[0].trim().to_string(),
                proportion,
                n: 0.0,
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "Population,Locus,Allele,Count,N" {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected header 'Population,Locus,Allele,Count,N'",
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let pop = fields[0].trim().to_string();
        if !populations.iter().any(|p| p.name == pop) {
            return Err(Error::parse(
                path,
                lineno,
                format!("population {pop} not declared in the proportions stanza"),
            ));
        }
        let locus = fields[1].trim().to_string();
        let allele =
            Allele::parse(fields[2]).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let count: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad count '{}'", fields[3])))?;
        let n: f64 = fields[4]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad N '{}'", fields[4])))?;
        match n_by_pop.get(&pop) {
            None => {
                n_by_pop.insert(pop.clone(), n);
            }
            Some(&prev) if prev != n => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("population {pop} has inconsistent N ({prev} vs {n})"),
                ))
            }
            _ => {}
        }
        counts
            .entry(pop)
            .or_default()
            .entry(locus)
            .or_default()
            .insert(allele, count);
    }

    for p in populations.iter_mut() {
        p.n = *n_by_pop
            .get(&p.name)
            .ok_or_else(|| Error::Validation(format!("population {} has no count rows", p.name)))?;
    }
    let table = AlleleFrequencyTable {
        populations,
        counts,
    };
    table.validate()?;
    Ok(table)
}

pub fn frequencies_csv(table: &AlleleFrequencyTable) -> String {
    let mut out = String::new();
    for p in &table.populations {
        out.push_str(&format!("#population,{},{}\n", p.name, p.proportion));
    }
    out.push_str("Population,Locus,Allele,Count,N\n");
    for p in &table.populations {
        if let Some(loci) = table.counts.get(&p.name) {
            for (locus, alleles) in loci {
                for (allele, count) in alleles {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        p.name, locus, allele, count, p.n
                    ));
                }
            }
        }
    }
    out
}

// ------------------------------------------------------------ case bundles

/// One runnable case: paths are resolved relative to the JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseFile {
    pub id: String,
    pub evidence: String,
    pub references: String,
    pub kit: String,
    pub frequencies: String,
    pub analytical_threshold: f64,
    pub noc: usize,
    pub poi: String,
    #[serde(default)]
    pub assumed: Vec<String>,
    #[serde(default)]
    pub populations: Vec<String>,
    pub seed: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    0.0
}

/// Batch manifest: shared inputs plus per-case entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kit: String,
    pub references: String,
    pub frequencies: String,
    pub analytical_threshold: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub cases: Vec<ManifestCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestCase {
    pub id: String,
    pub evidence: String,
    pub noc: usize,
    pub poi: String,
    #[serde(default)]
    pub assumed: Vec<String>,
    #[serde(default)]
    pub populations: Vec<String>,
    pub seed: u64,
}

fn resolve_path(base: &str, relative: &str) -> String {
    let rel = Path::new(relative);
    if rel.is_absolute() {
        return relative.to_string();
    }
    let mut buf = PathBuf::from(base);
    buf.pop();
    buf.push(rel);
    buf.to_string_lossy().into_owned()
}

pub fn load_case_file(path: &str) -> Result<CaseFile> {
    let text = read(path)?;
    let mut case: CaseFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_string(),
        source: e,
    })?;
    if case.noc < 1 {
        return Err(Error::Validation(format!(
            "case {}: the number of contributors must be at least 1",
            case.id
        )));
    }
    case.evidence = resolve_path(path, &case.evidence);
    case.references = resolve_path(path, &case.references);
    case.kit = resolve_path(path, &case.kit);
    case.frequencies = resolve_path(path, &case.frequencies);
    Ok(case)
}

pub fn load_manifest(path: &str) -> Result<Manifest> {
    let text = read(path)?;
    let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_string(),
        source: e,
    })?;
    manifest.kit = resolve_path(path, &manifest.kit);
    manifest.references = resolve_path(path, &manifest.references);
    manifest.frequencies = resolve_path(path, &manifest.frequencies);
    for case in manifest.cases.iter_mut() {
        if case.noc < 1 {
            return Err(Error::Validation(format!(
                "case {}: the number of contributors must be at least 1",
                case.id
            )));
        }
        case.evidence = resolve_path(path, &case.evidence);
    }
    Ok(manifest)
}

/// A fully validated case bundle.
#[derive(Debug)]
pub struct CaseBundle {
    pub evidence: EvidenceProfile,
    pub references: Vec<ReferenceProfile>,
    pub kit: KitDefinition,
    pub frequencies: AlleleFrequencyTable,
}

impl CaseBundle {
    pub fn reference(&self, id: &str) -> Result<&ReferenceProfile> {
        self.references
            .iter()
            .find(|r| r.sample_id == id)
            .ok_or_else(|| Error::Lookup(format!("reference profile {id} not found")))
    }
}

/// Load and cross-validate the four case inputs. The analytical threshold is
/// applied to the evidence here.
pub fn load_case(
    evidence_path: &str,
    references_path: &str,
    kit_path: &str,
    frequencies_path: &str,
    analytical_threshold: f64,
) -> Result<CaseBundle> {
    if analytical_threshold < 0.0 {
        return Err(Error::Validation(
            "analytical threshold must be >= 0".into(),
        ));
    }
    let raw_evidence = load_evidence_csv(evidence_path)?;
    let references = load_references_csv(references_path)?;
    let kit = load_kit_json(kit_path)?;
    let frequencies = load_frequencies_csv(frequencies_path)?;

    for locus in &raw_evidence.loci {
        if kit.locus(&locus.locus).is_none() {
            return Err(Error::Validation(format!(
                "evidence locus {} is not in the kit",
                locus.locus
            )));
        }
    }
    for r in &references {
        r.validate()?;
    }

    let evidence = apply_analytical_threshold(&raw_evidence, analytical_threshold);
    Ok(CaseBundle {
        evidence,
        references,
        kit,
        frequencies,
    })
}
