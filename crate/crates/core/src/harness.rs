//! Batch regression harness: run case batteries under two flag bundles and
//! classify the log10 LR pairs against the x = y and x = y +/- 1 bands.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::caseio::{load_case, CaseBundle, CaseFile, Manifest, ManifestCase};
use crate::error::{Error, Result};
use crate::format::fixed_sig;
use crate::genotype::genotype_pdf_tsv;
use crate::kit::KitLocus;
use crate::lr::{build_lr_case, generate_non_donor, lr_report, lr_report_csv, LrReport};
use crate::mcmc::{deconvolve, DeconvolutionResult, McmcConfig};
use crate::profile::{observed_stutter_ratio, LocusProfile};
use crate::seed::{derive_seed, rng_from_seed};
use crate::version::VersionProfile;

/// Everything needed to run one case once: identity, propositions and seed.
#[derive(Debug, Clone, Serialize)]
pub struct CaseSpec {
    pub id: String,
    pub noc: usize,
    pub poi: String,
    pub assumed: Vec<String>,
    pub theta: f64,
    pub seed: u64,
}

impl CaseSpec {
    pub fn from_case_file(case: &CaseFile) -> Self {
        CaseSpec {
            id: case.id.clone(),
            noc: case.noc,
            poi: case.poi.clone(),
            assumed: case.assumed.clone(),
            theta: case.theta,
            seed: case.seed,
        }
    }

    pub fn from_manifest_case(case: &ManifestCase, theta: f64) -> Self {
        CaseSpec {
            id: case.id.clone(),
            noc: case.noc,
            poi: case.poi.clone(),
            assumed: case.assumed.clone(),
            theta,
            seed: case.seed,
        }
    }
}

/// Sampler size overrides for batch runs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunOptions {
    pub burn_in: u32,
    pub post_burn: u32,
    pub chains: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            burn_in: 10_000,
            post_burn: 50_000,
            chains: 4,
        }
    }
}

impl RunOptions {
    pub fn config(&self, flags: VersionProfile, seed: u64) -> McmcConfig {
        McmcConfig::new(flags, seed)
            .with_iterations(self.burn_in, self.post_burn)
            .with_chains(self.chains)
    }
}

/// One full pipeline pass: deconvolution then LR.
pub struct CaseRun {
    pub deconv: DeconvolutionResult,
    pub report: LrReport,
}

pub fn run_case(
    bundle: &CaseBundle,
    spec: &CaseSpec,
    flags: &VersionProfile,
    options: &RunOptions,
) -> Result<CaseRun> {
    let config = options.config(flags.clone(), spec.seed);
    let mut evidence = bundle.evidence.clone();
    evidence.sample_id = spec.id.clone();
    let deconv = deconvolve(&evidence, &bundle.kit, spec.noc, &config)?;
    let poi = bundle.reference(&spec.poi)?;
    let assumed: Vec<_> = spec
        .assumed
        .iter()
        .map(|id| bundle.reference(id))
        .collect::<Result<Vec<_>>>()?;
    let case = build_lr_case(
        &deconv,
        &evidence,
        poi,
        &assumed,
        &bundle.frequencies,
        spec.theta,
        flags,
    )?;
    let report = lr_report(&case, &bundle.frequencies, spec.theta)?;
    Ok(CaseRun { deconv, report })
}

/// Band classification of a log10 LR pair against the identity line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    OnLine,
    WithinBand,
    Divergent,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Band::OnLine => "on_line",
            Band::WithinBand => "within_band",
            Band::Divergent => "divergent",
        };
        write!(f, "{s}")
    }
}

/// `|delta| <= tolerance_eq` is on the line, `|delta| <= 1` within the band,
/// anything further divergent.
pub fn classify_band(delta: f64, tolerance_eq: f64) -> Band {
    let d = delta.abs();
    if d <= tolerance_eq {
        Band::OnLine
    } else if d <= 1.0 {
        Band::WithinBand
    } else {
        Band::Divergent
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionCaseResult {
    pub id: String,
    pub log10_a: f64,
    pub log10_b: f64,
    pub delta: f64,
    pub band: Band,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionReport {
    pub config_a: String,
    pub config_b: String,
    pub tolerance_eq: f64,
    pub results: Vec<RegressionCaseResult>,
    pub failures: Vec<(String, String)>,
    pub on_line: usize,
    pub within_band: usize,
    pub divergent: usize,
}

impl RegressionReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run every manifest case under both configs with the same per-case seed,
/// so deltas reflect model changes rather than sampling noise. Per-case
/// failures are recorded and the batch continues.
pub fn run_regression(
    manifest: &Manifest,
    profile_a: &VersionProfile,
    profile_b: &VersionProfile,
    options: &RunOptions,
    tolerance_eq: f64,
) -> Result<RegressionReport> {
    let outcomes: Vec<std::result::Result<RegressionCaseResult, (String, String)>> = manifest
        .cases
        .par_iter()
        .map(|mc| {
            let spec = CaseSpec::from_manifest_case(mc, manifest.theta);
            let run = || -> Result<RegressionCaseResult> {
                let bundle = load_case(
                    &mc.evidence,
                    &manifest.references,
                    &manifest.kit,
                    &manifest.frequencies,
                    manifest.analytical_threshold,
                )?;
                let a = run_case(&bundle, &spec, profile_a, options)?;
                let b = run_case(&bundle, &spec, profile_b, options)?;
                let (la, lb) = (a.report.stratified.log10, b.report.stratified.log10);
                let delta = la - lb;
                Ok(RegressionCaseResult {
                    id: spec.id.clone(),
                    log10_a: la,
                    log10_b: lb,
                    delta,
                    band: classify_band(delta, tolerance_eq),
                })
            };
            run().map_err(|e| (spec.id.clone(), e.to_string()))
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    let count = |b: Band| results.iter().filter(|r| r.band == b).count();
    Ok(RegressionReport {
        config_a: profile_a.name.clone(),
        config_b: profile_b.name.clone(),
        tolerance_eq,
        on_line: count(Band::OnLine),
        within_band: count(Band::WithinBand),
        divergent: count(Band::Divergent),
        results,
        failures,
    })
}

/// Scatter CSV: one row per case, log10 values to four significant digits.
pub fn scatter_csv(report: &RegressionReport) -> String {
    let mut out = String::from("case_id,log10lr_a,log10lr_b,delta,band\n");
    for r in &report.results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.id,
            fixed_sig(r.log10_a, 4),
            fixed_sig(r.log10_b, 4),
            fixed_sig(r.delta, 4),
            r.band
        ));
    }
    out
}

/// Gnuplot commands drawing the x = y and x = y +/- 1 reference lines over
/// the scatter file.
pub fn band_lines_gnuplot(scatter_file: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key off\n\
         identity(x) = x\n\
         upper(x) = x + 1\n\
         lower(x) = x - 1\n\
         plot '{scatter_file}' every ::1 using 2:3 with points pt 7, \\\n\
         \x20    identity(x) with lines lc 'black', \\\n\
         \x20    upper(x) with lines dt 2 lc 'gray', \\\n\
         \x20    lower(x) with lines dt 2 lc 'gray'\n"
    )
}

/// Write the scatter CSV (and reference-lines file) for a finished report.
pub fn emit_scatter(report: &RegressionReport, path: &str, bands_path: Option<&str>) -> Result<()> {
    if report.results.is_empty() && report.failures.is_empty() {
        return Err(Error::Validation("nothing to emit: empty report".into()));
    }
    crate::caseio::write_file(path, &scatter_csv(report))?;
    if let Some(bp) = bands_path {
        let scatter_name = std::path::Path::new(path)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.to_string());
        crate::caseio::write_file(bp, &band_lines_gnuplot(&scatter_name))?;
    }
    Ok(())
}

/// Log10 LRs of `n` random non-donors against one deconvolution (weights are
/// computed once; only the LR stage repeats).
pub fn h2_battery(
    bundle: &CaseBundle,
    spec: &CaseSpec,
    flags: &VersionProfile,
    options: &RunOptions,
    n_non_donors: usize,
) -> Result<Vec<(String, f64)>> {
    assert!(n_non_donors >= 1);
    let run = run_case(bundle, spec, flags, options)?;
    let population = &bundle
        .frequencies
        .populations
        .first()
        .ok_or_else(|| Error::Validation("frequency table has no populations".into()))?
        .name
        .clone();
    let mut evidence = bundle.evidence.clone();
    evidence.sample_id = spec.id.clone();
    let mut rng = rng_from_seed(derive_seed(spec.seed, u64::MAX, &format!("{}/h2", spec.id)));
    let mut out = Vec::with_capacity(n_non_donors);
    for i in 0..n_non_donors {
        let id = format!("non-donor-{i:04}");
        let non_donor = generate_non_donor(&bundle.frequencies, population, &id, &mut rng)?;
        let assumed: Vec<_> = spec
            .assumed
            .iter()
            .map(|a| bundle.reference(a))
            .collect::<Result<Vec<_>>>()?;
        let case = build_lr_case(
            &run.deconv,
            &evidence,
            &non_donor,
            &assumed,
            &bundle.frequencies,
            spec.theta,
            flags,
        )?;
        let report = lr_report(&case, &bundle.frequencies, spec.theta)?;
        out.push((id, report.stratified.log10));
    }
    Ok(out)
}

/// Expected versus observed stutter ratios for every observed parent/stutter
/// peak pair at a locus.
pub fn stutter_ratio_rows(
    profile: &LocusProfile,
    kit: &KitLocus,
    flags: &VersionProfile,
) -> Vec<StutterRow> {
    let mut rows = Vec::new();
    for parent in &profile.peaks {
        let mut push = |kind: &str, position, expected: Option<f64>| {
            let Some(pos) = position else { return };
            let Some(observed_peak) = profile.peak(pos) else {
                return;
            };
            let observed = observed_stutter_ratio(parent, observed_peak).unwrap();
            rows.push(StutterRow {
                locus: profile.locus.clone(),
                kind: kind.to_string(),
                parent: parent.allele.to_string(),
                position: pos.to_string(),
                parent_height: parent.height,
                observed_height: observed_peak.height,
                observed_ratio: observed,
                expected_ratio: expected,
            });
        };
        push(
            "back",
            parent.allele.back_position(),
            kit.back_stutter_ratio(parent.allele),
        );
        if flags.forward_stutter && kit.forward_stutter_ratio > 0.0 {
            push(
                "forward",
                parent.allele.forward_position(),
                Some(kit.forward_stutter_ratio),
            );
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct StutterRow {
    pub locus: String,
    pub kind: String,
    pub parent: String,
    pub position: String,
    pub parent_height: f64,
    pub observed_height: f64,
    pub observed_ratio: f64,
    pub expected_ratio: Option<f64>,
}

pub fn stutter_table_csv(rows: &[StutterRow]) -> String {
    let mut out = String::from(
        "Locus,Kind,Parent,Position,ParentHeight,ObservedHeight,ObservedSR,ExpectedSR\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.locus,
            r.kind,
            r.parent,
            r.position,
            r.parent_height,
            r.observed_height,
            fixed_sig(r.observed_ratio, 4),
            r.expected_ratio.map_or(String::new(), |e| fixed_sig(e, 4)),
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnosis {
    pub case_id: String,
    pub config_a: String,
    pub config_b: String,
    pub log10_a: f64,
    pub log10_b: f64,
    /// Per-locus log10 LR difference (first population), largest magnitude
    /// first.
    pub locus_deltas: Vec<(String, f64)>,
    pub max_delta_locus: Option<String>,
    pub files: Vec<String>,
}

/// Run both configs on one case and emit the per-locus tables, genotype pdfs
/// and the stutter ratio table. The locus with the largest |delta log10 LR|
/// is flagged.
pub fn diagnose_case(
    bundle: &CaseBundle,
    spec: &CaseSpec,
    profile_a: &VersionProfile,
    profile_b: &VersionProfile,
    options: &RunOptions,
    out_dir: Option<&str>,
) -> Result<Diagnosis> {
    let run_a = run_case(bundle, spec, profile_a, options)?;
    let run_b = run_case(bundle, spec, profile_b, options)?;

    let mut deltas: BTreeMap<String, f64> = BTreeMap::new();
    let rows_a = &run_a.report.populations[0].rows;
    let rows_b = &run_b.report.populations[0].rows;
    for (ra, rb) in rows_a.iter().zip(rows_b) {
        if ra.has_data {
            let d = crate::lr::log10_report(ra.lr)? - crate::lr::log10_report(rb.lr)?;
            deltas.insert(ra.locus.clone(), d);
        }
    }
    let mut locus_deltas: Vec<(String, f64)> = deltas.into_iter().collect();
    locus_deltas.sort_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    let max_delta_locus = locus_deltas.first().map(|(l, _)| l.clone());

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        for (tag, run, profile) in [("a", &run_a, profile_a), ("b", &run_b, profile_b)] {
            for pop in &run.report.populations {
                let path = format!("{dir}/lr_{tag}_{}_{}.csv", profile.name, pop.population);
                crate::caseio::write_file(&path, &lr_report_csv(pop))?;
                files.push(path);
            }
            for locus in &run.deconv.loci {
                let path = format!("{dir}/pdf_{tag}_{}_{}.tsv", profile.name, locus.locus);
                crate::caseio::write_file(&path, &genotype_pdf_tsv(&locus.weights, spec.noc))?;
                files.push(path);
            }
        }
        let mut rows = Vec::new();
        for locus in bundle.evidence.non_empty_loci() {
            if let Some(kl) = bundle.kit.locus(&locus.locus) {
                rows.extend(stutter_ratio_rows(locus, kl, profile_b));
            }
        }
        let path = format!("{dir}/stutter_ratios.csv");
        crate::caseio::write_file(&path, &stutter_table_csv(&rows))?;
        files.push(path);
    }

    Ok(Diagnosis {
        case_id: spec.id.clone(),
        config_a: profile_a.name.clone(),
        config_b: profile_b.name.clone(),
        log10_a: run_a.report.stratified.log10,
        log10_b: run_b.report.stratified.log10,
        locus_deltas,
        max_delta_locus,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_classification_matches_figure_semantics() {
        assert_eq!(classify_band(7.1 - 3.4, 0.1), Band::Divergent);
        assert_eq!(classify_band(42.0 - 42.3, 0.1), Band::WithinBand);
        assert_eq!(classify_band(0.0, 0.1), Band::OnLine);
        assert_eq!(classify_band(0.1, 0.1), Band::OnLine);
        assert_eq!(classify_band(-1.0, 0.1), Band::WithinBand);
        assert_eq!(classify_band(1.01, 0.1), Band::Divergent);
    }

    #[test]
    fn band_classification_is_symmetric() {
        for d in [-3.0, -1.0, -0.5, -0.05, 0.0, 0.05, 0.5, 1.0, 3.0] {
            assert_eq!(classify_band(d, 0.1), classify_band(-d, 0.1));
        }
    }

    #[test]
    fn scatter_preserves_sentinels() {
        let report = RegressionReport {
            config_a: "a".into(),
            config_b: "b".into(),
            tolerance_eq: 0.1,
            results: vec![RegressionCaseResult {
                id: "c1".into(),
                log10_a: -30.0,
                log10_b: 7.4,
                delta: -37.4,
                band: Band::Divergent,
            }],
            failures: vec![],
            on_line: 0,
            within_band: 0,
            divergent: 1,
        };
        let csv = scatter_csv(&report);
        assert!(csv.contains("-30.00"), "{csv}");
        assert_eq!(csv.lines().count(), 2);
    }
}
