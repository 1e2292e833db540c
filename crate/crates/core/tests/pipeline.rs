//! File-based end-to-end tests: canonical round trips, the single-case
//! pipeline, diagnostics, the non-donor battery and the command-line surface.

mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use pgmix::caseio::{
    evidence_csv, frequencies_csv, kit_json, load_case, load_evidence_csv, load_frequencies_csv,
    load_kit_json, load_references_csv, references_csv, CaseBundle,
};
use pgmix::harness::{
    diagnose_case, h2_battery, run_case, run_regression, scatter_csv, CaseSpec, RunOptions,
};
use pgmix::kit::KitDefinition;
use pgmix::version::VersionProfile;

fn fast_options() -> RunOptions {
    RunOptions {
        burn_in: 400,
        post_burn: 2000,
        chains: 2,
    }
}

/// A compact three-locus case with one stutter-bearing locus.
fn write_case_dir(dir: &Path) -> String {
    let kit = KitDefinition {
        loci: vec![
            kit_locus("TH01", (0.007541, 0.001577), 0.004, Some(0.08), Some(0.05)),
            stutterless_locus("D1"),
            stutterless_locus("D2"),
        ],
    };
    std::fs::write(dir.join("kit.json"), kit_json(&kit)).unwrap();

    let th01 = locus_profile(
        "TH01",
        &[("7", 149.0), ("8", 1229.0), ("9", 147.0), ("9.3", 1681.0)],
    );
    let d1 = locus_profile(
        "D1",
        &[("10", 1300.0), ("12", 1250.0), ("14", 150.0), ("16", 145.0)],
    );
    let d2 = locus_profile(
        "D2",
        &[("11", 1280.0), ("13", 1310.0), ("15", 148.0), ("17", 152.0)],
    );
    let ev = evidence("case1", 120.0, vec![th01, d1, d2]);
    std::fs::write(dir.join("evidence.csv"), evidence_csv(&ev)).unwrap();

    let refs = vec![
        reference(
            "major",
            &[("TH01", "8", "9.3"), ("D1", "10", "12"), ("D2", "11", "13")],
        ),
        reference(
            "minor",
            &[("TH01", "9", "9.3"), ("D1", "14", "16"), ("D2", "15", "17")],
        ),
    ];
    std::fs::write(dir.join("refs.csv"), references_csv(&refs)).unwrap();

    let freq = frequency_table(
        &[
            (
                "TH01",
                vec![
                    ("6", 40.0),
                    ("7", 60.0),
                    ("8", 50.0),
                    ("9", 55.0),
                    ("9.3", 80.0),
                    ("10", 15.0),
                ],
            ),
            ("D1", default_counts()),
            ("D2", default_counts()),
        ],
        400.0,
    );
    std::fs::write(dir.join("freqs.csv"), frequencies_csv(&freq)).unwrap();

    let case = serde_json::json!({
        "id": "case1",
        "evidence": "evidence.csv",
        "references": "refs.csv",
        "kit": "kit.json",
        "frequencies": "freqs.csv",
        "analytical_threshold": 120.0,
        "noc": 2,
        "poi": "major",
        "assumed": [],
        "populations": ["Pop"],
        "seed": 7,
        "theta": 0.01,
    });
    let path = dir.join("case.json");
    std::fs::write(&path, serde_json::to_string_pretty(&case).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn canonical_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_case_dir(dir.path());
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();

    let ev = load_evidence_csv(dir.path().join("evidence.csv").to_str().unwrap()).unwrap();
    assert_eq!(evidence_csv(&ev), read("evidence.csv"));

    let refs = load_references_csv(dir.path().join("refs.csv").to_str().unwrap()).unwrap();
    assert_eq!(references_csv(&refs), read("refs.csv"));

    let kit = load_kit_json(dir.path().join("kit.json").to_str().unwrap()).unwrap();
    assert_eq!(kit_json(&kit), read("kit.json"));

    let freq = load_frequencies_csv(dir.path().join("freqs.csv").to_str().unwrap()).unwrap();
    assert_eq!(frequencies_csv(&freq), read("freqs.csv"));
}

fn load_bundle(dir: &Path) -> CaseBundle {
    load_case(
        dir.join("evidence.csv").to_str().unwrap(),
        dir.join("refs.csv").to_str().unwrap(),
        dir.join("kit.json").to_str().unwrap(),
        dir.join("freqs.csv").to_str().unwrap(),
        120.0,
    )
    .unwrap()
}

#[test]
fn single_case_pipeline_reports_both_donors() {
    let dir = tempfile::tempdir().unwrap();
    write_case_dir(dir.path());
    let bundle = load_bundle(dir.path());
    let flags = VersionProfile::resolve("v2.9-like").unwrap();
    let mut spec = CaseSpec {
        id: "case1".into(),
        noc: 2,
        poi: "major".into(),
        assumed: vec![],
        theta: 0.01,
        seed: 7,
    };
    let run = run_case(&bundle, &spec, &flags, &fast_options()).unwrap();
    assert!(
        run.report.stratified.log10 > 2.0,
        "{}",
        run.report.stratified.log10
    );

    spec.poi = "minor".into();
    let run_minor = run_case(&bundle, &spec, &flags, &fast_options()).unwrap();
    assert!(run_minor.report.stratified.log10 > 0.0);

    // the report CSV carries one row per locus plus the two totals
    let csv = pgmix::lr::lr_report_csv(&run.report.populations[0]);
    assert_eq!(csv.lines().count(), 1 + 3 + 2);
    assert!(csv.lines().last().unwrap().starts_with("Sub-source,,,"));
}

#[test]
fn identical_configs_regress_to_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    write_case_dir(dir.path());
    let manifest = serde_json::json!({
        "kit": "kit.json",
        "references": "refs.csv",
        "frequencies": "freqs.csv",
        "analytical_threshold": 120.0,
        "theta": 0.01,
        "cases": [
            {"id": "case1", "evidence": "evidence.csv", "noc": 2, "poi": "major",
             "assumed": [], "populations": ["Pop"], "seed": 7},
            {"id": "case1b", "evidence": "evidence.csv", "noc": 2, "poi": "minor",
             "assumed": [], "populations": ["Pop"], "seed": 8},
        ],
    });
    let mpath = dir.path().join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let manifest = pgmix::caseio::load_manifest(mpath.to_str().unwrap()).unwrap();
    let p = VersionProfile::resolve("v2.9-like").unwrap();
    let report = run_regression(&manifest, &p, &p, &fast_options(), 0.1).unwrap();
    assert!(report.ok());
    assert_eq!(report.on_line, 2);
    for r in &report.results {
        assert_eq!(r.delta, 0.0, "same config and seed must agree exactly");
    }
    // three data rows plus the header
    assert_eq!(scatter_csv(&report).lines().count(), 3);
}

#[test]
fn diagnosis_flags_the_contested_locus_and_tabulates_stutter() {
    let dir = tempfile::tempdir().unwrap();
    write_case_dir(dir.path());
    let bundle = load_bundle(dir.path());
    let spec = CaseSpec {
        id: "case1".into(),
        noc: 2,
        poi: "minor".into(),
        assumed: vec![],
        theta: 0.01,
        seed: 7,
    };
    let mut legacy = VersionProfile::resolve("v2.5-like").unwrap();
    legacy.drop_in_rate = 0.05;
    let mut refined = VersionProfile::resolve("v2.9-like").unwrap();
    refined.drop_in_rate = 0.05;
    let out = dir.path().join("diag");
    let options = RunOptions {
        burn_in: 1000,
        post_burn: 8000,
        chains: 2,
    };
    let diagnosis = diagnose_case(
        &bundle,
        &spec,
        &legacy,
        &refined,
        &options,
        Some(out.to_str().unwrap()),
    )
    .unwrap();
    // the locus the configurations disagree about
    assert_eq!(diagnosis.max_delta_locus.as_deref(), Some("TH01"));
    assert!(diagnosis.log10_a < diagnosis.log10_b);

    let stutter = std::fs::read_to_string(out.join("stutter_ratios.csv")).unwrap();
    let th01_row = stutter
        .lines()
        .find(|l| l.starts_with("TH01,back,8,7"))
        .expect("back-stutter row for the 7 position");
    assert!(
        th01_row.contains(",0.12"),
        "observed ratio about 0.12: {th01_row}"
    );
    assert!(
        th01_row.contains("0.02016"),
        "expected ratio about 0.020: {th01_row}"
    );

    // genotype pdfs were written for both configs
    assert!(out.join("pdf_a_v2.5-like_TH01.tsv").exists());
    assert!(out.join("pdf_b_v2.9-like_TH01.tsv").exists());

    // identical configs disagree nowhere
    let same = diagnose_case(&bundle, &spec, &refined, &refined, &options, None).unwrap();
    for (locus, delta) in &same.locus_deltas {
        assert_eq!(*delta, 0.0, "{locus}");
    }
}

#[test]
fn h2_battery_is_seeded_and_separates_a_planted_donor() {
    let dir = tempfile::tempdir().unwrap();
    write_case_dir(dir.path());
    let bundle = load_bundle(dir.path());
    let spec = CaseSpec {
        id: "case1".into(),
        noc: 2,
        poi: "major".into(),
        assumed: vec![],
        theta: 0.01,
        seed: 7,
    };
    let flags = VersionProfile::resolve("v2.9-like").unwrap();
    let battery = h2_battery(&bundle, &spec, &flags, &fast_options(), 25).unwrap();
    assert_eq!(battery.len(), 25);
    let battery2 = h2_battery(&bundle, &spec, &flags, &fast_options(), 25).unwrap();
    assert_eq!(battery, battery2, "same seed, same battery");

    // a battery entry equal to a true donor by construction scores high
    let run = run_case(&bundle, &spec, &flags, &fast_options()).unwrap();
    let planted = bundle.reference("major").unwrap();
    let mut evidence_named = bundle.evidence.clone();
    evidence_named.sample_id = spec.id.clone();
    let case = pgmix::build_lr_case(
        &run.deconv,
        &evidence_named,
        planted,
        &[],
        &bundle.frequencies,
        spec.theta,
        &flags,
    )
    .unwrap();
    let planted_log10 = pgmix::lr_report(&case, &bundle.frequencies, spec.theta)
        .unwrap()
        .stratified
        .log10;
    let max_random = battery
        .iter()
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        planted_log10 > max_random.max(1.0),
        "{planted_log10} vs {max_random}"
    );
}

#[test]
fn cli_surface_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let case_path = write_case_dir(dir.path());
    let bin = env!("CARGO_BIN_EXE_pgmix");
    let fast = ["--burn-in", "300", "--post-burn", "1500", "--chains", "2"];

    let out = Command::new(bin)
        .args([
            "deconvolve",
            &case_path,
            "--config",
            "v2.9-like",
            "--seed",
            "7",
        ])
        .args(fast)
        .arg("--out")
        .arg(dir.path().join("deconv").to_str().unwrap())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("deconv/deconvolution.json").exists());
    assert!(dir.path().join("deconv/pdf_TH01.tsv").exists());

    let out = Command::new(bin)
        .args(["lr", &case_path, "--poi", "major", "--config", "v2.9-like"])
        .args(fast)
        .arg("--out")
        .arg(dir.path().join("lr").to_str().unwrap())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stratified log10 LR"), "{stdout}");
    assert!(dir.path().join("lr/lr_Pop.csv").exists());

    // unknown profile name: error listing the presets, nonzero exit
    let out = Command::new(bin)
        .args(["lr", &case_path, "--config", "v9000"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("v2.9-like"), "{stderr}");

    // regress over a two-case manifest, byte-identical across repeat runs
    let manifest = serde_json::json!({
        "kit": "kit.json",
        "references": "refs.csv",
        "frequencies": "freqs.csv",
        "analytical_threshold": 120.0,
        "theta": 0.01,
        "cases": [
            {"id": "case1", "evidence": "evidence.csv", "noc": 2, "poi": "major",
             "assumed": [], "populations": ["Pop"], "seed": 7},
            {"id": "case1b", "evidence": "evidence.csv", "noc": 2, "poi": "minor",
             "assumed": [], "populations": ["Pop"], "seed": 8},
        ],
    });
    let mpath = dir.path().join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    for run_dir in ["r1", "r2"] {
        let out = Command::new(bin)
            .args([
                "regress",
                mpath.to_str().unwrap(),
                "--config-a",
                "v2.5-like",
                "--config-b",
                "v2.9-like",
                "--out",
                dir.path().join(run_dir).to_str().unwrap(),
            ])
            .args(fast)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let scatter1 = std::fs::read(dir.path().join("r1/scatter.csv")).unwrap();
    let scatter2 = std::fs::read(dir.path().join("r2/scatter.csv")).unwrap();
    assert_eq!(scatter1, scatter2);
    assert!(dir.path().join("r1/bands.gnuplot").exists());
    assert!(dir.path().join("r1/summary.json").exists());
    // diagnostics are emitted for divergent cases only
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r1/summary.json")).unwrap())
            .unwrap();
    let scatter_text = String::from_utf8(scatter1.clone()).unwrap();
    for line in scatter_text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (case_id, band) = (fields[0], fields[4]);
        let has_diag = dir
            .path()
            .join(format!("r1/diagnostics/{case_id}/diagnosis.json"))
            .exists();
        assert_eq!(has_diag, band == "divergent", "{case_id} band {band}");
    }
    assert!(summary["diagnostics"].is_array());

    // a manifest with an unresolvable POI: failure recorded, nonzero exit
    let broken = serde_json::json!({
        "kit": "kit.json",
        "references": "refs.csv",
        "frequencies": "freqs.csv",
        "analytical_threshold": 120.0,
        "cases": [
            {"id": "bad", "evidence": "evidence.csv", "noc": 2, "poi": "nobody",
             "assumed": [], "populations": ["Pop"], "seed": 1},
        ],
    });
    let bpath = dir.path().join("broken.json");
    std::fs::write(&bpath, serde_json::to_string_pretty(&broken).unwrap()).unwrap();
    let out = Command::new(bin)
        .args([
            "regress",
            bpath.to_str().unwrap(),
            "--config-a",
            "v2.5-like",
            "--config-b",
            "v2.9-like",
            "--out",
            dir.path().join("rbad").to_str().unwrap(),
        ])
        .args(fast)
        .output()
        .unwrap();
    assert!(
        !out.status.success(),
        "failed case must give a nonzero exit"
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nobody"), "{stderr}");

    let out = Command::new(bin)
        .args(["h2", &case_path, "--n", "5"])
        .args(fast)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = Command::new(bin)
        .args(["diagnose", &case_path])
        .args(fast)
        .arg("--out")
        .arg(dir.path().join("diag").to_str().unwrap())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("diag/diagnosis.json").exists());
}
