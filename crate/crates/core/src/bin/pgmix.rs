//! Command-line interface: deconvolve, lr, regress, h2, diagnose.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pgmix::caseio::{load_case, load_case_file, load_manifest, write_file, CaseFile};
use pgmix::format::fixed_sig;
use pgmix::genotype::genotype_pdf_tsv;
use pgmix::harness::{
    diagnose_case, emit_scatter, h2_battery, run_case, run_regression, CaseSpec, RunOptions,
};
use pgmix::hpd::{hpd_interval, mcmc_log10_sd, HpdConfig, ThetaSpec};
use pgmix::lr::{build_lr_case, lr_report_csv};
use pgmix::version::VersionProfile;
use pgmix::Result;

#[derive(Parser)]
#[command(
    name = "pgmix",
    about = "Probabilistic genotyping: mixture deconvolution, likelihood ratios and version regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SamplerArgs {
    /// Burn-in iterations per chain.
    #[arg(long, default_value_t = 10_000)]
    burn_in: u32,
    /// Recorded iterations per chain.
    #[arg(long, default_value_t = 50_000)]
    post_burn: u32,
    /// Independent chains.
    #[arg(long, default_value_t = 4)]
    chains: u32,
}

impl SamplerArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            burn_in: self.burn_in,
            post_burn: self.post_burn,
            chains: self.chains,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the MCMC deconvolution of one case and write its report and
    /// genotype pdfs.
    Deconvolve {
        /// Case JSON file.
        case: String,
        /// Version profile preset name or profile JSON path.
        #[arg(long, default_value = "v2.9-like")]
        config: String,
        /// Override the case seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to the case id).
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Deconvolve and report likelihood ratios for a person of interest.
    Lr {
        case: String,
        /// Person of interest (overrides the case file).
        #[arg(long)]
        poi: Option<String>,
        #[arg(long, default_value = "v2.9-like")]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        /// Also resample an HPD interval on the stratified log10 LR.
        #[arg(long)]
        hpd: bool,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Run a case battery under two configs and classify the log10 LR pairs.
    Regress {
        manifest: String,
        #[arg(long)]
        config_a: String,
        #[arg(long)]
        config_b: String,
        #[arg(long)]
        out: String,
        /// |delta| at or below this is classified on the line.
        #[arg(long, default_value_t = 0.1)]
        tolerance_eq: f64,
        /// Worker threads (0 = rayon default).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Do not emit per-locus diagnostics for divergent cases.
        #[arg(long)]
        skip_diagnostics: bool,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Test one case against random non-donors.
    H2 {
        case: String,
        /// Number of non-donors.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "v2.9-like")]
        config: String,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Compare two configs on one case and emit per-locus diagnostics.
    Diagnose {
        case: String,
        #[arg(long, default_value = "v2.5-like")]
        config_a: String,
        #[arg(long, default_value = "v2.9-like")]
        config_b: String,
        #[arg(long)]
        out: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
}

fn load_bundle(case: &CaseFile) -> Result<pgmix::CaseBundle> {
    load_case(
        &case.evidence,
        &case.references,
        &case.kit,
        &case.frequencies,
        case.analytical_threshold,
    )
}

fn spec_of(case: &CaseFile, seed: Option<u64>, poi: Option<String>) -> CaseSpec {
    let mut spec = CaseSpec::from_case_file(case);
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(p) = poi {
        spec.poi = p;
    }
    spec
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Deconvolve {
            case,
            config,
            seed,
            out,
            sampler,
        } => {
            let case = load_case_file(&case)?;
            let flags = VersionProfile::resolve(&config)?;
            let bundle = load_bundle(&case)?;
            let spec = spec_of(&case, seed, None);
            let run = run_case(&bundle, &spec, &flags, &sampler.options())?;
            let out_dir = out.unwrap_or_else(|| spec.id.clone());
            let weight_variance: serde_json::Map<String, serde_json::Value> = run
                .deconv
                .loci
                .iter()
                .map(|l| {
                    (
                        l.locus.clone(),
                        serde_json::to_value(l.weight_variance_across_chains()).unwrap(),
                    )
                })
                .collect();
            let report = serde_json::json!({
                "deconvolution": run.deconv,
                "per_chain_weight_variance": weight_variance,
                "profile": flags,
            });
            write_file(
                &format!("{out_dir}/deconvolution.json"),
                &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
            )?;
            for locus in &run.deconv.loci {
                write_file(
                    &format!("{out_dir}/pdf_{}.tsv", locus.locus),
                    &genotype_pdf_tsv(&locus.weights, spec.noc),
                )?;
            }
            println!(
                "deconvolved {} loci; reports in {out_dir}/",
                run.deconv.loci.len()
            );
            for a in &run.deconv.acceptance {
                println!("  acceptance {}: {}", a.class, fixed_sig(a.rate(), 4));
            }
            Ok(true)
        }
        Command::Lr {
            case,
            poi,
            config,
            seed,
            out,
            hpd,
            sampler,
        } => {
            let case_file = load_case_file(&case)?;
            let flags = VersionProfile::resolve(&config)?;
            let bundle = load_bundle(&case_file)?;
            let spec = spec_of(&case_file, seed, poi);
            let run = run_case(&bundle, &spec, &flags, &sampler.options())?;
            println!(
                "case {} poi {}: stratified log10 LR = {}",
                spec.id,
                spec.poi,
                fixed_sig(run.report.stratified.log10, 4)
            );
            for p in &run.report.populations {
                println!(
                    "  {}: sub-source LR {} (log10 {})",
                    p.population,
                    pgmix::format::sci(p.sub_source, 3),
                    fixed_sig(p.log10_sub_source, 4)
                );
            }
            let hpd_result = if hpd {
                let poi_ref = bundle.reference(&spec.poi)?;
                let assumed: Vec<_> = spec
                    .assumed
                    .iter()
                    .map(|a| bundle.reference(a))
                    .collect::<Result<Vec<_>>>()?;
                let mut evidence = bundle.evidence.clone();
                evidence.sample_id = spec.id.clone();
                let lr_case = build_lr_case(
                    &run.deconv,
                    &evidence,
                    poi_ref,
                    &assumed,
                    &bundle.frequencies,
                    spec.theta,
                    &flags,
                )?;
                let sd = mcmc_log10_sd(&lr_case, &run.deconv, &bundle.frequencies, spec.theta)?;
                let interval = hpd_interval(
                    &lr_case,
                    &bundle.frequencies,
                    &ThetaSpec::Point(spec.theta),
                    &HpdConfig {
                        samples: flags.hpd_samples,
                        quantile: flags.hpd_quantile,
                        cap: flags.hpd_cap,
                        seed: spec.seed,
                    },
                    Some(sd),
                )?;
                println!(
                    "  HPD log10 [{}, {}] around {}",
                    fixed_sig(interval.lower, 4),
                    fixed_sig(interval.upper, 4),
                    fixed_sig(interval.point, 4)
                );
                Some(interval)
            } else {
                None
            };
            if let Some(dir) = out {
                for p in &run.report.populations {
                    write_file(&format!("{dir}/lr_{}.csv", p.population), &lr_report_csv(p))?;
                }
                let mut report = serde_json::to_value(&run.report).unwrap();
                if let Some(i) = hpd_result {
                    report["hpd"] = serde_json::to_value(i).unwrap();
                }
                write_file(
                    &format!("{dir}/lr_report.json"),
                    &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
                )?;
            }
            Ok(true)
        }
        Command::Regress {
            manifest,
            config_a,
            config_b,
            out,
            tolerance_eq,
            threads,
            skip_diagnostics,
            sampler,
        } => {
            let manifest = load_manifest(&manifest)?;
            let profile_a = VersionProfile::resolve(&config_a)?;
            let profile_b = VersionProfile::resolve(&config_b)?;
            let options = sampler.options();
            let report = if threads > 0 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("thread pool");
                pool.install(|| {
                    run_regression(&manifest, &profile_a, &profile_b, &options, tolerance_eq)
                })?
            } else {
                run_regression(&manifest, &profile_a, &profile_b, &options, tolerance_eq)?
            };
            emit_scatter(
                &report,
                &format!("{out}/scatter.csv"),
                Some(&format!("{out}/bands.gnuplot")),
            )?;

            // the divergent cases are the ones worth a closer look
            let mut diagnostics = Vec::new();
            if !skip_diagnostics {
                for result in &report.results {
                    if result.band != pgmix::Band::Divergent {
                        continue;
                    }
                    let Some(mc) = manifest.cases.iter().find(|c| c.id == result.id) else {
                        continue;
                    };
                    let bundle = load_case(
                        &mc.evidence,
                        &manifest.references,
                        &manifest.kit,
                        &manifest.frequencies,
                        manifest.analytical_threshold,
                    )?;
                    let spec = CaseSpec::from_manifest_case(mc, manifest.theta);
                    let dir = format!("{out}/diagnostics/{}", result.id);
                    let diagnosis = diagnose_case(
                        &bundle,
                        &spec,
                        &profile_a,
                        &profile_b,
                        &sampler.options(),
                        Some(&dir),
                    )?;
                    write_file(
                        &format!("{dir}/diagnosis.json"),
                        &format!("{}\n", serde_json::to_string_pretty(&diagnosis).unwrap()),
                    )?;
                    diagnostics.push((result.id.clone(), dir));
                }
            }

            let mut summary = serde_json::to_value(&report).unwrap();
            summary["diagnostics"] = serde_json::to_value(&diagnostics).unwrap();
            write_file(
                &format!("{out}/summary.json"),
                &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
            )?;
            println!(
                "{} cases: {} on line, {} within band, {} divergent, {} failed",
                report.results.len(),
                report.on_line,
                report.within_band,
                report.divergent,
                report.failures.len()
            );
            for (id, err) in &report.failures {
                eprintln!("case {id} failed: {err}");
            }
            Ok(report.ok())
        }
        Command::H2 {
            case,
            n,
            config,
            out,
            sampler,
        } => {
            let case_file = load_case_file(&case)?;
            let flags = VersionProfile::resolve(&config)?;
            let bundle = load_bundle(&case_file)?;
            let spec = CaseSpec::from_case_file(&case_file);
            let battery = h2_battery(&bundle, &spec, &flags, &sampler.options(), n)?;
            let above_one = battery.iter().filter(|(_, l)| *l > 0.0).count();
            println!(
                "{} non-donors: {} with log10 LR > 0 ({}%)",
                battery.len(),
                above_one,
                fixed_sig(100.0 * above_one as f64 / battery.len() as f64, 4)
            );
            if let Some(dir) = out {
                let mut csv = String::from("non_donor,log10_lr\n");
                for (id, l) in &battery {
                    csv.push_str(&format!("{id},{}\n", fixed_sig(*l, 4)));
                }
                write_file(&format!("{dir}/h2.csv"), &csv)?;
            }
            Ok(true)
        }
        Command::Diagnose {
            case,
            config_a,
            config_b,
            out,
            sampler,
        } => {
            let case_file = load_case_file(&case)?;
            let profile_a = VersionProfile::resolve(&config_a)?;
            let profile_b = VersionProfile::resolve(&config_b)?;
            let bundle = load_bundle(&case_file)?;
            let spec = CaseSpec::from_case_file(&case_file);
            let out_dir = out.unwrap_or_else(|| format!("{}-diagnosis", spec.id));
            let diagnosis = diagnose_case(
                &bundle,
                &spec,
                &profile_a,
                &profile_b,
                &sampler.options(),
                Some(&out_dir),
            )?;
            write_file(
                &format!("{out_dir}/diagnosis.json"),
                &format!("{}\n", serde_json::to_string_pretty(&diagnosis).unwrap()),
            )?;
            println!(
                "case {}: log10 LR {} vs {}",
                diagnosis.case_id,
                fixed_sig(diagnosis.log10_a, 4),
                fixed_sig(diagnosis.log10_b, 4)
            );
            if let Some(locus) = &diagnosis.max_delta_locus {
                println!("largest per-locus difference at {locus}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
