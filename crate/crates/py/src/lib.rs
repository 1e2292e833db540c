//! Python bindings for the pgmix engine.
//!
//! The module exposes the main pipeline pieces: case loading, version
//! profiles, deconvolution, likelihood-ratio reports and the regression
//! batch, plus a few pure helpers that are convenient to poke at from
//! Python.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pgmix::caseio::{load_case, load_case_file, load_manifest};
use pgmix::genotype::genotype_pdf_tsv;
use pgmix::harness::{run_case, run_regression, scatter_csv, CaseSpec, RunOptions};
use pgmix::lr::lr_report_csv;
use pgmix::version::VersionProfile as RustVersionProfile;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

/// A named feature-flag bundle.
#[pyclass(name = "VersionProfile", skip_from_py_object)]
#[derive(Clone)]
struct PyVersionProfile {
    inner: RustVersionProfile,
}

#[pymethods]
impl PyVersionProfile {
    /// Resolve a preset name ("v2.3-like", "v2.5-like", "v2.8-like",
    /// "v2.9-like") or a profile JSON path.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        RustVersionProfile::resolve(name)
            .map(|inner| PyVersionProfile { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// The full resolved flag bundle as a dict.
    fn as_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &serde_json::to_value(&self.inner).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("VersionProfile({})", self.inner.name)
    }
}

/// A loaded, validated case: evidence, references, kit and frequencies plus
/// the proposition settings from the case JSON.
#[pyclass(name = "Case")]
struct PyCase {
    bundle: pgmix::CaseBundle,
    spec: CaseSpec,
}

#[pymethods]
impl PyCase {
    #[new]
    fn new(path: &str) -> PyResult<Self> {
        let case = load_case_file(path).map_err(err)?;
        let bundle = load_case(
            &case.evidence,
            &case.references,
            &case.kit,
            &case.frequencies,
            case.analytical_threshold,
        )
        .map_err(err)?;
        Ok(PyCase {
            spec: CaseSpec::from_case_file(&case),
            bundle,
        })
    }

    #[getter]
    fn id(&self) -> String {
        self.spec.id.clone()
    }

    #[getter]
    fn noc(&self) -> usize {
        self.spec.noc
    }

    #[getter]
    fn poi(&self) -> String {
        self.spec.poi.clone()
    }

    /// Deconvolve and compute the LR report in one pass.
    ///
    /// Returns a dict with `log10_lr` (stratified), `populations`,
    /// `lr_csv` (first population, table format), `genotype_pdfs`
    /// (locus -> TSV text) and the parameter summaries.
    #[pyo3(signature = (profile, seed=None, burn_in=2000, post_burn=10000, chains=4, poi=None))]
    fn run(
        &self,
        py: Python<'_>,
        profile: &PyVersionProfile,
        seed: Option<u64>,
        burn_in: u32,
        post_burn: u32,
        chains: u32,
        poi: Option<String>,
    ) -> PyResult<Py<PyAny>> {
        let mut spec = self.spec.clone();
        if let Some(s) = seed {
            spec.seed = s;
        }
        if let Some(p) = poi {
            spec.poi = p;
        }
        let options = RunOptions {
            burn_in,
            post_burn,
            chains,
        };
        let run = run_case(&self.bundle, &spec, &profile.inner, &options).map_err(err)?;

        let out = PyDict::new(py);
        out.set_item("case_id", &spec.id)?;
        out.set_item("poi", &spec.poi)?;
        out.set_item("log10_lr", run.report.stratified.log10)?;
        out.set_item(
            "populations",
            json_to_py(
                py,
                &serde_json::to_value(&run.report.populations).map_err(err)?,
            )?,
        )?;
        out.set_item("lr_csv", lr_report_csv(&run.report.populations[0]))?;
        let pdfs = PyDict::new(py);
        for locus in &run.deconv.loci {
            pdfs.set_item(&locus.locus, genotype_pdf_tsv(&locus.weights, spec.noc))?;
        }
        out.set_item("genotype_pdfs", pdfs)?;
        out.set_item(
            "mixture_proportions",
            run.deconv.mixture_proportions.clone(),
        )?;
        out.set_item(
            "templates",
            run.deconv
                .templates
                .iter()
                .map(|t| (t.mean, t.sd))
                .collect::<Vec<_>>(),
        )?;
        Ok(out.into_any().unbind())
    }
}

/// Expected back-stutter ratio from a regression `intercept + slope * LUS`,
/// floored at zero.
#[pyfunction]
fn expected_stutter_ratio(intercept: f64, slope_lus: f64, lus: f64) -> f64 {
    (intercept + slope_lus * lus).max(0.0)
}

/// Ratio of a stutter peak height to its parent height.
#[pyfunction]
fn observed_stutter_ratio(parent_height: f64, stutter_height: f64) -> PyResult<f64> {
    if parent_height <= 0.0 {
        return Err(PyValueError::new_err("parent height must be positive"));
    }
    Ok(stutter_height / parent_height)
}

/// log10 of a likelihood ratio with the -30 sentinel for zero.
#[pyfunction]
fn log10_lr(lr: f64) -> PyResult<f64> {
    pgmix::log10_report(lr).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Balding-Nichols genotype probability with sequential conditioning.
#[pyfunction]
#[pyo3(signature = (p_a, p_b, theta, homozygote, conditioning_a=0, conditioning_b=0, conditioning_total=0))]
#[allow(clippy::too_many_arguments)]
fn genotype_probability(
    p_a: f64,
    p_b: f64,
    theta: f64,
    homozygote: bool,
    conditioning_a: usize,
    conditioning_b: usize,
    conditioning_total: usize,
) -> f64 {
    let draw = |j: usize, m: usize, p: f64| {
        ((j as f64 + 1.0) * theta + (1.0 - theta) * p) / (1.0 + (m as f64 + 1.0) * theta)
    };
    if homozygote {
        draw(conditioning_a, conditioning_total, p_a)
            * draw(conditioning_a + 1, conditioning_total + 1, p_a)
    } else {
        2.0 * draw(conditioning_a, conditioning_total, p_a)
            * draw(conditioning_b, conditioning_total + 1, p_b)
    }
}

/// Run a regression manifest under two profiles; returns the summary dict
/// with the scatter CSV text included.
#[pyfunction]
#[pyo3(signature = (manifest_path, config_a, config_b, burn_in=2000, post_burn=10000, chains=4, tolerance_eq=0.1))]
fn regress(
    py: Python<'_>,
    manifest_path: &str,
    config_a: &str,
    config_b: &str,
    burn_in: u32,
    post_burn: u32,
    chains: u32,
    tolerance_eq: f64,
) -> PyResult<Py<PyAny>> {
    let manifest = load_manifest(manifest_path).map_err(err)?;
    let a = RustVersionProfile::resolve(config_a).map_err(err)?;
    let b = RustVersionProfile::resolve(config_b).map_err(err)?;
    let options = RunOptions {
        burn_in,
        post_burn,
        chains,
    };
    let report = run_regression(&manifest, &a, &b, &options, tolerance_eq).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item(
        "report",
        json_to_py(py, &serde_json::to_value(&report).map_err(err)?)?,
    )?;
    out.set_item("scatter_csv", scatter_csv(&report))?;
    Ok(out.into_any().unbind())
}

#[pymodule]
fn pgmix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVersionProfile>()?;
    m.add_class::<PyCase>()?;
    m.add_function(wrap_pyfunction!(expected_stutter_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(observed_stutter_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(log10_lr, m)?)?;
    m.add_function(wrap_pyfunction!(genotype_probability, m)?)?;
    m.add_function(wrap_pyfunction!(regress, m)?)?;
    m.add("LOG10_LR_ZERO_SENTINEL", pgmix::LOG10_LR_ZERO_SENTINEL)?;
    Ok(())
}
