// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Complex numbers cross as Python `complex`, matrices as
//! nested lists, files as JSON or CSV text.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use spinorbit_core::measurement::{outcome_probability as outcome_prob, read_counts_csv};
use spinorbit_core::scenarios::{
    self as sc, paper_2009, run_scenario as run, NoiseParams, QPlateModel, RunConfig, ScenarioKind,
    ScenarioOptions,
};
use spinorbit_core::tomography::{self as tomo, TomoSettings};
use spinorbit_core::{constants, Error, ModeKey, Pol, C64};

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(|e| match e {
            Error::Io(_) => PyIOError::new_err(e.to_string()),
            _ => PyValueError::new_err(e.to_string()),
        })
    }
}

fn pol(s: &str) -> PyResult<Pol> {
    match s {
        "H" => Ok(Pol::H),
        "V" => Ok(Pol::V),
        _ => Err(PyValueError::new_err(format!(
            "polarization must be H or V, got `{s}`"
        ))),
    }
}

type ModeTuple = (String, String, i32, u32);

fn mode(m: &ModeTuple) -> PyResult<ModeKey> {
    Ok(ModeKey::new(m.0.clone(), pol(&m.1)?, m.2, m.3))
}

fn rows(m: &nalgebra::DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Multimode Fock-state superposition.
#[pyclass(module = "spinorbit", name = "PhotonicState", skip_from_py_object)]
#[derive(Clone)]
struct PyState(spinorbit_core::PhotonicState);

#[pymethods]
impl PyState {
    /// Product state with one photon in each listed `(path, pol, oam, wavepacket)` mode.
    #[staticmethod]
    #[pyo3(signature = (modes, n_max = 4))]
    fn from_modes(modes: Vec<ModeTuple>, n_max: usize) -> PyResult<Self> {
        let keys = modes.iter().map(mode).collect::<PyResult<Vec<_>>>()?;
        spinorbit_core::PhotonicState::from_modes(n_max, &keys)
            .py()
            .map(Self)
    }

    /// One photon in a superposition of modes.
    #[staticmethod]
    #[pyo3(signature = (terms, n_max = 4))]
    fn single_photon(terms: Vec<(ModeTuple, C64)>, n_max: usize) -> PyResult<Self> {
        let terms = terms
            .iter()
            .map(|(m, a)| Ok((mode(m)?, *a)))
            .collect::<PyResult<Vec<_>>>()?;
        spinorbit_core::PhotonicState::single_photon(n_max, &terms)
            .py()
            .map(Self)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        spinorbit_core::PhotonicState::from_json(text)
            .py()
            .map(Self)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    #[getter]
    fn success_probability(&self) -> f64 {
        self.0.success_probability()
    }

    #[getter]
    fn photon_number(&self) -> usize {
        self.0.photon_number()
    }

    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    /// `[(modes, amplitude)]` with `modes = [((path, pol, oam, wavepacket), n)]`.
    fn terms(&self) -> Vec<(Vec<(ModeTuple, u32)>, C64)> {
        self.0
            .terms()
            .map(|(basis, amp)| {
                let modes = basis
                    .iter()
                    .map(|(k, n)| ((k.path.clone(), k.pol.to_string(), k.oam, k.wavepacket), n))
                    .collect();
                (modes, amp)
            })
            .collect()
    }

    fn inner_product(&self, other: &PyState) -> C64 {
        self.0.inner_product(&other.0)
    }

    fn tensor(&self, other: &PyState) -> PyResult<Self> {
        self.0.tensor(&other.0).py().map(Self)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PhotonicState(terms={}, photons={}, success_probability={})",
            self.0.len(),
            self.0.photon_number(),
            self.0.success_probability()
        )
    }
}

/// Ordered list of optical elements.
#[pyclass(module = "spinorbit", name = "Circuit")]
struct PyCircuit(spinorbit_core::Circuit);

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        spinorbit_core::Circuit::from_json(text).py().map(Self)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_spec().to_json().py()
    }

    fn apply(&self, state: &PyState) -> PyResult<PyState> {
        self.0.apply(&state.0).py().map(PyState)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Probability of a coincidence pattern such as `D_A=kA,D_B=kB`.
#[pyfunction]
#[pyo3(signature = (state, pattern, absolute = false))]
fn outcome_probability(state: &PyState, pattern: &str, absolute: bool) -> PyResult<f64> {
    let p = pattern.parse().py()?;
    Ok(outcome_prob(&state.0, &p, absolute))
}

#[pyclass(module = "spinorbit", name = "DensityMatrix", from_py_object)]
#[derive(Clone)]
struct PyDensity(tomo::DensityMatrix);

#[pymethods]
impl PyDensity {
    #[staticmethod]
    fn pure(psi: Vec<C64>) -> PyResult<Self> {
        tomo::DensityMatrix::pure(&psi).py().map(Self)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        tomo::DensityMatrix::from_json(text).py().map(Self)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        rows(self.0.matrix())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }
}

#[pyfunction]
fn concurrence(rho: &PyDensity) -> PyResult<f64> {
    tomo::concurrence(&rho.0).py()
}

#[pyfunction]
fn fidelity(rho: &PyDensity, sigma: &PyDensity) -> PyResult<f64> {
    tomo::fidelity(&rho.0, &sigma.0).py()
}

#[pyfunction]
fn pure_state_fidelity(rho: &PyDensity, psi: Vec<C64>) -> PyResult<f64> {
    tomo::pure_state_fidelity(&rho.0, &psi).py()
}

/// Maximum-likelihood state from counts CSV text. Returns `(rho, converged)`.
#[pyfunction]
#[pyo3(signature = (counts_csv, qubits = 2, seed = sc::DEFAULT_SEED, restarts = None))]
fn mle_state_tomo(
    counts_csv: &str,
    qubits: usize,
    seed: u64,
    restarts: Option<usize>,
) -> PyResult<(PyDensity, bool)> {
    let records = read_counts_csv(counts_csv.as_bytes()).py()?;
    let mut settings = match qubits {
        1 => TomoSettings::single_qubit(),
        2 => TomoSettings::two_qubit(),
        _ => return Err(PyValueError::new_err("qubits must be 1 or 2")),
    };
    settings.seed = seed;
    if let Some(r) = restarts {
        settings.restarts = r;
    }
    let mle = match tomo::mle_state_tomo(&records, &settings) {
        Ok(m) => m,
        Err(Error::NonConvergence { best, .. }) => *best,
        Err(e) => return Err(e).py(),
    };
    Ok((PyDensity(mle.rho), mle.converged))
}

/// Physical χ matrix of a single-qubit channel from input/output pairs.
/// Returns `(chi, chi_II)`.
#[pyfunction]
fn process_tomo(inputs: Vec<PyDensity>, outputs: Vec<PyDensity>) -> PyResult<(Vec<Vec<C64>>, f64)> {
    let i: Vec<_> = inputs.into_iter().map(|d| d.0).collect();
    let o: Vec<_> = outputs.into_iter().map(|d| d.0).collect();
    let out = tomo::process_tomo(&i, &o).py()?;
    Ok((rows(out.chi.matrix()), out.chi.chi_ii()))
}

#[pyclass(module = "spinorbit", name = "ScenarioResult", get_all)]
struct PyScenarioResult {
    scenario: String,
    metrics: BTreeMap<String, f64>,
    success_probability: f64,
    /// `[(setting, outcome, probability)]`.
    probabilities: Vec<(String, String, f64)>,
    /// `[(t_d_ps, coincidence_prob)]`, empty for unscanned scenarios.
    scan: Vec<(f64, f64)>,
    json: String,
    summary: String,
}

#[pymethods]
impl PyScenarioResult {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        self.summary.clone()
    }
}

/// Runs a canned experiment. `noise` overrides knobs by name on top of the
/// preset (or of ideal optics when no preset is given).
#[pyfunction]
#[pyo3(signature = (
    name, preset = None, noise = None, shots = None, seed = sc::DEFAULT_SEED,
    input = None, delays_ps = None, basis = None, incoherent_qplate = false,
))]
#[allow(clippy::too_many_arguments)]
fn run_scenario(
    name: &str,
    preset: Option<&str>,
    noise: Option<BTreeMap<String, f64>>,
    shots: Option<u64>,
    seed: u64,
    input: Option<String>,
    delays_ps: Option<Vec<f64>>,
    basis: Option<&str>,
    incoherent_qplate: bool,
) -> PyResult<PyScenarioResult> {
    let kind: ScenarioKind = name.parse().py()?;
    let mut params = match preset {
        None => NoiseParams::ideal(),
        Some("paper-2009") => paper_2009(kind).py()?,
        Some(other) => return Err(PyValueError::new_err(format!("unknown preset `{other}`"))),
    };
    if incoherent_qplate {
        params.qplate_model = QPlateModel::Incoherent;
    }
    for (k, v) in noise.unwrap_or_default() {
        params.set(&k, v).py()?;
    }
    let config = RunConfig {
        shots,
        seed,
        ..RunConfig::exact(params)
    };
    let opts = ScenarioOptions {
        input,
        delays_ps,
        basis: basis.map(str::parse).transpose().py()?,
    };
    let r = run(kind, &opts, &config).py()?;
    Ok(PyScenarioResult {
        scenario: r.scenario.clone(),
        metrics: r.metrics.clone(),
        success_probability: r.success_probability,
        probabilities: r
            .probabilities
            .iter()
            .map(|p| (p.setting.clone(), p.outcome.clone(), p.probability))
            .collect(),
        scan: r
            .scan
            .iter()
            .flatten()
            .map(|s| (s.t_d_ps, s.coincidence_prob))
            .collect(),
        json: r.to_json().py()?,
        summary: r.summary(),
    })
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    ScenarioKind::ALL.iter().map(|k| k.name()).collect()
}

/// Coherence time in ps of a Gaussian spectrum.
#[pyfunction]
fn coherence_time_ps(wavelength_nm: f64, bandwidth_nm: f64) -> f64 {
    constants::coherence_time_ps(wavelength_nm, bandwidth_nm)
}

#[pymodule]
pub fn spinorbit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyScenarioResult>()?;
    m.add_function(wrap_pyfunction!(outcome_probability, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(pure_state_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(mle_state_tomo, m)?)?;
    m.add_function(wrap_pyfunction!(process_tomo, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_time_ps, m)?)?;
    m.add("DEFAULT_SEED", sc::DEFAULT_SEED)?;
    Ok(())
}
