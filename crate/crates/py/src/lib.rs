//! Python bindings for the FGA CVaR-VQE library.
//!
//! Build with `cargo build -p fga-vqe-py --release` and rename the
//! produced `libfga_vqe.so` to `fga_vqe.so` somewhere on `sys.path`
//! (see `python/smoke_test.py`).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

use fga_vqe::analysis;
use fga_vqe::encoding::{self, DiagonalHamiltonian};
use fga_vqe::error::FgaError;
use fga_vqe::model::{self, Assignment, BruteForceOutcome, FgaInstance, GeneratorParams};
use fga_vqe::simulator::{self, AnsatzSpec, ParamVector};
use fga_vqe::vqe::{self, CvarConfig, OptimizerKind, ShotMode};

fn err(e: FgaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A flight gate assignment problem instance.
#[pyclass(name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: FgaInstance,
}

#[pymethods]
impl PyInstance {
    /// Parse an instance from its JSON representation.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: FgaInstance =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PyInstance { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn n_flights(&self) -> usize {
        self.inner.n_flights()
    }

    #[getter]
    fn n_gates(&self) -> usize {
        self.inner.n_gates()
    }

    /// Total transit time of an assignment (list of gate indices).
    fn total_time(&self, gates: Vec<usize>) -> PyResult<i64> {
        model::total_time(&self.inner, &Assignment::new(gates)).map_err(err)
    }

    fn is_feasible(&self, gates: Vec<usize>) -> PyResult<bool> {
        model::is_feasible(&self.inner, &Assignment::new(gates)).map_err(err)
    }

    /// Ordered flight pairs whose dwell intervals (plus buffer) collide.
    fn overlap_set(&self) -> Vec<(usize, usize)> {
        model::overlap_set(&self.inner).into_iter().collect()
    }

    /// Exhaustive solve; returns (min_cost, optimal_assignments) or None
    /// when no feasible assignment exists.
    #[pyo3(signature = (cap = model::DEFAULT_ENUMERATION_CAP))]
    fn solve_exact(&self, cap: u128) -> PyResult<Option<(i64, Vec<Vec<usize>>)>> {
        match model::brute_force_solve(&self.inner, cap).map_err(err)? {
            BruteForceOutcome::Infeasible => Ok(None),
            BruteForceOutcome::Solved { min_cost, optima } => Ok(Some((
                min_cost,
                optima.into_iter().map(|a| a.gate_of).collect(),
            ))),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n_flights={}, n_gates={})",
            self.inner.n_flights(),
            self.inner.n_gates()
        )
    }
}

/// Diagonal FGA Hamiltonian in the cyclic binary encoding.
#[pyclass(name = "Hamiltonian")]
struct PyHamiltonian {
    inner: DiagonalHamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    #[new]
    #[pyo3(signature = (instance, lam = None))]
    fn new(instance: &PyInstance, lam: Option<f64>) -> PyResult<Self> {
        let lam = lam.unwrap_or_else(|| encoding::default_lambda(&instance.inner));
        let inner = encoding::build_hamiltonian(&instance.inner, lam).map_err(err)?;
        Ok(PyHamiltonian { inner })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    /// Classical energy of a computational basis state.
    fn energy(&self, basis_index: u64) -> f64 {
        self.inner.energy(basis_index)
    }

    /// Gate assignment encoded by a basis state.
    fn decode(&self, basis_index: u64) -> Vec<usize> {
        self.inner.decode(basis_index).gate_of
    }

    fn is_feasible_state(&self, basis_index: u64) -> bool {
        self.inner.is_feasible_state(basis_index)
    }

    /// Full diagonal as a list of length 2**n_qubits.
    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().to_vec()
    }

    /// (ground_energy, [basis indices attaining it])
    fn ground_states(&self) -> (f64, Vec<u64>) {
        self.inner.ground_states()
    }

    /// Pauli-Z expansion as a list of (qubit_indices, coefficient).
    fn pauli_terms(&self) -> Vec<(Vec<usize>, f64)> {
        encoding::pauli_terms(&self.inner)
            .into_iter()
            .map(|t| (t.z_qubits, t.coeff))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Hamiltonian(n_qubits={}, lam={})",
            self.inner.n_qubits(),
            self.inner.lambda()
        )
    }
}

fn histogram_to_py<'py>(
    py: Python<'py>,
    histogram: &BTreeMap<u64, u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (&b, &c) in histogram {
        d.set_item(b, c)?;
    }
    Ok(d)
}

/// Statevector amplitudes of the real-amplitude ansatz at given angles.
#[pyfunction]
fn prepare_state(n_qubits: usize, layers: usize, params: Vec<f64>) -> PyResult<Vec<f64>> {
    let spec = AnsatzSpec::new(n_qubits, layers).map_err(err)?;
    let state = simulator::prepare(&spec, &ParamVector(params)).map_err(err)?;
    Ok(state.amplitudes().to_vec())
}

/// Sample measurement outcomes; returns {basis_index: count}.
#[pyfunction]
fn sample_state<'py>(
    py: Python<'py>,
    n_qubits: usize,
    layers: usize,
    params: Vec<f64>,
    shots: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = AnsatzSpec::new(n_qubits, layers).map_err(err)?;
    let state = simulator::prepare(&spec, &ParamVector(params)).map_err(err)?;
    let histogram = simulator::sample(&state, shots, seed).map_err(err)?;
    histogram_to_py(py, &histogram)
}

/// CVaR of a finite energy sample (Eq.-style tail mean).
#[pyfunction]
fn cvar_from_samples(energies: Vec<f64>, epsilon: f64) -> PyResult<f64> {
    vqe::cvar_from_samples(&energies, epsilon).map_err(err)
}

/// Infinite-shot CVaR of a discrete distribution.
#[pyfunction]
fn cvar_exact(probabilities: Vec<f64>, energies: Vec<f64>, epsilon: f64) -> PyResult<f64> {
    vqe::cvar_exact(&probabilities, &energies, epsilon).map_err(err)
}

/// Squared Bhattacharyya coefficient between two outcome distributions.
#[pyfunction]
fn fidelity_upper_bound(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    analysis::fidelity_upper_bound(&p, &q).map_err(err)
}

/// Generate a seeded synthetic instance with default generator settings.
#[pyfunction]
fn generate_instance(seed: u64, flights: usize, gates: usize) -> PyResult<PyInstance> {
    let inner = model::generate_instance(seed, flights, gates, &GeneratorParams::default())
        .map_err(err)?;
    Ok(PyInstance { inner })
}

/// Run CVaR-VQE. `shots=None` uses the exact Born distribution. Returns a
/// dict with final_params, final_cvar, iterations, optimizer_status,
/// best_sampled and the per-evaluation (cvar, best_energy_so_far) trace.
#[pyfunction]
#[pyo3(signature = (hamiltonian, layers = 2, epsilon = 0.5, shots = None,
                    max_iterations = None, optimizer = "cobyla", rng_seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_vqe<'py>(
    py: Python<'py>,
    hamiltonian: &PyHamiltonian,
    layers: usize,
    epsilon: f64,
    shots: Option<u64>,
    max_iterations: Option<usize>,
    optimizer: &str,
    rng_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = AnsatzSpec::new(hamiltonian.inner.n_qubits(), layers).map_err(err)?;
    let config = CvarConfig {
        epsilon,
        shots: match shots {
            None => ShotMode::Exact,
            Some(k) => ShotMode::Shots(k),
        },
        max_iterations: max_iterations.unwrap_or(50 * spec.n_qubits),
        optimizer: optimizer.parse::<OptimizerKind>().map_err(err)?,
        rng_seed,
    };
    let result = vqe::optimize(&hamiltonian.inner, &spec, &config).map_err(err)?;

    let out = PyDict::new(py);
    out.set_item("final_params", result.final_params.0.clone())?;
    out.set_item("final_cvar", result.final_cvar)?;
    out.set_item("iterations", result.trace.len())?;
    out.set_item("optimizer_status", result.optimizer_status)?;
    out.set_item("best_sampled", result.best_sampled)?;
    out.set_item("final_probabilities", result.final_probabilities)?;
    let trace: Vec<(usize, f64, f64)> = result
        .trace
        .records
        .iter()
        .map(|r| (r.iteration, r.cvar, r.best_energy_so_far))
        .collect();
    out.set_item("trace", trace)?;
    Ok(out)
}

/// Sample a fixed-parameter state and score it against the exact ground
/// states of the Hamiltonian.
#[pyfunction]
#[pyo3(signature = (hamiltonian, params, layers = 2, shots = 10000, seed = 0))]
fn run_inference<'py>(
    py: Python<'py>,
    hamiltonian: &PyHamiltonian,
    params: Vec<f64>,
    layers: usize,
    shots: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = AnsatzSpec::new(hamiltonian.inner.n_qubits(), layers).map_err(err)?;
    let result = vqe::inference(&hamiltonian.inner, &spec, &ParamVector(params), shots, seed)
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("shots", result.shots)?;
    out.set_item("histogram", histogram_to_py(py, &result.histogram)?)?;
    out.set_item("ground_energy", result.ground_energy)?;
    out.set_item("ground_mass_empirical", result.ground_mass_empirical)?;
    out.set_item("ground_mass_exact", result.ground_mass_exact)?;
    Ok(out)
}

#[pymodule(name = "fga_vqe")]
fn fga_vqe_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_state, m)?)?;
    m.add_function(wrap_pyfunction!(sample_state, m)?)?;
    m.add_function(wrap_pyfunction!(cvar_from_samples, m)?)?;
    m.add_function(wrap_pyfunction!(cvar_exact, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_vqe, m)?)?;
    m.add_function(wrap_pyfunction!(run_inference, m)?)?;
    Ok(())
}
