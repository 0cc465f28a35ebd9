//! CVaR cost evaluation, the derivative-free optimization loop, and
//! inference runs at fixed parameters.
//!
//! One "iteration" is one cost-function evaluation; the trace records
//! every evaluation. In shot mode each evaluation draws its own sampling
//! seed from the run seed and the evaluation index, so full runs are
//! reproducible bit-exactly.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::DiagonalHamiltonian;
use crate::error::{FgaError, Result};
use crate::simulator::{prepare, sample, AnsatzSpec, ParamVector, Statevector};

/// Probability floor below which a basis state is treated as absent when
/// scanning an exact distribution for the lowest observed energy.
const SUPPORT_EPS: f64 = 1e-12;

/// Measurement budget per cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    /// Infinite-shot limit: CVaR over the exact Born distribution.
    Exact,
    /// Finite-shot estimate from `K` projective measurements.
    Shots(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Cobyla,
    NelderMead,
}

impl std::str::FromStr for OptimizerKind {
    type Err = FgaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cobyla" => Ok(OptimizerKind::Cobyla),
            "nelder-mead" => Ok(OptimizerKind::NelderMead),
            other => Err(FgaError::InvalidParameter(format!(
                "unknown optimizer '{other}' (expected cobyla or nelder-mead)"
            ))),
        }
    }
}

/// Configuration of one CVaR-VQE run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarConfig {
    /// Tail fraction in (0, 1].
    pub epsilon: f64,
    pub shots: ShotMode,
    /// Cap on cost-function evaluations.
    pub max_iterations: usize,
    pub optimizer: OptimizerKind,
    /// Master seed: initialization and per-evaluation sampling seeds are
    /// derived from it.
    pub rng_seed: u64,
}

impl CvarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(FgaError::InvalidParameter(format!(
                "epsilon must be in (0, 1], got {}",
                self.epsilon
            )));
        }
        if let ShotMode::Shots(0) = self.shots {
            return Err(FgaError::InvalidParameter("shots must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(FgaError::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mean of the `ceil(epsilon * K)` smallest energies (finite-sample CVaR).
pub fn cvar_from_samples(energies: &[f64], epsilon: f64) -> Result<f64> {
    if energies.is_empty() {
        return Err(FgaError::InvalidParameter(
            "cvar_from_samples needs at least one energy".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(FgaError::InvalidParameter(format!(
            "epsilon must be in (0, 1], got {epsilon}"
        )));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp); // stable: ties keep input order
    let take = (epsilon * energies.len() as f64).ceil() as usize;
    let take = take.clamp(1, energies.len());
    Ok(sorted[..take].iter().sum::<f64>() / take as f64)
}

/// CVaR of a discrete distribution with fractional weighting of the
/// boundary state: sort states by energy (ties by index), accumulate
/// probability mass up to `epsilon`, divide the weighted energy sum by
/// `epsilon`. Equals the expectation at `epsilon = 1`.
pub fn cvar_exact(probabilities: &[f64], energies: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(FgaError::InvalidParameter(format!(
            "epsilon must be in (0, 1], got {epsilon}"
        )));
    }
    if probabilities.len() != energies.len() {
        return Err(FgaError::DimensionMismatch(format!(
            "{} probabilities vs {} energies",
            probabilities.len(),
            energies.len()
        )));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(FgaError::InvalidParameter(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut remaining = epsilon;
    let mut weighted = 0.0;
    for &i in &order {
        let w = probabilities[i].min(remaining);
        weighted += w * energies[i];
        remaining -= w;
        if remaining <= 0.0 {
            break;
        }
    }
    Ok(weighted / epsilon)
}

/// Parameter initialization strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Angles i.i.d. uniform on [-pi, pi].
    Uniform,
    /// All angles zero (prepares |0...0>).
    Zeros,
}

impl std::str::FromStr for InitStrategy {
    type Err = FgaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitStrategy::Uniform),
            "zeros" => Ok(InitStrategy::Zeros),
            other => Err(FgaError::InvalidParameter(format!(
                "unknown init strategy '{other}' (expected uniform or zeros)"
            ))),
        }
    }
}

/// Seeded initial parameter vector.
pub fn init_params(spec: &AnsatzSpec, strategy: InitStrategy, seed: u64) -> ParamVector {
    match strategy {
        InitStrategy::Zeros => ParamVector(vec![0.0; spec.n_params()]),
        InitStrategy::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ParamVector(
                (0..spec.n_params())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect(),
            )
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a stream-specific seed from the master seed.
fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// CVaR cost of one parameter vector under the configured shot mode.
/// Deterministic given `config.rng_seed`.
pub fn evaluate_cost(
    hamiltonian: &DiagonalHamiltonian,
    spec: &AnsatzSpec,
    params: &ParamVector,
    config: &CvarConfig,
) -> Result<f64> {
    config.validate()?;
    let state = prepare(spec, params)?;
    match config.shots {
        ShotMode::Exact => {
            cvar_exact(&state.probabilities(), hamiltonian.diagonal(), config.epsilon)
        }
        ShotMode::Shots(k) => {
            let energies = sampled_energies(hamiltonian, &state, k, config.rng_seed)?;
            cvar_from_samples(&energies, config.epsilon)
        }
    }
}

/// Samples `shots` basis states and maps them through the diagonal
/// oracle. The multiset is emitted in basis-index order, so stable
/// sorting breaks energy ties by bitstring index.
fn sampled_energies(
    hamiltonian: &DiagonalHamiltonian,
    state: &Statevector,
    shots: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let histogram = sample(state, shots, seed)?;
    let mut energies = Vec::with_capacity(shots as usize);
    for (&b, &count) in &histogram {
        let e = hamiltonian.energy(b);
        energies.extend(std::iter::repeat(e).take(count as usize));
    }
    Ok(energies)
}

/// One recorded cost evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Evaluation index, starting at 0.
    pub iteration: usize,
    pub params: Vec<f64>,
    pub cvar: f64,
    /// Lowest single-state energy observed up to and including this
    /// evaluation (sampled energy in shot mode, support minimum in exact
    /// mode).
    pub best_energy_so_far: f64,
}

/// Full optimization trace, one record per cost evaluation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VqeTrace {
    pub records: Vec<TraceRecord>,
}

impl VqeTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn min_cvar(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.cvar)
            .min_by(f64::total_cmp)
    }
}

/// Everything a VQE run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VqeRunResult {
    pub trace: VqeTrace,
    pub final_params: ParamVector,
    pub final_cvar: f64,
    /// Measurement histogram at the final parameters (shot mode only).
    pub final_histogram: Option<BTreeMap<u64, u64>>,
    /// Exact Born distribution at the final parameters.
    pub final_probabilities: Vec<f64>,
    /// Lowest-energy basis state ever observed and its energy.
    pub best_sampled: Option<(u64, f64)>,
    /// Optimizer termination status, informational.
    pub optimizer_status: String,
}

/// Runs the CVaR-VQE loop from a seeded uniform initial point.
pub fn optimize(
    hamiltonian: &DiagonalHamiltonian,
    spec: &AnsatzSpec,
    config: &CvarConfig,
) -> Result<VqeRunResult> {
    let x0 = init_params(
        spec,
        InitStrategy::Uniform,
        derive_seed(config.rng_seed, u64::MAX),
    );
    optimize_from(hamiltonian, spec, config, &x0)
}

/// Runs the CVaR-VQE loop from an explicit initial parameter vector.
pub fn optimize_from(
    hamiltonian: &DiagonalHamiltonian,
    spec: &AnsatzSpec,
    config: &CvarConfig,
    x0: &ParamVector,
) -> Result<VqeRunResult> {
    config.validate()?;
    if spec.n_qubits != hamiltonian.n_qubits() {
        return Err(FgaError::DimensionMismatch(format!(
            "ansatz has {} qubits, Hamiltonian has {}",
            spec.n_qubits,
            hamiltonian.n_qubits()
        )));
    }
    if x0.len() != spec.n_params() {
        return Err(FgaError::DimensionMismatch(format!(
            "initial vector has {} parameters, ansatz needs {}",
            x0.len(),
            spec.n_params()
        )));
    }

    let trace: RefCell<VqeTrace> = RefCell::new(VqeTrace::default());
    let best_state: RefCell<Option<(u64, f64)>> = RefCell::new(None);

    let cost = |x: &[f64]| -> f64 {
        let params = ParamVector(x.to_vec());
        let state = prepare(spec, &params).expect("parameter length checked above");
        let iteration = trace.borrow().len();
        let (cvar, observed) = match config.shots {
            ShotMode::Exact => {
                let probs = state.probabilities();
                let diag = hamiltonian.diagonal();
                let cvar = cvar_exact(&probs, diag, config.epsilon)
                    .expect("validated distribution");
                let observed = probs
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| p > SUPPORT_EPS)
                    .map(|(b, _)| (b as u64, diag[b]))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                (cvar, observed)
            }
            ShotMode::Shots(k) => {
                let seed = derive_seed(config.rng_seed, iteration as u64);
                let histogram = sample(&state, k, seed).expect("shots >= 1");
                let mut energies = Vec::with_capacity(k as usize);
                let mut observed: Option<(u64, f64)> = None;
                for (&b, &count) in &histogram {
                    let e = hamiltonian.energy(b);
                    if observed.map_or(true, |(_, be)| e < be) {
                        observed = Some((b, e));
                    }
                    energies.extend(std::iter::repeat(e).take(count as usize));
                }
                let cvar =
                    cvar_from_samples(&energies, config.epsilon).expect("non-empty sample");
                (cvar, observed)
            }
        };
        if let Some((b, e)) = observed {
            let mut best = best_state.borrow_mut();
            if best.map_or(true, |(_, be)| e < be) {
                *best = Some((b, e));
            }
        }
        let best_energy_so_far = best_state.borrow().map(|(_, e)| e).unwrap_or(f64::NAN);
        trace.borrow_mut().records.push(TraceRecord {
            iteration,
            params: x.to_vec(),
            cvar,
            best_energy_so_far,
        });
        cvar
    };

    let (final_x, final_cvar, status) = match config.optimizer {
        OptimizerKind::Cobyla => run_cobyla(&cost, x0.angles(), config.max_iterations),
        OptimizerKind::NelderMead => run_nelder_mead(&cost, x0.angles(), config.max_iterations),
    };

    let final_params = ParamVector(final_x);
    let final_state = prepare(spec, &final_params)?;
    let final_probabilities = final_state.probabilities();
    let final_histogram = match config.shots {
        ShotMode::Exact => None,
        ShotMode::Shots(k) => Some(sample(
            &final_state,
            k,
            derive_seed(config.rng_seed, u64::MAX - 1),
        )?),
    };

    Ok(VqeRunResult {
        trace: trace.into_inner(),
        final_params,
        final_cvar,
        final_histogram,
        final_probabilities,
        best_sampled: best_state.into_inner(),
        optimizer_status: status,
    })
}

/// COBYLA (linear-approximation trust region), the default optimizer.
fn run_cobyla<F: Fn(&[f64]) -> f64>(
    cost: &F,
    x0: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64, String) {
    use cobyla::{minimize, RhoBeg, StopTols};
    let bounds: Vec<(f64, f64)> = x0
        .iter()
        .map(|_| (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI))
        .collect();
    let objective = |x: &[f64], _user: &mut ()| cost(x);
    let cons: Vec<&dyn cobyla::Func<()>> = vec![];
    let stop = StopTols {
        ftol_abs: 1e-10,
        ..StopTols::default()
    };
    match minimize(
        objective,
        x0,
        &bounds,
        &cons,
        (),
        max_evals,
        RhoBeg::All(0.5),
        Some(stop),
    ) {
        Ok((status, x, fval)) => (x, fval, format!("{status:?}")),
        Err((status, x, fval)) => (x, fval, format!("failed: {status:?}")),
    }
}

/// Nelder-Mead downhill simplex, the fallback optimizer. Deterministic;
/// initial simplex is `x0` plus a 0.5 rad step per coordinate.
fn run_nelder_mead<F: Fn(&[f64]) -> f64>(
    cost: &F,
    x0: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64, String) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink
    const STEP: f64 = 0.5;
    const FTOL: f64 = 1e-12;

    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        cost(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        if evals.get() >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += STEP;
        let f = eval(&x);
        simplex.push((x, f));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

    let status = loop {
        if evals.get() >= max_evals {
            break "MaxEvalReached";
        }
        if simplex.len() == n + 1 && (simplex[n].1 - simplex[0].1).abs() <= FTOL {
            break "FtolReached";
        }
        if simplex.len() < n + 1 {
            break "MaxEvalReached"; // budget ran out while building the simplex
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected: Vec<f64> = (0..n)
            .map(|d| centroid[d] + ALPHA * (centroid[d] - worst.0[d]))
            .collect();
        let f_r = eval(&reflected);

        if f_r < simplex[0].1 {
            if evals.get() < max_evals {
                let expanded: Vec<f64> = (0..n)
                    .map(|d| centroid[d] + GAMMA * (reflected[d] - centroid[d]))
                    .collect();
                let f_e = eval(&expanded);
                simplex[n] = if f_e < f_r {
                    (expanded, f_e)
                } else {
                    (reflected, f_r)
                };
            } else {
                simplex[n] = (reflected, f_r);
            }
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
        } else {
            if evals.get() >= max_evals {
                break "MaxEvalReached";
            }
            let contracted: Vec<f64> = (0..n)
                .map(|d| centroid[d] + RHO * (worst.0[d] - centroid[d]))
                .collect();
            let f_c = eval(&contracted);
            if f_c < worst.1 {
                simplex[n] = (contracted, f_c);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    if evals.get() >= max_evals {
                        break;
                    }
                    for d in 0..n {
                        v.0[d] = best[d] + SIGMA * (v.0[d] - best[d]);
                    }
                    v.1 = eval(&v.0);
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    };

    let (x, f) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex non-empty");
    (x, f, status.to_string())
}

/// Outcome of an inference run at fixed parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceResult {
    pub shots: u64,
    pub histogram: BTreeMap<u64, u64>,
    /// Per observed basis state: decoded assignment, energy, feasibility.
    pub records: Vec<InferenceRecord>,
    /// Global minimum of the diagonal.
    pub ground_energy: f64,
    /// Sampled relative frequency on minimal-energy basis states.
    pub ground_mass_empirical: f64,
    /// Exact Born mass on minimal-energy basis states.
    pub ground_mass_exact: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub bitstring: u64,
    pub count: u64,
    pub frequency: f64,
    pub assignment: Vec<usize>,
    pub energy: f64,
    pub feasible: bool,
}

/// Prepares the state at fixed parameters and measures it `shots` times.
pub fn inference(
    hamiltonian: &DiagonalHamiltonian,
    spec: &AnsatzSpec,
    params: &ParamVector,
    shots: u64,
    seed: u64,
) -> Result<InferenceResult> {
    if spec.n_qubits != hamiltonian.n_qubits() {
        return Err(FgaError::DimensionMismatch(format!(
            "ansatz has {} qubits, Hamiltonian has {}",
            spec.n_qubits,
            hamiltonian.n_qubits()
        )));
    }
    let state = prepare(spec, params)?;
    let histogram = sample(&state, shots, seed)?;
    let (ground_energy, ground_states) = hamiltonian.ground_states();

    let records: Vec<InferenceRecord> = histogram
        .iter()
        .map(|(&b, &count)| InferenceRecord {
            bitstring: b,
            count,
            frequency: count as f64 / shots as f64,
            assignment: hamiltonian.decode(b).gate_of,
            energy: hamiltonian.energy(b),
            feasible: hamiltonian.is_feasible_state(b),
        })
        .collect();

    let ground_mass_empirical = ground_states
        .iter()
        .map(|b| histogram.get(b).copied().unwrap_or(0))
        .sum::<u64>() as f64
        / shots as f64;
    let probs = state.probabilities();
    let ground_mass_exact = ground_states.iter().map(|&b| probs[b as usize]).sum();

    Ok(InferenceResult {
        shots,
        histogram,
        records,
        ground_energy,
        ground_mass_empirical,
        ground_mass_exact,
    })
}

/// Writes the trace as CSV with columns `iteration,cvar,best_energy_so_far`.
pub fn write_trace_csv<P: AsRef<Path>>(trace: &VqeTrace, path: P) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| FgaError::Io(e.into()))?;
    writer
        .write_record(["iteration", "cvar", "best_energy_so_far"])
        .map_err(io_err)?;
    for r in &trace.records {
        writer
            .write_record([
                r.iteration.to_string(),
                format!("{}", r.cvar),
                format!("{}", r.best_energy_so_far),
            ])
            .map_err(io_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the full per-iteration parameter vectors as a JSON sidecar.
pub fn write_trace_params_json<P: AsRef<Path>>(trace: &VqeTrace, path: P) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&trace.records)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn io_err(e: csv::Error) -> FgaError {
    FgaError::Io(e.into())
}
