//! Command-line front end: instance generation, exact solving, encoding
//! exports, CVaR-VQE runs, inference and distribution analysis with
//! stable on-disk outputs.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fga_vqe::analysis::{
    approximation_ratio, fidelity_upper_bound, histogram_to_distribution, top_k,
    DistributionSummary,
};
use fga_vqe::encoding::{
    build_hamiltonian, default_lambda, pauli_terms, write_diagonal, write_pauli_terms,
    DiagonalHamiltonian, QubitLayout,
};
use fga_vqe::error::FgaError;
use fga_vqe::model::{
    brute_force_solve, generate_instance, overlap_set, read_instance, write_instance,
    BruteForceOutcome, FgaInstance, GeneratorParams, DEFAULT_ENUMERATION_CAP,
};
use fga_vqe::simulator::{prepare, AnsatzSpec, ParamVector};
use fga_vqe::vqe::{
    cvar_from_samples, inference, optimize, write_trace_csv, write_trace_params_json, CvarConfig,
    InferenceResult, OptimizerKind, ShotMode, VqeRunResult,
};

#[derive(Parser)]
#[command(
    name = "fga",
    about = "Flight gate assignment via CVaR-VQE simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic instance and write it to a JSON file.
    Generate(GenerateArgs),
    /// Solve an instance exactly by exhaustive enumeration.
    SolveExact(SolveExactArgs),
    /// Build the diagonal Hamiltonian and export Pauli terms / diagonal.
    Encode(EncodeArgs),
    /// Run the full CVaR-VQE pipeline and write a result directory.
    Vqe(VqeArgs),
    /// Sample a state at fixed parameters and analyze the histogram.
    Inference(InferenceArgs),
    /// Summarize a measurement histogram against the exact oracle.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    flights: usize,
    #[arg(long)]
    gates: usize,
    /// Optional JSON file with generator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveExactArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Cap on |G|^|F| for the enumeration.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Penalty weight; defaults to the instance's safe bound.
    #[arg(long)]
    lambda: Option<f64>,
    /// Write the Pauli-Z expansion as JSON.
    #[arg(long)]
    pauli_out: Option<PathBuf>,
    /// Write the full diagonal as a binary dump (Q <= 20).
    #[arg(long)]
    diagonal_out: Option<PathBuf>,
}

#[derive(Args)]
struct VqeArgs {
    /// JSON run configuration; replaces all other flags.
    #[arg(long, conflicts_with_all = ["instance", "seed"])]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generator seed (used when no instance file is given).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    flights: usize,
    #[arg(long, default_value_t = 4)]
    gates: usize,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Measurements per cost evaluation.
    #[arg(long, default_value_t = 1000, conflicts_with = "exact")]
    shots: u64,
    /// Use the exact Born distribution instead of finite shots.
    #[arg(long)]
    exact: bool,
    /// Cap on cost evaluations; defaults to 50 * Q.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, default_value = "cobyla")]
    optimizer: OptimizerKind,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Shots for the final inference pass.
    #[arg(long, default_value_t = 10000)]
    inference_shots: u64,
    /// Independent seeded restarts, run in parallel.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferenceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// JSON file holding the parameter vector (a plain array of angles).
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 10000)]
    shots: u64,
    /// CVaR tail fraction reported for the sampled energies.
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Histogram CSV as written by `vqe` / `inference`.
    #[arg(long)]
    histogram: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Output summary JSON path.
    #[arg(long)]
    out: PathBuf,
}

/// Resolved VQE run configuration; also accepted as a JSON file with
/// identical keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    /// Instance file; when absent the generator block is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    layers: usize,
    epsilon: f64,
    /// `null` means exact mode.
    shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iterations: Option<usize>,
    optimizer: OptimizerKind,
    rng_seed: u64,
    inference_shots: u64,
    restarts: usize,
    top: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeneratorSpec {
    seed: u64,
    flights: usize,
    gates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<GeneratorParams>,
}

/// Keeps the inference sampling stream disjoint from the optimizer's
/// per-evaluation streams.
const INFERENCE_SEED_OFFSET: u64 = 0x1ea7_5eed;

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                FgaError::EnumerationCapExceeded { .. } | FgaError::TooManyQubits { .. } => {
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run() -> Result<(), FgaError> {
    match Cli::parse().command {
        Command::Generate(args) => cmd_generate(args),
        Command::SolveExact(args) => cmd_solve_exact(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Vqe(args) => cmd_vqe(args),
        Command::Inference(args) => cmd_inference(args),
        Command::Analyze(args) => cmd_analyze(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), FgaError> {
    let params = match &args.params {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => GeneratorParams::default(),
    };
    let instance = generate_instance(args.seed, args.flights, args.gates, &params)?;
    write_instance(&instance, &args.out)?;
    let layout = QubitLayout::new(args.flights, args.gates);
    println!(
        "wrote {}: |F| = {}, |G| = {}, M = {}, Q = {}, |O| = {}",
        args.out.display(),
        args.flights,
        args.gates,
        layout.bits_per_flight,
        layout.n_qubits,
        overlap_set(&instance).len()
    );
    Ok(())
}

fn bitstring_display(b: u64, n_qubits: usize) -> String {
    // z_0 ... z_{Q-1} with qubit q at position q
    (0..n_qubits)
        .map(|q| if (b >> q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn cmd_solve_exact(args: SolveExactArgs) -> Result<(), FgaError> {
    let instance = read_instance(&args.instance)?;
    let layout = QubitLayout::new(instance.n_flights(), instance.n_gates());
    match brute_force_solve(&instance, args.cap)? {
        BruteForceOutcome::Infeasible => {
            println!("no feasible assignment exists");
        }
        BruteForceOutcome::Solved { min_cost, optima } => {
            println!("minimum cost: {min_cost}");
            println!("optimal assignments ({}):", optima.len());
            for a in &optima {
                println!("  gates {:?}", a.gate_of);
            }
            if layout.n_qubits <= 20 {
                let h = build_hamiltonian(&instance, default_lambda(&instance))?;
                let (_, states) = h.ground_states();
                println!("optimal basis states ({}):", states.len());
                for b in states {
                    println!("  |{}> (index {b})", bitstring_display(b, layout.n_qubits));
                }
            }
        }
    }
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<(), FgaError> {
    let instance = read_instance(&args.instance)?;
    let lambda = args.lambda.unwrap_or_else(|| default_lambda(&instance));
    let h = build_hamiltonian(&instance, lambda)?;
    println!(
        "Q = {}, M = {}, lambda = {lambda}",
        h.n_qubits(),
        h.layout().bits_per_flight
    );
    if let Some(path) = &args.pauli_out {
        let terms = pauli_terms(&h);
        write_pauli_terms(&terms, path)?;
        println!("wrote {} Pauli-Z terms to {}", terms.len(), path.display());
    }
    if let Some(path) = &args.diagonal_out {
        write_diagonal(&h, path)?;
        println!("wrote diagonal to {}", path.display());
    }
    Ok(())
}

fn load_or_generate_instance(config: &RunConfig) -> Result<FgaInstance, FgaError> {
    match (&config.instance, &config.generator) {
        (Some(path), _) => read_instance(path),
        (None, Some(g)) => generate_instance(
            g.seed,
            g.flights,
            g.gates,
            g.params.as_ref().unwrap_or(&GeneratorParams::default()),
        ),
        (None, None) => Err(FgaError::InvalidParameter(
            "config needs an instance file or a generator block".into(),
        )),
    }
}

fn write_json<T: Serialize, P: AsRef<Path>>(value: &T, path: P) -> Result<(), FgaError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_histogram_csv<P: AsRef<Path>>(
    histogram: &BTreeMap<u64, u64>,
    h: &DiagonalHamiltonian,
    path: P,
) -> Result<(), FgaError> {
    let shots: u64 = histogram.values().sum();
    let mut out = String::from("bitstring_index,bitstring,count,frequency,energy,feasible\n");
    for (&b, &count) in histogram {
        out.push_str(&format!(
            "{b},{},{count},{},{},{}\n",
            bitstring_display(b, h.n_qubits()),
            count as f64 / shots as f64,
            h.energy(b),
            h.is_feasible_state(b)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunSummary {
    lambda: f64,
    n_qubits: usize,
    final_cvar: f64,
    optimizer_status: String,
    iterations: usize,
    best_sampled: Option<(u64, f64)>,
    /// Summary of the final-parameter inference histogram.
    distribution: DistributionSummary,
    ground_mass_empirical: f64,
    ground_mass_exact: f64,
    /// Bhattacharyya-squared bound between the sampled and exact
    /// final-state distributions.
    fidelity_bound_sampled_vs_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_min_cost: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    approximation_ratio: Option<f64>,
}

fn summarize_run(
    instance: &FgaInstance,
    h: &DiagonalHamiltonian,
    lambda: f64,
    result: &VqeRunResult,
    inf: &InferenceResult,
    top: usize,
) -> Result<RunSummary, FgaError> {
    let empirical = histogram_to_distribution(&inf.histogram, h.n_qubits())?;
    let distribution = top_k(&empirical, h, top)?;
    let fidelity = fidelity_upper_bound(&empirical, &result.final_probabilities)?;

    // oracle metrics only when the enumeration is cheap
    let total = (instance.n_gates() as u128).pow(instance.n_flights() as u32);
    let (oracle_min_cost, approx) = if total <= 1 << 20 {
        match brute_force_solve(instance, 1 << 20)? {
            BruteForceOutcome::Solved { min_cost, .. } => {
                let worst = worst_feasible_cost(h);
                let ratio = match worst {
                    Some(max) if (max as f64) > (min_cost as f64) => Some(approximation_ratio(
                        &empirical,
                        h,
                        min_cost as f64,
                        max as f64,
                    )?),
                    _ => None,
                };
                (Some(min_cost), ratio)
            }
            BruteForceOutcome::Infeasible => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(RunSummary {
        lambda,
        n_qubits: h.n_qubits(),
        final_cvar: result.final_cvar,
        optimizer_status: result.optimizer_status.clone(),
        iterations: result.trace.len(),
        best_sampled: result.best_sampled,
        distribution,
        ground_mass_empirical: inf.ground_mass_empirical,
        ground_mass_exact: inf.ground_mass_exact,
        fidelity_bound_sampled_vs_exact: fidelity,
        oracle_min_cost,
        approximation_ratio: approx,
    })
}

fn worst_feasible_cost(h: &DiagonalHamiltonian) -> Option<i64> {
    let dim = 1u64 << h.n_qubits();
    (0..dim)
        .filter(|&b| h.is_feasible_state(b))
        .map(|b| h.energy(b) as i64)
        .max()
}

fn cmd_vqe(args: VqeArgs) -> Result<(), FgaError> {
    let out_dir = args.out.clone();
    let config: RunConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => RunConfig {
            instance: args.instance.clone(),
            generator: match args.instance {
                Some(_) => None,
                None => Some(GeneratorSpec {
                    seed: args.seed.ok_or_else(|| {
                        FgaError::InvalidParameter(
                            "need --instance, --seed (generator) or --config".into(),
                        )
                    })?,
                    flights: args.flights,
                    gates: args.gates,
                    params: None,
                }),
            },
            lambda: args.lambda,
            layers: args.layers,
            epsilon: args.epsilon,
            shots: if args.exact { None } else { Some(args.shots) },
            max_iterations: args.max_iterations,
            optimizer: args.optimizer,
            rng_seed: args.rng_seed,
            inference_shots: args.inference_shots,
            restarts: args.restarts,
            top: args.top,
        },
    };
    if config.restarts == 0 {
        return Err(FgaError::InvalidParameter("restarts must be >= 1".into()));
    }

    let instance = load_or_generate_instance(&config)?;
    let lambda = config.lambda.unwrap_or_else(|| default_lambda(&instance));
    let h = build_hamiltonian(&instance, lambda)?;
    let spec = AnsatzSpec::new(h.n_qubits(), config.layers)?;
    let max_iterations = config.max_iterations.unwrap_or(50 * h.n_qubits());

    std::fs::create_dir_all(&out_dir)?;
    write_json(&config, out_dir.join("config.json"))?;
    write_instance(&instance, out_dir.join("instance.json"))?;

    let run_one = |seed: u64| -> Result<(VqeRunResult, InferenceResult), FgaError> {
        let cvar_config = CvarConfig {
            epsilon: config.epsilon,
            shots: match config.shots {
                None => ShotMode::Exact,
                Some(k) => ShotMode::Shots(k),
            },
            max_iterations,
            optimizer: config.optimizer,
            rng_seed: seed,
        };
        let result = optimize(&h, &spec, &cvar_config)?;
        let inf = inference(
            &h,
            &spec,
            &result.final_params,
            config.inference_shots,
            seed.wrapping_add(INFERENCE_SEED_OFFSET),
        )?;
        Ok((result, inf))
    };

    let write_run = |dir: &Path,
                     result: &VqeRunResult,
                     inf: &InferenceResult|
     -> Result<RunSummary, FgaError> {
        std::fs::create_dir_all(dir)?;
        write_trace_csv(&result.trace, dir.join("trace.csv"))?;
        write_trace_params_json(&result.trace, dir.join("trace_params.json"))?;
        write_json(&result.final_params.0, dir.join("params.json"))?;
        write_json(
            &serde_json::json!({
                "final_cvar": result.final_cvar,
                "optimizer_status": result.optimizer_status,
                "iterations": result.trace.len(),
                "best_sampled": result.best_sampled,
                "final_params": result.final_params.0,
            }),
            dir.join("result.json"),
        )?;
        write_histogram_csv(&inf.histogram, &h, dir.join("histogram.csv"))?;
        let summary = summarize_run(&instance, &h, lambda, result, inf, config.top)?;
        write_json(&summary, dir.join("summary.json"))?;
        Ok(summary)
    };

    if config.restarts == 1 {
        let (result, inf) = run_one(config.rng_seed)?;
        let summary = write_run(&out_dir, &result, &inf)?;
        println!(
            "final CVaR {} after {} evaluations; ground mass {:.4} (exact {:.4})",
            summary.final_cvar,
            summary.iterations,
            summary.ground_mass_empirical,
            summary.ground_mass_exact
        );
    } else {
        use rayon::prelude::*;
        let runs: Vec<Result<(VqeRunResult, InferenceResult), FgaError>> = (0..config.restarts)
            .into_par_iter()
            .map(|r| run_one(config.rng_seed.wrapping_add(r as u64)))
            .collect();
        let mut aggregate = Vec::new();
        for (r, run) in runs.into_iter().enumerate() {
            let (result, inf) = run?;
            let dir = out_dir.join(format!("restart_{r:03}"));
            let summary = write_run(&dir, &result, &inf)?;
            aggregate.push(serde_json::json!({
                "restart": r,
                "rng_seed": config.rng_seed.wrapping_add(r as u64),
                "final_cvar": summary.final_cvar,
                "iterations": summary.iterations,
                "best_sampled": summary.best_sampled,
                "ground_mass_empirical": summary.ground_mass_empirical,
                "ground_mass_exact": summary.ground_mass_exact,
            }));
        }
        write_json(&aggregate, out_dir.join("summary.json"))?;
        println!("wrote {} restarts to {}", config.restarts, out_dir.display());
    }
    Ok(())
}

fn cmd_inference(args: InferenceArgs) -> Result<(), FgaError> {
    let instance = read_instance(&args.instance)?;
    let lambda = args.lambda.unwrap_or_else(|| default_lambda(&instance));
    let h = build_hamiltonian(&instance, lambda)?;
    let spec = AnsatzSpec::new(h.n_qubits(), args.layers)?;
    let angles: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&args.params)?)?;
    if angles.len() != spec.n_params() {
        return Err(FgaError::DimensionMismatch(format!(
            "parameter file has {} angles, ansatz needs {}",
            angles.len(),
            spec.n_params()
        )));
    }
    let params = ParamVector(angles);
    let inf = inference(&h, &spec, &params, args.shots, args.seed)?;

    std::fs::create_dir_all(&args.out)?;
    write_histogram_csv(&inf.histogram, &h, args.out.join("histogram.csv"))?;

    let empirical = histogram_to_distribution(&inf.histogram, h.n_qubits())?;
    let exact = prepare(&spec, &params)?.probabilities();
    let sampled: Vec<f64> = inf
        .histogram
        .iter()
        .flat_map(|(&b, &c)| std::iter::repeat_n(h.energy(b), c as usize))
        .collect();
    let summary = serde_json::json!({
        "lambda": lambda,
        "n_qubits": h.n_qubits(),
        "shots": args.shots,
        "epsilon": args.epsilon,
        "cvar": cvar_from_samples(&sampled, args.epsilon)?,
        "ground_energy": inf.ground_energy,
        "ground_mass_empirical": inf.ground_mass_empirical,
        "ground_mass_exact": inf.ground_mass_exact,
        "fidelity_bound_sampled_vs_exact": fidelity_upper_bound(&empirical, &exact)?,
        "distribution": top_k(&empirical, &h, args.top)?,
    });
    write_json(&summary, args.out.join("summary.json"))?;
    println!(
        "ground mass {:.4} (exact {:.4}); wrote {}",
        inf.ground_mass_empirical,
        inf.ground_mass_exact,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), FgaError> {
    let instance = read_instance(&args.instance)?;
    let lambda = args.lambda.unwrap_or_else(|| default_lambda(&instance));
    let h = build_hamiltonian(&instance, lambda)?;

    let text = std::fs::read_to_string(&args.histogram)?;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("bitstring_index") {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(idx), Some(count)) = (fields.next(), fields.nth(1)) else {
            return Err(FgaError::MalformedInstance(format!(
                "histogram line {lineno}: expected bitstring_index,bitstring,count,..."
            )));
        };
        let idx: u64 = idx.trim().parse().map_err(|e| {
            FgaError::MalformedInstance(format!("histogram line {lineno}: {e}"))
        })?;
        let count: u64 = count.trim().parse().map_err(|e| {
            FgaError::MalformedInstance(format!("histogram line {lineno}: {e}"))
        })?;
        *histogram.entry(idx).or_insert(0) += count;
    }

    let empirical = histogram_to_distribution(&histogram, h.n_qubits())?;
    let summary = top_k(&empirical, &h, args.top)?;
    write_json(&summary, &args.out)?;
    println!(
        "ground mass {:.4}, feasible mass {:.4}; wrote {}",
        summary.ground_mass,
        summary.feasible_mass,
        args.out.display()
    );
    Ok(())
}
