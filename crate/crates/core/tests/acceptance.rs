//! End-to-end acceptance checks. Each test prints a single pass/fail
//! line for its criterion (visible with `--nocapture`) and asserts it.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fga_vqe::analysis::{
    fidelity_upper_bound, ground_state_component, histogram_to_distribution, top_k,
};
use fga_vqe::encoding::{build_hamiltonian, default_lambda, qubo_matrix, violation_count};
use fga_vqe::model::{
    brute_force_solve, generate_instance, total_time, BruteForceOutcome, FgaInstance,
    GeneratorParams,
};
use fga_vqe::simulator::{prepare, sample, AnsatzSpec, ParamVector, Statevector};
use fga_vqe::vqe::{
    cvar_exact, cvar_from_samples, inference, optimize, CvarConfig, OptimizerKind, ShotMode,
    VqeRunResult,
};

fn report(criterion: usize, name: &str, ok: bool) {
    println!(
        "criterion {criterion:2} ({name}): {}",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}) failed");
}

fn seeded_instance(seed: u64, flights: usize, gates: usize) -> FgaInstance {
    generate_instance(seed, flights, gates, &GeneratorParams::default()).unwrap()
}

// --- 1. encoding vs direct cost oracle, exhaustive over all basis states ---

#[test]
fn criterion_01_encoding_oracle_equivalence() {
    let start = Instant::now();
    // shapes chosen so Q = M * |F| stays <= 12
    let shapes = [(3usize, 4usize), (4, 4), (5, 4), (6, 4), (4, 8), (3, 3), (6, 2), (2, 5)];
    for seed in 0..20u64 {
        let (nf, ng) = shapes[seed as usize % shapes.len()];
        let inst = seeded_instance(seed, nf, ng);
        let lambda = default_lambda(&inst);
        let h = build_hamiltonian(&inst, lambda).unwrap();
        assert!(h.n_qubits() <= 12);
        for b in 0..(1u64 << h.n_qubits()) {
            let a = h.decode(b);
            // direct integer-arithmetic oracle, bypassing the cost tables
            let expected =
                total_time(&inst, &a).unwrap() + lambda as i64 * violation_count(&inst, &a) as i64;
            assert_eq!(
                h.energy(b),
                expected as f64,
                "seed {seed} shape ({nf},{ng}) basis {b}"
            );
        }
    }
    let ok = start.elapsed().as_secs_f64() < 60.0;
    report(1, "encoding-oracle equivalence", ok);
}

// --- 2. naive QUBO minimum equals compact-encoding minimum ---

#[test]
fn criterion_02_qubo_cross_check() {
    for (seed, nf, ng) in [
        (0u64, 2usize, 4usize),
        (1, 3, 4),
        (2, 4, 4),
        (3, 2, 8),
        (4, 3, 5),
        (5, 4, 2),
        (6, 2, 2),
        (7, 5, 3),
    ] {
        assert!(nf * ng <= 16);
        let inst = seeded_instance(seed, nf, ng);
        let p = 2.0 * default_lambda(&inst);
        let qubo = qubo_matrix(&inst, p, p).unwrap();

        // exhaustive scan of the full 2^(|F||G|) QUBO space, restricted to
        // states that decode to feasible assignments
        let n = nf * ng;
        let mut qubo_min = f64::INFINITY;
        for word in 0..(1u64 << n) {
            let x: Vec<bool> = (0..n).map(|k| (word >> k) & 1 == 1).collect();
            let one_hot = (0..nf).all(|i| {
                (0..ng).filter(|&g| x[i * ng + g]).count() == 1
            });
            if !one_hot {
                continue;
            }
            let gate_of: Vec<usize> = (0..nf)
                .map(|i| (0..ng).find(|&g| x[i * ng + g]).unwrap())
                .collect();
            let a = fga_vqe::model::Assignment::new(gate_of);
            if violation_count(&inst, &a) > 0 {
                continue;
            }
            qubo_min = qubo_min.min(qubo.energy(&x).unwrap());
        }

        let h = build_hamiltonian(&inst, default_lambda(&inst)).unwrap();
        let compact_min = (0..(1u64 << h.n_qubits()))
            .filter(|&b| h.is_feasible_state(b))
            .map(|b| h.energy(b))
            .fold(f64::INFINITY, f64::min);

        assert_eq!(qubo_min, compact_min, "seed {seed} shape ({nf},{ng})");
    }
    report(2, "QUBO cross-check", true);
}

// --- 3. simulator vs dense-matrix oracle ---

fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Lift a single-qubit gate to the full register. Qubit 0 is the least
/// significant bit of the basis index, so it sits rightmost in the
/// Kronecker product.
fn lift_single(n_qubits: usize, qubit: usize, gate: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut m = identity(1);
    for q in 0..n_qubits {
        let factor = if q == qubit { gate.to_vec() } else { identity(2) };
        m = kron(&factor, &m);
    }
    m
}

fn ry_matrix(theta: f64) -> Vec<Vec<f64>> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![vec![c, -s], vec![s, c]]
}

fn cnot_matrix(n_qubits: usize, control: usize, target: usize) -> Vec<Vec<f64>> {
    let dim = 1usize << n_qubits;
    let mut m = vec![vec![0.0; dim]; dim];
    for col in 0..dim {
        let row = if (col >> control) & 1 == 1 {
            col ^ (1 << target)
        } else {
            col
        };
        m[row][col] = 1.0;
    }
    m
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn prepare_dense(spec: &AnsatzSpec, params: &ParamVector) -> Vec<f64> {
    let dim = 1usize << spec.n_qubits;
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    let mut next = 0usize;
    for layer in 0..spec.layers {
        if layer > 0 {
            for q in 0..spec.n_qubits.saturating_sub(1) {
                v = mat_vec(&cnot_matrix(spec.n_qubits, q, q + 1), &v);
            }
        }
        for q in 0..spec.n_qubits {
            let m = lift_single(spec.n_qubits, q, &ry_matrix(params.0[next]));
            next += 1;
            v = mat_vec(&m, &v);
        }
    }
    v
}

#[test]
fn criterion_03_simulator_vs_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut max_err = 0.0f64;
    for trial in 0..100 {
        let n_qubits = rng.random_range(1..=6);
        let layers = rng.random_range(1..=3);
        let spec = AnsatzSpec::new(n_qubits, layers).unwrap();
        let params = ParamVector(
            (0..spec.n_params())
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        );
        let fast = prepare(&spec, &params).unwrap();
        let dense = prepare_dense(&spec, &params);
        for (a, b) in fast.amplitudes().iter().zip(&dense) {
            max_err = max_err.max((a - b).abs());
        }
        assert!(max_err <= 1e-10, "trial {trial}: max error {max_err:e}");
    }

    // normalization after 10^4 random gates
    let mut state = Statevector::zero_state(6);
    for _ in 0..10_000 {
        if rng.random_bool(0.5) {
            let q = rng.random_range(0..6);
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            state.apply_ry(q, theta).unwrap();
        } else {
            let c = rng.random_range(0..6);
            let mut t = rng.random_range(0..6);
            if t == c {
                t = (t + 1) % 6;
            }
            state.apply_cnot(c, t).unwrap();
        }
    }
    let norm_err = (state.norm_squared() - 1.0).abs();
    let ok = max_err <= 1e-10 && norm_err <= 1e-10;
    println!("  max amplitude error {max_err:e}, norm drift {norm_err:e}");
    report(3, "simulator vs dense oracle", ok);
}

// --- 4. CVaR estimator hand cases and monotonicity ---

#[test]
fn criterion_04_cvar_estimator() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);

    // epsilon = 1 recovers the plain mean
    for _ in 0..100 {
        let n = rng.random_range(1..50);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((cvar_from_samples(&xs, 1.0).unwrap() - mean).abs() <= 1e-12);
    }

    // hand case: lowest half of {1,2,3,4}
    assert_eq!(cvar_from_samples(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 1.5);

    // monotone non-decreasing in epsilon
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let e1: f64 = rng.random_range(0.01..1.0);
        let e2: f64 = rng.random_range(e1..1.0);
        let c1 = cvar_from_samples(&xs, e1).unwrap();
        let c2 = cvar_from_samples(&xs, e2).unwrap();
        assert!(c1 <= c2 + 1e-12, "cvar({e1}) = {c1} > cvar({e2}) = {c2}");
    }
    report(4, "CVaR estimator", true);
}

// --- 5 & 6. exact-mode convergence and ground-state component ---

struct ConvergedRun {
    oracle_min: f64,
    result: VqeRunResult,
    hamiltonian: fga_vqe::encoding::DiagonalHamiltonian,
    spec: AnsatzSpec,
}

fn exact_run(seed: u64, flights: usize, gates: usize) -> ConvergedRun {
    let inst = seeded_instance(seed, flights, gates);
    let BruteForceOutcome::Solved { min_cost, .. } = brute_force_solve(&inst, 1 << 24).unwrap()
    else {
        panic!("seed {seed}: generator must produce feasible instances");
    };
    let hamiltonian = build_hamiltonian(&inst, default_lambda(&inst)).unwrap();
    let spec = AnsatzSpec::new(hamiltonian.n_qubits(), 2).unwrap();
    let config = CvarConfig {
        epsilon: 0.5,
        shots: ShotMode::Exact,
        max_iterations: 200,
        optimizer: OptimizerKind::Cobyla,
        rng_seed: seed,
    };
    let result = optimize(&hamiltonian, &spec, &config).unwrap();
    ConvergedRun {
        oracle_min: min_cost as f64,
        result,
        hamiltonian,
        spec,
    }
}

fn converged(run: &ConvergedRun) -> bool {
    run.result
        .trace
        .min_cvar()
        .is_some_and(|c| (c - run.oracle_min).abs() < 1e-6)
}

/// Ground-state probability at the point where the CVaR first reaches the
/// oracle minimum (final parameters when it never does).
fn ground_mass_at_convergence(run: &ConvergedRun) -> f64 {
    let probs = match run
        .result
        .trace
        .records
        .iter()
        .find(|r| (r.cvar - run.oracle_min).abs() < 1e-6)
    {
        Some(rec) => prepare(&run.spec, &ParamVector(rec.params.clone()))
            .unwrap()
            .probabilities(),
        None => run.result.final_probabilities.clone(),
    };
    ground_state_component(&probs, &run.hamiltonian).unwrap()
}

#[test]
fn criterion_05_full_vqe_convergence() {
    let start = Instant::now();
    let hits = (0..10u64).filter(|&s| converged(&exact_run(s, 2, 4))).count();
    let elapsed = start.elapsed().as_secs_f64();
    println!("  Q=4 convergence {hits}/10 in {elapsed:.1}s");
    report(5, "full-VQE convergence", hits >= 8 && elapsed < 120.0);
}

#[test]
fn criterion_06_ground_state_component_near_epsilon() {
    let mut ok = true;
    for (flights, gates, label) in [(2usize, 4usize, "Q=4"), (3, 4, "Q=6")] {
        let in_band = (0..10u64)
            .map(|s| exact_run(s, flights, gates))
            .filter(|run| {
                converged(run) && (0.35..=0.65).contains(&ground_mass_at_convergence(run))
            })
            .count();
        println!("  {label}: ground mass in [0.35, 0.65] for {in_band}/10 converged runs");
        ok &= in_band >= 8;
    }
    report(6, "ground-state component near epsilon", ok);
}

// --- 7. finite-shot CVaR vs exact CVaR at converged parameters ---

#[test]
fn criterion_07_shot_mode_consistency() {
    let run = exact_run(7, 3, 4);
    assert!(converged(&run), "reference Q=6 run must converge");
    let state = prepare(&run.spec, &run.result.final_params).unwrap();
    let exact = cvar_exact(&state.probabilities(), run.hamiltonian.diagonal(), 0.5).unwrap();

    let shots = 1000u64;
    let tail_len = 500usize; // ceil(0.5 * 1000)
    let mut within = 0;
    for rep in 0..100u64 {
        let histogram = sample(&state, shots, rep).unwrap();
        let mut energies: Vec<f64> = histogram
            .iter()
            .flat_map(|(&b, &c)| {
                std::iter::repeat(run.hamiltonian.energy(b)).take(c as usize)
            })
            .collect();
        energies.sort_by(|a, b| a.total_cmp(b));
        let tail = &energies[..tail_len];
        let sampled = cvar_from_samples(&energies, 0.5).unwrap();
        let mean = tail.iter().sum::<f64>() / tail_len as f64;
        let var = tail.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / tail_len as f64;
        let sigma_mean = (var / tail_len as f64).sqrt();
        if (sampled - exact).abs() <= 3.0 * sigma_mean {
            within += 1;
        }
    }
    println!("  within 3 sigma in {within}/100 repetitions");
    report(7, "shot-mode consistency", within >= 95);
}

// --- 8. fidelity upper bound ---

#[test]
fn criterion_08_fidelity_bound() {
    let p = vec![0.3, 0.2, 0.5, 0.0];
    assert_eq!(fidelity_upper_bound(&p, &p).unwrap(), 1.0);
    assert_eq!(
        fidelity_upper_bound(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
        0.5
    );

    let run = exact_run(7, 3, 4);
    assert!(converged(&run));
    let state = prepare(&run.spec, &run.result.final_params).unwrap();
    let exact = state.probabilities();
    let histogram = sample(&state, 1_000_000, 80).unwrap();
    let empirical = histogram_to_distribution(&histogram, run.hamiltonian.n_qubits()).unwrap();
    let bound = fidelity_upper_bound(&empirical, &exact).unwrap();
    println!("  10^6-shot fidelity bound {bound:.6}");
    report(8, "fidelity bound", bound >= 0.999);
}

// --- 9. scale / performance at Q = 18 ---

#[test]
fn criterion_09_scale_performance() {
    let start = Instant::now();
    let inst = seeded_instance(9, 9, 4);
    let h = build_hamiltonian(&inst, default_lambda(&inst)).unwrap();
    assert_eq!(h.n_qubits(), 18);
    let spec = AnsatzSpec::new(18, 2).unwrap();
    let params = fga_vqe::vqe::init_params(&spec, fga_vqe::vqe::InitStrategy::Uniform, 9);

    let prep_start = Instant::now();
    let state = prepare(&spec, &params).unwrap();
    let prep_secs = prep_start.elapsed().as_secs_f64();

    let result = inference(&h, &spec, &params, 10_000, 9).unwrap();
    let empirical = histogram_to_distribution(&result.histogram, 18).unwrap();
    let summary = top_k(&empirical, &h, 5).unwrap();
    assert_eq!(summary.top_k.len(), 5);
    assert!(state.norm_squared() > 0.0);

    let total_secs = start.elapsed().as_secs_f64();
    println!("  Q=18 pipeline {total_secs:.2}s (prepare {prep_secs:.3}s)");
    report(9, "scale/performance", total_secs < 10.0 && prep_secs < 1.0);
}

// --- 10. byte-identical CLI reruns ---

fn dir_contents(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if path.is_dir() {
            for (sub, bytes) in dir_contents(&path) {
                files.insert(format!("{name}/{sub}"), bytes);
            }
        } else {
            files.insert(name, std::fs::read(&path).unwrap());
        }
    }
    files
}

#[test]
fn criterion_10_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_fga");
    let tmp = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let status = std::process::Command::new(bin)
            .args([
                "vqe",
                "--seed",
                "7",
                "--flights",
                "2",
                "--gates",
                "4",
                "--exact",
                "--rng-seed",
                "11",
                "--max-iterations",
                "150",
                "--out",
            ])
            .arg(tmp.path().join(run))
            .status()
            .unwrap();
        assert!(status.success(), "cli run {run} failed");
    }
    let a = dir_contents(&tmp.path().join("a"));
    let b = dir_contents(&tmp.path().join("b"));
    let ok = a == b && !a.is_empty();
    println!("  {} files compared", a.len());
    report(10, "CLI determinism", ok);
}
