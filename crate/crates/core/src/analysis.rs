//! Solution-quality metrics over measurement distributions: dominant
//! basis states, ground-state mass, a fidelity upper bound from measured
//! probabilities, and an approximation ratio against the exact oracle.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::encoding::DiagonalHamiltonian;
use crate::error::{FgaError, Result};

/// One dominant basis state with its decode and quality flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub bitstring: u64,
    pub probability: f64,
    pub assignment: Vec<usize>,
    pub energy: f64,
    pub feasible: bool,
}

/// Summary of a measurement distribution against the diagonal oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub top_k: Vec<TopEntry>,
    /// Probability mass on minimal-energy basis states (all degenerate
    /// cyclic preimages included).
    pub ground_mass: f64,
    /// Probability mass on feasible decodes.
    pub feasible_mass: f64,
    /// Global minimum of the diagonal.
    pub ground_energy: f64,
}

fn check_distribution(p: &[f64], expected_len: usize) -> Result<()> {
    if p.len() != expected_len {
        return Err(FgaError::DimensionMismatch(format!(
            "distribution has {} entries, expected {expected_len}",
            p.len()
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(FgaError::InvalidParameter(format!(
            "distribution sums to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Squared Bhattacharyya coefficient between two outcome distributions,
/// an upper bound on the state fidelity.
pub fn fidelity_upper_bound(p_qc: &[f64], p_id: &[f64]) -> Result<f64> {
    if p_qc.len() != p_id.len() {
        return Err(FgaError::DimensionMismatch(format!(
            "{} vs {} outcomes",
            p_qc.len(),
            p_id.len()
        )));
    }
    check_distribution(p_qc, p_qc.len())?;
    check_distribution(p_id, p_id.len())?;
    let mut coeff = 0.0f64;
    let mut support = 0usize;
    let mut lone_product = 0.0f64;
    for (&a, &b) in p_qc.iter().zip(p_id) {
        let r = a.max(0.0) * b.max(0.0);
        if r > 0.0 {
            support += 1;
            lone_product = r;
            coeff += r.sqrt();
        }
    }
    // with a single overlapping outcome the squared coefficient is the
    // product itself; skipping the sqrt round-trip keeps it exact
    if support == 1 {
        return Ok(lone_product.min(1.0));
    }
    Ok((coeff * coeff).min(1.0))
}

/// Probability mass on all basis states whose energy equals the global
/// minimum of the diagonal.
pub fn ground_state_component(
    probabilities: &[f64],
    hamiltonian: &DiagonalHamiltonian,
) -> Result<f64> {
    check_distribution(probabilities, 1 << hamiltonian.n_qubits())?;
    let (_, states) = hamiltonian.ground_states();
    Ok(states.iter().map(|&b| probabilities[b as usize]).sum())
}

/// The `k` most probable basis states (ties broken by bitstring index),
/// each with decode, energy and feasibility, plus aggregate masses.
pub fn top_k(
    probabilities: &[f64],
    hamiltonian: &DiagonalHamiltonian,
    k: usize,
) -> Result<DistributionSummary> {
    if k == 0 {
        return Err(FgaError::InvalidParameter("k must be >= 1".into()));
    }
    check_distribution(probabilities, 1 << hamiltonian.n_qubits())?;

    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| {
        probabilities[b]
            .total_cmp(&probabilities[a])
            .then(a.cmp(&b))
    });

    let (ground_energy, ground_states) = hamiltonian.ground_states();
    let ground_mass = ground_states
        .iter()
        .map(|&b| probabilities[b as usize])
        .sum();
    let feasible_mass = probabilities
        .iter()
        .enumerate()
        .filter(|&(b, _)| hamiltonian.is_feasible_state(b as u64))
        .map(|(_, &p)| p)
        .sum();

    let top_k = order
        .into_iter()
        .take(k)
        .map(|b| TopEntry {
            bitstring: b as u64,
            probability: probabilities[b],
            assignment: hamiltonian.decode(b as u64).gate_of,
            energy: hamiltonian.energy(b as u64),
            feasible: hamiltonian.is_feasible_state(b as u64),
        })
        .collect();

    Ok(DistributionSummary {
        top_k,
        ground_mass,
        feasible_mass,
        ground_energy,
    })
}

/// Converts a shot histogram into relative frequencies over the full basis.
pub fn histogram_to_distribution(
    histogram: &BTreeMap<u64, u64>,
    n_qubits: usize,
) -> Result<Vec<f64>> {
    let dim = 1usize << n_qubits;
    let total: u64 = histogram.values().sum();
    if total == 0 {
        return Err(FgaError::InvalidParameter("empty histogram".into()));
    }
    let mut p = vec![0.0; dim];
    for (&b, &count) in histogram {
        if b as usize >= dim {
            return Err(FgaError::DimensionMismatch(format!(
                "bitstring {b} out of range for {n_qubits} qubits"
            )));
        }
        p[b as usize] = count as f64 / total as f64;
    }
    Ok(p)
}

/// Expected solution quality over feasible decodes, scaled so the optimum
/// maps to 1 and the worst feasible assignment to 0; infeasible mass
/// contributes 0.
pub fn approximation_ratio(
    probabilities: &[f64],
    hamiltonian: &DiagonalHamiltonian,
    oracle_min: f64,
    oracle_max: f64,
) -> Result<f64> {
    check_distribution(probabilities, 1 << hamiltonian.n_qubits())?;
    if oracle_min >= oracle_max {
        return Err(FgaError::InvalidParameter(format!(
            "need oracle_min < oracle_max, got {oracle_min} >= {oracle_max}"
        )));
    }
    let span = oracle_max - oracle_min;
    let mut ratio = 0.0;
    for (b, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 || !hamiltonian.is_feasible_state(b as u64) {
            continue;
        }
        let quality = (oracle_max - hamiltonian.energy(b as u64)) / span;
        ratio += p * quality;
    }
    Ok(ratio)
}
