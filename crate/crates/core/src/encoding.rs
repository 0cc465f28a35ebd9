//! Compact cyclic binary encoding of an FGA instance into a diagonal
//! Hamiltonian, plus the naive one-hot QUBO formulation as a cross-check.
//!
//! Each flight owns `M = ceil(log2(|G|))` qubits; flight `i`, bit `k` is
//! qubit `i*M + k`. Bit `z_0` is the most significant bit of the encoded
//! value `alpha'`, and `alpha' mod |G|` is the gate. In a basis-state
//! index, qubit `q` is bit `q` (qubit 0 least significant).

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{FgaError, Result};
use crate::model::{overlap_set, Assignment, FgaInstance};

/// Default upper limit on the total qubit count.
pub const MAX_QUBITS: usize = 30;

/// Qubit bookkeeping for the compact encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLayout {
    pub n_flights: usize,
    pub n_gates: usize,
    /// Bits per flight, `max(ceil(log2(|G|)), 1)`.
    pub bits_per_flight: usize,
    /// Total qubits, `bits_per_flight * |F|`.
    pub n_qubits: usize,
}

impl QubitLayout {
    pub fn new(n_flights: usize, n_gates: usize) -> Self {
        // |G| = 1 still gets one bit so the circuit is non-degenerate;
        // both basis values then decode to gate 0.
        let bits_per_flight = usize::max((n_gates as f64).log2().ceil() as usize, 1);
        QubitLayout {
            n_flights,
            n_gates,
            bits_per_flight,
            n_qubits: bits_per_flight * n_flights,
        }
    }

    /// Number of encoded values per flight, `2^M`.
    pub fn values_per_flight(&self) -> usize {
        1 << self.bits_per_flight
    }

    /// Extracts flight `i`'s encoded value `alpha'` from a basis-state
    /// index. Bit `z_k` of the value is qubit `i*M + k`, with `z_0` most
    /// significant.
    pub fn alpha_prime(&self, basis_index: u64, flight: usize) -> u64 {
        let m = self.bits_per_flight;
        let mut value = 0u64;
        for k in 0..m {
            let bit = (basis_index >> (flight * m + k)) & 1;
            value |= bit << (m - 1 - k);
        }
        value
    }
}

/// Maps an encoded value given as bits `z_0 ... z_{M-1}` (`z_0` most
/// significant) cyclically onto a gate index: `alpha' mod |G|`.
pub fn decode_value(bits: &[u8], n_gates: usize) -> usize {
    let mut alpha_prime = 0u64;
    for &z in bits {
        alpha_prime = (alpha_prime << 1) | u64::from(z & 1);
    }
    (alpha_prime % n_gates as u64) as usize
}

/// Decodes a basis-state index into an assignment, flight by flight.
pub fn decode_bitstring(layout: &QubitLayout, basis_index: u64) -> Assignment {
    let gate_of = (0..layout.n_flights)
        .map(|i| (layout.alpha_prime(basis_index, i) % layout.n_gates as u64) as usize)
        .collect();
    Assignment::new(gate_of)
}

/// The diagonal Hamiltonian `H^a + H^d + H^t + lambda * H^O` in table
/// form: a per-flight cost table over encoded values plus sparse pairwise
/// tables for transfer and penalty terms. Energy evaluation per basis
/// state is `O(|F|^2)`.
#[derive(Debug, Clone)]
pub struct DiagonalHamiltonian {
    layout: QubitLayout,
    lambda: f64,
    /// `per_flight_cost[i][alpha']`.
    per_flight_cost: Vec<Vec<f64>>,
    /// `(i, j) -> flattened 2^M x 2^M table`, entry `alpha' * 2^M + beta'`.
    pair_cost: BTreeMap<(usize, usize), Vec<f64>>,
    /// The instance's overlap set, kept for feasibility checks on decodes.
    overlaps: Vec<(usize, usize)>,
    diagonal_cache: OnceLock<Vec<f64>>,
}

impl DiagonalHamiltonian {
    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits
    }

    /// Energy of one computational basis state, evaluated from the tables.
    pub fn energy(&self, basis_index: u64) -> f64 {
        let vpf = self.layout.values_per_flight();
        let values: Vec<usize> = (0..self.layout.n_flights)
            .map(|i| self.layout.alpha_prime(basis_index, i) as usize)
            .collect();
        let mut e = 0.0;
        for (i, &v) in values.iter().enumerate() {
            e += self.per_flight_cost[i][v];
        }
        for (&(i, j), table) in &self.pair_cost {
            e += table[values[i] * vpf + values[j]];
        }
        e
    }

    /// The full `2^Q` diagonal, computed once and cached.
    pub fn diagonal(&self) -> &[f64] {
        self.diagonal_cache.get_or_init(|| {
            (0..1u64 << self.layout.n_qubits)
                .map(|b| self.energy(b))
                .collect()
        })
    }

    /// Decodes a basis state into its assignment.
    pub fn decode(&self, basis_index: u64) -> Assignment {
        decode_bitstring(&self.layout, basis_index)
    }

    /// True iff the decoded assignment violates no overlap constraint.
    pub fn is_feasible_state(&self, basis_index: u64) -> bool {
        let a = self.decode(basis_index);
        self.overlaps
            .iter()
            .all(|&(i, j)| a.gate_of[i] != a.gate_of[j])
    }

    /// Minimum diagonal entry and every basis index attaining it.
    pub fn ground_states(&self) -> (f64, Vec<u64>) {
        let diag = self.diagonal();
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let states = diag
            .iter()
            .enumerate()
            .filter(|&(_, &e)| e == min)
            .map(|(b, _)| b as u64)
            .collect();
        (min, states)
    }
}

/// Builds the diagonal Hamiltonian for an instance with penalty weight
/// `lambda`. For every basis state `b`,
/// `energy(b) = total_time(decode(b)) + lambda * violation_count(decode(b))`.
pub fn build_hamiltonian(instance: &FgaInstance, lambda: f64) -> Result<DiagonalHamiltonian> {
    instance.validate()?;
    if lambda < 0.0 {
        return Err(FgaError::InvalidParameter("lambda must be >= 0".into()));
    }
    let layout = QubitLayout::new(instance.n_flights(), instance.n_gates());
    if layout.n_qubits > MAX_QUBITS {
        return Err(FgaError::TooManyQubits {
            q: layout.n_qubits,
            max: MAX_QUBITS,
        });
    }
    let vpf = layout.values_per_flight();
    let ng = instance.n_gates();
    let gate_of_value: Vec<usize> = (0..vpf).map(|v| v % ng).collect();

    let per_flight_cost = instance
        .flights
        .iter()
        .map(|f| {
            gate_of_value
                .iter()
                .map(|&g| {
                    (f.n_arrive * instance.gates[g].t_arrive
                        + f.n_depart * instance.gates[g].t_depart) as f64
                })
                .collect()
        })
        .collect();

    let mut pair_cost: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for i in 0..instance.n_flights() {
        for j in 0..instance.n_flights() {
            let n_ij = instance.transit_passengers[i][j];
            if n_ij == 0 {
                continue;
            }
            let table = pair_cost.entry((i, j)).or_insert_with(|| vec![0.0; vpf * vpf]);
            for (a, &ga) in gate_of_value.iter().enumerate() {
                for (b, &gb) in gate_of_value.iter().enumerate() {
                    table[a * vpf + b] += (n_ij * instance.transit_times[ga][gb]) as f64;
                }
            }
        }
    }
    let overlaps: Vec<(usize, usize)> = overlap_set(instance).into_iter().collect();
    for &(i, j) in &overlaps {
        let table = pair_cost.entry((i, j)).or_insert_with(|| vec![0.0; vpf * vpf]);
        for (a, &ga) in gate_of_value.iter().enumerate() {
            for (b, &gb) in gate_of_value.iter().enumerate() {
                if ga == gb {
                    table[a * vpf + b] += lambda;
                }
            }
        }
    }

    Ok(DiagonalHamiltonian {
        layout,
        lambda,
        per_flight_cost,
        pair_cost,
        overlaps,
        diagonal_cache: OnceLock::new(),
    })
}

/// Number of overlap-constraint violations of an assignment.
pub fn violation_count(instance: &FgaInstance, a: &Assignment) -> usize {
    overlap_set(instance)
        .iter()
        .filter(|&&(i, j)| a.gate_of[i] == a.gate_of[j])
        .count()
}

/// A penalty weight guaranteed to push every constraint violation above
/// any feasible cost: one plus an upper bound on the maximum total time.
pub fn default_lambda(instance: &FgaInstance) -> f64 {
    let max_t_arrive = instance.gates.iter().map(|g| g.t_arrive).max().unwrap_or(0);
    let max_t_depart = instance.gates.iter().map(|g| g.t_depart).max().unwrap_or(0);
    let max_transit = instance
        .transit_times
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0);
    let mut bound = 1i64;
    for f in &instance.flights {
        bound += f.n_arrive * max_t_arrive + f.n_depart * max_t_depart;
    }
    for &n in instance.transit_passengers.iter().flatten() {
        bound += n * max_transit;
    }
    bound as f64
}

/// One term of the Pauli-Z expansion of the diagonal: a coefficient times
/// a product of `Z` on the listed qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliZTerm {
    pub z_qubits: Vec<usize>,
    pub coeff: f64,
}

fn accumulate_projector_terms(
    terms: &mut HashMap<u64, f64>,
    coeff: f64,
    groups: &[(usize, u64, usize)], // (qubit offset, alpha', M) per projector factor
) {
    // expand the product of (1 + (-1)^{z_k} Z)/2 factors over all qubit
    // subsets of the involved flights
    let total_bits: usize = groups.iter().map(|&(_, _, m)| m).sum();
    let norm = coeff / (1u64 << total_bits) as f64;
    let mut bit_info = Vec::with_capacity(total_bits);
    for &(offset, alpha_prime, m) in groups {
        for k in 0..m {
            let z_k = (alpha_prime >> (m - 1 - k)) & 1;
            bit_info.push((offset + k, z_k));
        }
    }
    for subset in 0..(1u64 << total_bits) {
        let mut mask = 0u64;
        let mut sign = 1.0;
        for (pos, &(qubit, z)) in bit_info.iter().enumerate() {
            if (subset >> pos) & 1 == 1 {
                mask |= 1 << qubit;
                if z == 1 {
                    sign = -sign;
                }
            }
        }
        *terms.entry(mask).or_insert(0.0) += norm * sign;
    }
}

/// Expands the diagonal Hamiltonian into Pauli-Z strings. Terms with
/// identical qubit masks are merged; zero coefficients are dropped.
pub fn pauli_terms(h: &DiagonalHamiltonian) -> Vec<PauliZTerm> {
    let m = h.layout.bits_per_flight;
    let mut terms: HashMap<u64, f64> = HashMap::new();
    for (i, table) in h.per_flight_cost.iter().enumerate() {
        for (alpha, &c) in table.iter().enumerate() {
            if c != 0.0 {
                accumulate_projector_terms(&mut terms, c, &[(i * m, alpha as u64, m)]);
            }
        }
    }
    let vpf = h.layout.values_per_flight();
    for (&(i, j), table) in &h.pair_cost {
        for alpha in 0..vpf {
            for beta in 0..vpf {
                let c = table[alpha * vpf + beta];
                if c != 0.0 {
                    accumulate_projector_terms(
                        &mut terms,
                        c,
                        &[(i * m, alpha as u64, m), (j * m, beta as u64, m)],
                    );
                }
            }
        }
    }
    let mut out: Vec<(u64, f64)> = terms
        .into_iter()
        .filter(|&(_, c)| c.abs() > 1e-12)
        .collect();
    out.sort_by_key(|&(mask, _)| mask);
    out.into_iter()
        .map(|(mask, coeff)| PauliZTerm {
            z_qubits: (0..64).filter(|&q| (mask >> q) & 1 == 1).collect(),
            coeff,
        })
        .collect()
}

/// Evaluates a Pauli-Z term list on one basis state.
pub fn energy_from_pauli_terms(terms: &[PauliZTerm], basis_index: u64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let parity = t
                .z_qubits
                .iter()
                .map(|&q| (basis_index >> q) & 1)
                .sum::<u64>();
            if parity % 2 == 0 {
                t.coeff
            } else {
                -t.coeff
            }
        })
        .sum()
}

/// Writes the Pauli-Z expansion as a JSON list of
/// `{"z_qubits": [...], "coeff": ...}` objects.
pub fn write_pauli_terms<P: AsRef<Path>>(terms: &[PauliZTerm], path: P) -> Result<()> {
    let mut text = serde_json::to_string_pretty(terms)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Maximum qubit count for diagonal / statevector binary dumps.
pub const MAX_DUMP_QUBITS: usize = 20;

/// Binary dump of the full diagonal: magic `FGADIAG1`, a little-endian
/// `u32` qubit count, then `2^Q` little-endian `f64` energies in basis
/// index order.
pub fn write_diagonal<P: AsRef<Path>>(h: &DiagonalHamiltonian, path: P) -> Result<()> {
    if h.n_qubits() > MAX_DUMP_QUBITS {
        return Err(FgaError::TooManyQubits {
            q: h.n_qubits(),
            max: MAX_DUMP_QUBITS,
        });
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(b"FGADIAG1")?;
    file.write_all(&(h.n_qubits() as u32).to_le_bytes())?;
    for &e in h.diagonal() {
        file.write_all(&e.to_le_bytes())?;
    }
    Ok(())
}

/// The naive one-hot QUBO: a symmetric `|F||G| x |F||G|` matrix plus a
/// constant. Variable `i*|G| + alpha` is "flight `i` at gate `alpha`";
/// linear terms sit on the diagonal.
#[derive(Debug, Clone)]
pub struct QuboProblem {
    pub n_flights: usize,
    pub n_gates: usize,
    pub matrix: Vec<Vec<f64>>,
    pub constant: f64,
}

impl QuboProblem {
    pub fn n_vars(&self) -> usize {
        self.n_flights * self.n_gates
    }

    /// QUBO energy `x^T Q x + c` of a binary vector.
    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n_vars() {
            return Err(FgaError::DimensionMismatch(format!(
                "expected {} variables, got {}",
                self.n_vars(),
                x.len()
            )));
        }
        let mut e = self.constant;
        for (u, &xu) in x.iter().enumerate() {
            if !xu {
                continue;
            }
            for (v, &xv) in x.iter().enumerate() {
                if xv {
                    e += self.matrix[u][v];
                }
            }
        }
        Ok(e)
    }

    /// One-hot encoding of an assignment.
    pub fn one_hot(&self, a: &Assignment) -> Vec<bool> {
        let mut x = vec![false; self.n_vars()];
        for (i, &g) in a.gate_of.iter().enumerate() {
            x[i * self.n_gates + g] = true;
        }
        x
    }
}

/// Builds the naive `|F| x |G|`-variable QUBO with quadratic penalties for
/// the one-hot and overlap constraints.
pub fn qubo_matrix(
    instance: &FgaInstance,
    penalty_one_hot: f64,
    penalty_overlap: f64,
) -> Result<QuboProblem> {
    instance.validate()?;
    if penalty_one_hot <= 0.0 || penalty_overlap <= 0.0 {
        return Err(FgaError::InvalidParameter("penalties must be > 0".into()));
    }
    let nf = instance.n_flights();
    let ng = instance.n_gates();
    let n = nf * ng;
    let var = |i: usize, a: usize| i * ng + a;

    // accumulate ordered-pair quadratic terms, then symmetrize
    let mut acc = vec![vec![0.0f64; n]; n];
    let mut constant = 0.0;

    for i in 0..nf {
        for a in 0..ng {
            let f = &instance.flights[i];
            let g = &instance.gates[a];
            acc[var(i, a)][var(i, a)] +=
                (f.n_arrive * g.t_arrive + f.n_depart * g.t_depart) as f64;
        }
    }
    for i in 0..nf {
        for j in 0..nf {
            let n_ij = instance.transit_passengers[i][j];
            if n_ij == 0 {
                continue;
            }
            for a in 0..ng {
                for b in 0..ng {
                    acc[var(i, a)][var(j, b)] += (n_ij * instance.transit_times[a][b]) as f64;
                }
            }
        }
    }
    // one-hot penalty: (sum_a x_ia - 1)^2 per flight
    for i in 0..nf {
        constant += penalty_one_hot;
        for a in 0..ng {
            acc[var(i, a)][var(i, a)] -= penalty_one_hot;
            for b in 0..ng {
                if a != b {
                    acc[var(i, a)][var(i, b)] += penalty_one_hot;
                }
            }
        }
    }
    for (i, j) in overlap_set(instance) {
        for a in 0..ng {
            acc[var(i, a)][var(j, a)] += penalty_overlap;
        }
    }

    let mut matrix = vec![vec![0.0f64; n]; n];
    for u in 0..n {
        matrix[u][u] = acc[u][u];
        for v in (u + 1)..n {
            let s = (acc[u][v] + acc[v][u]) / 2.0;
            matrix[u][v] = s;
            matrix[v][u] = s;
        }
    }
    Ok(QuboProblem {
        n_flights: nf,
        n_gates: ng,
        matrix,
        constant,
    })
}
