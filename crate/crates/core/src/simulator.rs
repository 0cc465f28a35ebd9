//! Exact real-amplitude statevector simulation of the hardware-efficient
//! ansatz: columns of RY rotations separated by linear CNOT chains.
//!
//! The circuit acts on |0...0> with RY and CNOT only, so every amplitude
//! stays real and the state is stored as a plain `f64` array. In a basis
//! index, qubit `q` is bit `q` (qubit 0 least significant).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::encoding::MAX_DUMP_QUBITS;
use crate::error::{FgaError, Result};

/// Circuit shape: `layers` RY columns; every column after the first is
/// preceded by the CNOT chain `q0 -> q1 -> ... -> q_{Q-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub layers: usize,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, layers: usize) -> Result<Self> {
        if n_qubits == 0 || layers == 0 {
            return Err(FgaError::InvalidParameter(
                "ansatz needs at least one qubit and one layer".into(),
            ));
        }
        Ok(AnsatzSpec { n_qubits, layers })
    }

    /// Total parameter count, `layers * n_qubits`.
    pub fn n_params(&self) -> usize {
        self.layers * self.n_qubits
    }
}

/// Rotation angles in radians, column-major: layer 1 qubits `0..Q`, then
/// layer 2, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A real statevector over `2^Q` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<f64>,
}

impl Statevector {
    /// |0...0>
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![0.0; 1 << n_qubits];
        amplitudes[0] = 1.0;
        Statevector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(FgaError::InvalidParameter(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies RY(theta) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]
    /// on one qubit, in place.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        let stride = 1usize << qubit;
        let n = self.amplitudes.len();
        let mut base = 0;
        while base < n {
            for low in base..base + stride {
                let a0 = self.amplitudes[low];
                let a1 = self.amplitudes[low + stride];
                self.amplitudes[low] = c * a0 - s * a1;
                self.amplitudes[low + stride] = s * a0 + c * a1;
            }
            base += 2 * stride;
        }
        Ok(())
    }

    /// Applies CNOT with the given control and target, in place.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(FgaError::InvalidParameter(
                "control and target must differ".into(),
            ));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// Born-rule probabilities, `p_i = a_i^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// Sum of squared amplitudes (1 up to rounding).
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

/// Runs the ansatz on |0...0>: RY column, then for each further layer a
/// CNOT chain followed by the next RY column.
pub fn prepare(spec: &AnsatzSpec, params: &ParamVector) -> Result<Statevector> {
    if params.len() != spec.n_params() {
        return Err(FgaError::DimensionMismatch(format!(
            "ansatz expects {} parameters, got {}",
            spec.n_params(),
            params.len()
        )));
    }
    let q = spec.n_qubits;
    let mut state = Statevector::zero_state(q);
    for layer in 0..spec.layers {
        if layer > 0 {
            for c in 0..q - 1 {
                state.apply_cnot(c, c + 1)?;
            }
        }
        for qubit in 0..q {
            state.apply_ry(qubit, params.angles()[layer * q + qubit])?;
        }
    }
    Ok(state)
}

/// Draws `shots` basis states from the Born distribution. Deterministic
/// given the seed (ChaCha8 PRNG, fixed algorithm across platforms).
pub fn sample(state: &Statevector, shots: u64, rng_seed: u64) -> Result<BTreeMap<u64, u64>> {
    if shots == 0 {
        return Err(FgaError::InvalidParameter("shots must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let probs = state.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..shots {
        let r: f64 = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= r);
        let idx = idx.min(probs.len() - 1);
        *histogram.entry(idx as u64).or_insert(0) += 1;
    }
    Ok(histogram)
}

/// Binary dump of the statevector: magic `FGAVECR1`, a little-endian
/// `u32` qubit count, then `2^Q` little-endian `f64` amplitudes in basis
/// index order.
pub fn write_statevector<P: AsRef<Path>>(state: &Statevector, path: P) -> Result<()> {
    if state.n_qubits() > MAX_DUMP_QUBITS {
        return Err(FgaError::TooManyQubits {
            q: state.n_qubits(),
            max: MAX_DUMP_QUBITS,
        });
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(b"FGAVECR1")?;
    file.write_all(&(state.n_qubits() as u32).to_le_bytes())?;
    for &a in state.amplitudes() {
        file.write_all(&a.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn ry_zero_is_identity() {
        let mut s = Statevector::zero_state(2);
        s.apply_ry(0, 1.3).unwrap();
        let before = s.clone();
        s.apply_ry(1, 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn ry_pi_flips_zero() {
        let mut s = Statevector::zero_state(1);
        s.apply_ry(0, std::f64::consts::PI).unwrap();
        assert!(s.amplitudes()[0].abs() < TOL);
        assert!((s.amplitudes()[1] - 1.0).abs() < TOL);
    }

    #[test]
    fn ry_half_pi_superposition() {
        let mut s = Statevector::zero_state(1);
        s.apply_ry(0, std::f64::consts::FRAC_PI_2).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - inv_sqrt2).abs() < TOL);
        assert!((s.amplitudes()[1] - inv_sqrt2).abs() < TOL);
    }

    #[test]
    fn cnot_cases() {
        let mut s = Statevector::zero_state(2);
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, Statevector::zero_state(2)); // |00> fixed

        // |10> in qubit terms: qubit 0 (control) set -> index 0b01
        let mut s = Statevector::zero_state(2);
        s.apply_ry(0, std::f64::consts::PI).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert!((s.amplitudes()[0b11] - 1.0).abs() < TOL);

        // involution
        let mut t = s.clone();
        t.apply_cnot(0, 1).unwrap();
        t.apply_cnot(0, 1).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn cnot_rejects_bad_indices() {
        let mut s = Statevector::zero_state(2);
        assert!(s.apply_cnot(0, 0).is_err());
        assert!(s.apply_cnot(0, 5).is_err());
        assert!(s.apply_ry(2, 0.1).is_err());
    }

    #[test]
    fn prepare_zero_angles_gives_zero_state() {
        let spec = AnsatzSpec::new(4, 2).unwrap();
        let params = ParamVector(vec![0.0; spec.n_params()]);
        let s = prepare(&spec, &params).unwrap();
        assert!((s.amplitudes()[0] - 1.0).abs() < TOL);
    }

    #[test]
    fn prepare_single_qubit_pi() {
        let spec = AnsatzSpec::new(1, 1).unwrap();
        let s = prepare(&spec, &ParamVector(vec![std::f64::consts::PI])).unwrap();
        assert!((s.amplitudes()[1] - 1.0).abs() < TOL);
    }

    #[test]
    fn prepare_rejects_length_mismatch() {
        let spec = AnsatzSpec::new(3, 2).unwrap();
        assert!(prepare(&spec, &ParamVector(vec![0.0; 5])).is_err());
    }

    // --- dense-matrix oracle, independent of the in-place kernels ---

    fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn dense_ry(n_qubits: usize, qubit: usize, theta: f64) -> Vec<Vec<f64>> {
        let dim = 1 << n_qubits;
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        let mut m = vec![vec![0.0; dim]; dim];
        for col in 0..dim {
            let bit = (col >> qubit) & 1;
            let (r0, r1) = (col & !(1 << qubit), col | (1 << qubit));
            if bit == 0 {
                m[r0][col] += c;
                m[r1][col] += s;
            } else {
                m[r0][col] += -s;
                m[r1][col] += c;
            }
        }
        m
    }

    fn dense_cnot(n_qubits: usize, control: usize, target: usize) -> Vec<Vec<f64>> {
        let dim = 1 << n_qubits;
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

    /// Same circuit as `prepare`, but as an explicit matrix chain on a
    /// dense vector.
    pub(crate) fn prepare_dense_oracle(spec: &AnsatzSpec, params: &ParamVector) -> Vec<f64> {
        let q = spec.n_qubits;
        let mut v = vec![0.0; 1 << q];
        v[0] = 1.0;
        for layer in 0..spec.layers {
            if layer > 0 {
                for c in 0..q - 1 {
                    v = mat_vec(&dense_cnot(q, c, c + 1), &v);
                }
            }
            for qubit in 0..q {
                v = mat_vec(&dense_ry(q, qubit, params.angles()[layer * q + qubit]), &v);
            }
        }
        v
    }

    #[test]
    fn prepare_matches_dense_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let spec = AnsatzSpec::new(3, 2).unwrap();
        for _ in 0..20 {
            let params = ParamVector(
                (0..spec.n_params())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect(),
            );
            let fast = prepare(&spec, &params).unwrap();
            let oracle = prepare_dense_oracle(&spec, &params);
            for (a, b) in fast.amplitudes().iter().zip(&oracle) {
                assert!((a - b).abs() <= TOL, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn probabilities_normalize() {
        let spec = AnsatzSpec::new(4, 2).unwrap();
        let params = ParamVector((0..8).map(|i| 0.3 * i as f64 - 1.0).collect());
        let s = prepare(&spec, &params).unwrap();
        let total: f64 = s.probabilities().iter().sum();
        assert!((total - 1.0).abs() < TOL);
    }

    #[test]
    fn sample_point_mass() {
        let s = Statevector::zero_state(3);
        let hist = sample(&s, 1000, 7).unwrap();
        assert_eq!(hist.get(&0), Some(&1000));
        assert_eq!(hist.len(), 1);
    }

    #[test]
    fn sample_uniform_two_outcomes() {
        let mut s = Statevector::zero_state(1);
        s.apply_ry(0, std::f64::consts::FRAC_PI_2).unwrap();
        let k = 100_000u64;
        let hist = sample(&s, k, 3).unwrap();
        let f0 = *hist.get(&0).unwrap() as f64 / k as f64;
        let sigma = (0.25 / k as f64).sqrt();
        assert!((f0 - 0.5).abs() < 5.0 * sigma, "f0 = {f0}");
    }

    #[test]
    fn sample_is_deterministic() {
        let spec = AnsatzSpec::new(3, 2).unwrap();
        let params = ParamVector((0..6).map(|i| 0.5 * i as f64).collect());
        let s = prepare(&spec, &params).unwrap();
        let a = sample(&s, 500, 42).unwrap();
        let b = sample(&s, 500, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values().sum::<u64>(), 500);
    }

    #[test]
    fn sampling_chi_square_goodness_of_fit() {
        // empirical K-shot frequencies vs exact Born distribution;
        // Wilson-Hilferty critical value at significance 1e-4
        let spec = AnsatzSpec::new(4, 2).unwrap();
        let params = ParamVector((0..8).map(|i| 0.7 * i as f64 - 2.0).collect());
        let s = prepare(&spec, &params).unwrap();
        let probs = s.probabilities();
        let k = 1_000_000u64;
        let hist = sample(&s, k, 11).unwrap();
        let mut chi2 = 0.0;
        let mut df = 0usize;
        for (i, &p) in probs.iter().enumerate() {
            let expected = p * k as f64;
            if expected < 5.0 {
                continue; // merge-small-bins simplification: skip tiny bins
            }
            let observed = hist.get(&(i as u64)).copied().unwrap_or(0) as f64;
            chi2 += (observed - expected).powi(2) / expected;
            df += 1;
        }
        let df = (df - 1) as f64;
        let z = 3.719; // upper 1e-4 quantile of the standard normal
        let crit = df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 = {chi2}, crit = {crit}");
    }

    proptest! {
        #[test]
        fn random_gates_preserve_norm(
            ops in proptest::collection::vec((0usize..4, 0usize..4, -3.2f64..3.2), 1..60)
        ) {
            let mut s = Statevector::zero_state(4);
            for (a, b, theta) in ops {
                s.apply_ry(a, theta).unwrap();
                if a != b {
                    s.apply_cnot(a, b).unwrap();
                }
            }
            prop_assert!((s.norm_squared() - 1.0).abs() < TOL);
        }
    }
}
