//! FGA problem instances, the classical cost function, feasibility checks
//! and exact oracles.
//!
//! All times are integer minutes and all passenger counts are integer
//! persons, so costs are exact integers and argmin comparisons against the
//! brute-force oracle are free of floating-point ties.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{FgaError, Result};

/// Default cap on `|G|^|F|` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

/// A single flight: its gate-occupation window and passenger counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flight {
    /// Arrival time in minutes.
    #[serde(rename = "arrival")]
    pub arrival_time: i64,
    /// Departure time in minutes.
    #[serde(rename = "departure")]
    pub departure_time: i64,
    /// Number of arriving passengers.
    pub n_arrive: i64,
    /// Number of departing passengers.
    pub n_depart: i64,
}

/// A gate with its walk times for arriving and departing passengers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    /// Walk time from the gate to the exit (arriving passengers).
    pub t_arrive: i64,
    /// Walk time from security to the gate (departing passengers).
    pub t_depart: i64,
}

/// A complete flight gate assignment instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FgaInstance {
    pub flights: Vec<Flight>,
    pub gates: Vec<Gate>,
    /// `transit_passengers[i][j]` passengers transfer from flight `i` to `j`.
    pub transit_passengers: Vec<Vec<i64>>,
    /// `transit_times[a][b]` is the walk time from gate `a` to gate `b`.
    pub transit_times: Vec<Vec<i64>>,
    /// Buffer between departure of one flight and arrival of the next at
    /// the same gate.
    pub buffer_time: i64,
}

/// One gate index per flight. The one-gate-per-flight constraint holds by
/// construction of this representation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub gate_of: Vec<usize>,
}

impl Assignment {
    pub fn new(gate_of: Vec<usize>) -> Self {
        Assignment { gate_of }
    }

    pub fn n_flights(&self) -> usize {
        self.gate_of.len()
    }
}

impl FgaInstance {
    /// Validates dimensions and non-negativity.
    pub fn validate(&self) -> Result<()> {
        let nf = self.flights.len();
        let ng = self.gates.len();
        if nf == 0 || ng == 0 {
            return Err(FgaError::MalformedInstance(
                "need at least one flight and one gate".into(),
            ));
        }
        if self.transit_passengers.len() != nf
            || self.transit_passengers.iter().any(|row| row.len() != nf)
        {
            return Err(FgaError::MalformedInstance(format!(
                "transit_passengers must be {nf}x{nf}"
            )));
        }
        if self.transit_times.len() != ng || self.transit_times.iter().any(|row| row.len() != ng) {
            return Err(FgaError::MalformedInstance(format!(
                "transit_times must be {ng}x{ng}"
            )));
        }
        for f in &self.flights {
            if f.arrival_time >= f.departure_time {
                return Err(FgaError::MalformedInstance(
                    "flight arrival must precede departure".into(),
                ));
            }
            if f.n_arrive < 0 || f.n_depart < 0 {
                return Err(FgaError::MalformedInstance(
                    "negative passenger count".into(),
                ));
            }
        }
        for g in &self.gates {
            if g.t_arrive < 0 || g.t_depart < 0 {
                return Err(FgaError::MalformedInstance("negative walk time".into()));
            }
        }
        if self
            .transit_passengers
            .iter()
            .flatten()
            .chain(self.transit_times.iter().flatten())
            .any(|&v| v < 0)
        {
            return Err(FgaError::MalformedInstance("negative matrix entry".into()));
        }
        if self.buffer_time < 0 {
            return Err(FgaError::MalformedInstance("negative buffer time".into()));
        }
        Ok(())
    }

    pub fn n_flights(&self) -> usize {
        self.flights.len()
    }

    pub fn n_gates(&self) -> usize {
        self.gates.len()
    }

    fn check_assignment(&self, a: &Assignment) -> Result<()> {
        if a.gate_of.len() != self.n_flights() {
            return Err(FgaError::DimensionMismatch(format!(
                "assignment covers {} flights, instance has {}",
                a.gate_of.len(),
                self.n_flights()
            )));
        }
        if let Some(&g) = a.gate_of.iter().find(|&&g| g >= self.n_gates()) {
            return Err(FgaError::DimensionMismatch(format!(
                "gate index {g} out of range (|G| = {})",
                self.n_gates()
            )));
        }
        Ok(())
    }
}

/// Total passenger transit time of an assignment: the arriving and
/// departing walk-time sums plus the transfer sum over all ordered flight
/// pairs, including the diagonal.
pub fn total_time(instance: &FgaInstance, a: &Assignment) -> Result<i64> {
    instance.check_assignment(a)?;
    let mut cost = 0i64;
    for (flight, &gate) in instance.flights.iter().zip(&a.gate_of) {
        let g = &instance.gates[gate];
        cost += flight.n_arrive * g.t_arrive + flight.n_depart * g.t_depart;
    }
    for (i, &gi) in a.gate_of.iter().enumerate() {
        for (j, &gj) in a.gate_of.iter().enumerate() {
            cost += instance.transit_passengers[i][j] * instance.transit_times[gi][gj];
        }
    }
    Ok(cost)
}

/// The set `O` of ordered flight pairs whose gate occupations collide:
/// `(i, j)` with `t_i_in < t_j_in < t_i_out + buffer`, strict on both sides.
pub fn overlap_set(instance: &FgaInstance) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for (i, fi) in instance.flights.iter().enumerate() {
        for (j, fj) in instance.flights.iter().enumerate() {
            if i != j
                && fi.arrival_time < fj.arrival_time
                && fj.arrival_time < fi.departure_time + instance.buffer_time
            {
                set.insert((i, j));
            }
        }
    }
    set
}

/// True iff no overlapping flight pair shares a gate.
pub fn is_feasible(instance: &FgaInstance, a: &Assignment) -> Result<bool> {
    instance.check_assignment(a)?;
    Ok(overlap_set(instance)
        .iter()
        .all(|&(i, j)| a.gate_of[i] != a.gate_of[j]))
}

/// Result of the exhaustive scan: either the optimum with every argmin
/// assignment, or the statement that no feasible assignment exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForceOutcome {
    Solved {
        min_cost: i64,
        /// All optimal feasible assignments, lexicographically sorted.
        optima: Vec<Assignment>,
    },
    Infeasible,
}

fn assignment_from_index(mut idx: u64, n_flights: usize, n_gates: usize) -> Assignment {
    let mut gate_of = vec![0usize; n_flights];
    for slot in gate_of.iter_mut().rev() {
        *slot = (idx % n_gates as u64) as usize;
        idx /= n_gates as u64;
    }
    Assignment { gate_of }
}

/// Enumerates all `|G|^|F|` assignments and returns the feasible minimum
/// together with every argmin. The scan is partitioned across threads;
/// the outcome is identical to a sequential scan.
pub fn brute_force_solve(instance: &FgaInstance, cap: u128) -> Result<BruteForceOutcome> {
    instance.validate()?;
    let nf = instance.n_flights();
    let ng = instance.n_gates();
    let total = (ng as u128).pow(nf as u32);
    if total > cap {
        return Err(FgaError::EnumerationCapExceeded { actual: total, cap });
    }
    let overlaps: Vec<(usize, usize)> = overlap_set(instance).into_iter().collect();

    let fold = |acc: (i64, Vec<u64>), idx: u64| {
        let a = assignment_from_index(idx, nf, ng);
        if overlaps.iter().any(|&(i, j)| a.gate_of[i] == a.gate_of[j]) {
            return acc;
        }
        let cost = total_time(instance, &a).expect("assignment valid by construction");
        let (mut best, mut argmins) = acc;
        if cost < best {
            best = cost;
            argmins.clear();
            argmins.push(idx);
        } else if cost == best {
            argmins.push(idx);
        }
        (best, argmins)
    };
    let merge = |a: (i64, Vec<u64>), b: (i64, Vec<u64>)| match a.0.cmp(&b.0) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            let (best, mut ids) = a;
            ids.extend(b.1);
            (best, ids)
        }
    };

    let (min_cost, mut argmins) = (0..total as u64)
        .into_par_iter()
        .fold(|| (i64::MAX, Vec::new()), fold)
        .reduce(|| (i64::MAX, Vec::new()), merge);

    if argmins.is_empty() {
        return Ok(BruteForceOutcome::Infeasible);
    }
    argmins.sort_unstable();
    let optima = argmins
        .into_iter()
        .map(|idx| assignment_from_index(idx, nf, ng))
        .collect();
    Ok(BruteForceOutcome::Solved { min_cost, optima })
}

/// Knobs for the seeded instance generator. Gates sit on a line with unit
/// spacing, so `t_ab = |a - b| * unit_walk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Range (inclusive) for gate walk times `t_a` / `t_d`.
    pub walk_time_range: (i64, i64),
    /// Inter-gate walk time per unit of gate distance.
    pub unit_walk: i64,
    /// Range (inclusive) for per-flight passenger counts.
    pub passenger_range: (i64, i64),
    /// Range (inclusive) for nonzero transfer passenger counts.
    pub transit_range: (i64, i64),
    /// Probability that an off-diagonal `n_ij` entry is nonzero.
    pub transit_density: f64,
    /// Range (inclusive) for the time a flight occupies its gate.
    pub dwell_range: (i64, i64),
    /// Arrival times are drawn uniformly from `[0, horizon]`; together
    /// with `dwell_range` and `buffer_time` this sets the expected
    /// overlap density.
    pub horizon: i64,
    pub buffer_time: i64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            walk_time_range: (1, 9),
            unit_walk: 2,
            passenger_range: (1, 20),
            transit_range: (1, 10),
            transit_density: 0.5,
            dwell_range: (30, 60),
            horizon: 120,
            buffer_time: 10,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        let ranges = [
            ("walk_time_range", self.walk_time_range),
            ("passenger_range", self.passenger_range),
            ("transit_range", self.transit_range),
            ("dwell_range", self.dwell_range),
        ];
        for (name, (lo, hi)) in ranges {
            if lo < 0 || hi < lo {
                return Err(FgaError::InvalidParameter(format!(
                    "{name} must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if self.dwell_range.0 < 1 {
            return Err(FgaError::InvalidParameter(
                "dwell_range lower bound must be >= 1".into(),
            ));
        }
        if self.unit_walk < 0 || self.horizon < 0 || self.buffer_time < 0 {
            return Err(FgaError::InvalidParameter(
                "unit_walk, horizon and buffer_time must be >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.transit_density) {
            return Err(FgaError::InvalidParameter(
                "transit_density must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministically generates an instance from a seed. The draw order is
/// fixed (gates, flights, transfer matrix row-major), so identical inputs
/// produce bit-identical instances. `n_ii` is always zero.
pub fn generate_instance(
    seed: u64,
    n_flights: usize,
    n_gates: usize,
    params: &GeneratorParams,
) -> Result<FgaInstance> {
    if n_flights == 0 || n_gates == 0 {
        return Err(FgaError::InvalidParameter(
            "need at least one flight and one gate".into(),
        ));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let gates: Vec<Gate> = (0..n_gates)
        .map(|_| Gate {
            t_arrive: rng.random_range(params.walk_time_range.0..=params.walk_time_range.1),
            t_depart: rng.random_range(params.walk_time_range.0..=params.walk_time_range.1),
        })
        .collect();

    let flights: Vec<Flight> = (0..n_flights)
        .map(|_| {
            let arrival = rng.random_range(0..=params.horizon);
            let dwell = rng.random_range(params.dwell_range.0..=params.dwell_range.1);
            Flight {
                arrival_time: arrival,
                departure_time: arrival + dwell,
                n_arrive: rng.random_range(params.passenger_range.0..=params.passenger_range.1),
                n_depart: rng.random_range(params.passenger_range.0..=params.passenger_range.1),
            }
        })
        .collect();

    let mut transit_passengers = vec![vec![0i64; n_flights]; n_flights];
    for i in 0..n_flights {
        for j in 0..n_flights {
            if i != j && rng.random_bool(params.transit_density) {
                transit_passengers[i][j] =
                    rng.random_range(params.transit_range.0..=params.transit_range.1);
            }
        }
    }

    let transit_times = (0..n_gates)
        .map(|a| {
            (0..n_gates)
                .map(|b| (a as i64 - b as i64).abs() * params.unit_walk)
                .collect()
        })
        .collect();

    let instance = FgaInstance {
        flights,
        gates,
        transit_passengers,
        transit_times,
        buffer_time: params.buffer_time,
    };
    instance.validate()?;
    Ok(instance)
}

/// Reads and validates an instance from a JSON file.
pub fn read_instance<P: AsRef<Path>>(path: P) -> Result<FgaInstance> {
    let text = std::fs::read_to_string(path)?;
    let instance: FgaInstance =
        serde_json::from_str(&text).map_err(|e| FgaError::MalformedInstance(e.to_string()))?;
    instance.validate()?;
    Ok(instance)
}

/// Writes an instance as pretty-printed JSON.
pub fn write_instance<P: AsRef<Path>>(instance: &FgaInstance, path: P) -> Result<()> {
    instance.validate()?;
    let mut text = serde_json::to_string_pretty(instance)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
