//! Flight gate assignment (FGA) as a combinatorial optimization problem,
//! solved by simulated CVaR-VQE.
//!
//! The library is organized around the pipeline
//!
//! 1. [`model`] — problem instances, the classical cost, feasibility and
//!    exact brute-force oracles;
//! 2. [`encoding`] — the compact cyclic binary encoding and the diagonal
//!    Hamiltonian, plus the naive one-hot QUBO as a cross-check;
//! 3. [`simulator`] — a real-amplitude statevector simulator for the
//!    RY/CNOT hardware-efficient ansatz;
//! 4. [`vqe`] — CVaR cost evaluation (exact and finite-shot), the
//!    derivative-free optimization loop, and inference at fixed parameters;
//! 5. [`analysis`] — solution-quality metrics on measurement distributions.

pub mod analysis;
pub mod encoding;
pub mod error;
pub mod model;
pub mod simulator;
pub mod vqe;

pub use analysis::DistributionSummary;
pub use encoding::{DiagonalHamiltonian, PauliZTerm, QubitLayout};
pub use error::FgaError;
pub use model::{Assignment, FgaInstance, Flight, Gate, GeneratorParams};
pub use simulator::{AnsatzSpec, ParamVector, Statevector};
pub use vqe::{CvarConfig, ShotMode, VqeRunResult, VqeTrace};
