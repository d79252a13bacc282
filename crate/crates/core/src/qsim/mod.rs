//! Dense statevector simulation.
//!
//! Basis ordering: qubit 0 is the least significant bit of the basis index.

mod circuit;
mod gate;
mod histogram;
mod state;

pub use circuit::Circuit;
pub use gate::{Control, Gate, GateKind, Matrix2};
pub use histogram::MeasurementHistogram;
pub use state::StateVector;

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;
