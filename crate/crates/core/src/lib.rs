//! Coherent Hamming-weight measurement circuits and a statevector simulator
//! for dynamic circuits (mid-circuit measurement, reset, classical feedback).

pub mod angle;
pub mod circuit;
pub mod hamming;
pub mod hwc;
pub mod oracle;
pub mod scheduler;
pub mod sim;
pub mod state;

pub use circuit::{Circuit, Condition, Instruction};
pub use hamming::{derive_params, BuiltCircuit, HammingParams, Variant};
pub use state::StateVector;
