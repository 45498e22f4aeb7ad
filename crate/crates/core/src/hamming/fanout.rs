//! Copying one control qubit into an `s`-qubit repetition block,
//! `α|0⟩ + β|1⟩ → α|0…0⟩ + β|1…1⟩`.

use serde::{Deserialize, Serialize};

use super::ParamError;
use crate::circuit::{Circuit, Condition, Instruction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanoutStrategy {
    /// CNOT doubling tree, `⌈log₂ s⌉` layers, no measurement.
    Tree,
    /// Parity measurements into helpers plus one feedback layer; depth does
    /// not grow with `s`.
    #[default]
    MeasurementBased,
}

impl FanoutStrategy {
    pub fn helpers_needed(self, s: usize) -> usize {
        match self {
            FanoutStrategy::Tree => 0,
            FanoutStrategy::MeasurementBased => s.saturating_sub(1),
        }
    }
}

/// Emits a fanout of `chain[0]` onto `chain[1..]`, which must start in `|0⟩`.
///
/// The measurement-based form puts each ancilla in `|+⟩`, measures the
/// `Z⊗Z` parity of every adjacent chain pair through a helper, and flips
/// `chain[i]` when the prefix parity `m₁⊕…⊕m_i` is odd. With
/// `reset_helpers` each helper is reset right after it is read so it can be
/// reused.
pub(crate) fn emit_fanout(
    circ: &mut Circuit,
    chain: &[usize],
    helpers: &[usize],
    cbits: &[usize],
    strategy: FanoutStrategy,
    reset_helpers: bool,
) {
    let s = chain.len();
    if s <= 1 {
        return;
    }
    match strategy {
        FanoutStrategy::Tree => {
            let mut have = 1;
            while have < s {
                for i in 0..have.min(s - have) {
                    circ.cnot(chain[i], chain[i + have]);
                }
                have *= 2;
            }
        }
        FanoutStrategy::MeasurementBased => {
            assert!(helpers.len() >= s - 1 && cbits.len() >= s - 1, "fanout needs s-1 helpers and cbits");
            // Emitted pair by pair so at most two helpers are live in program
            // order; per-qubit order is unchanged, so the layering is too.
            circ.cnot(chain[0], helpers[0]);
            for i in 1..s {
                circ.h(chain[i]);
                if i < s - 1 {
                    circ.cnot(chain[i], helpers[i]);
                }
                circ.cnot(chain[i], helpers[i - 1]);
                circ.measure(helpers[i - 1], cbits[i - 1]);
                if reset_helpers {
                    circ.reset(helpers[i - 1]);
                }
                circ.conditioned(Condition::parity(&cbits[..i], true), Instruction::X(chain[i]));
            }
        }
    }
}

/// Standalone fanout fragment. Qubit 0 is the source, qubits `1..s` the
/// ancillas and, for the measurement-based strategy, qubits `s..2s-1` the
/// helpers with cbits `0..s-1`.
pub fn build_fanout(s: usize, strategy: FanoutStrategy) -> Result<Circuit, ParamError> {
    if s == 0 {
        return Err(ParamError::ZeroFanout);
    }
    let helpers = strategy.helpers_needed(s);
    let mut circ = Circuit::new(s + helpers, helpers);
    let chain: Vec<usize> = (0..s).collect();
    let helper_qubits: Vec<usize> = (s..s + helpers).collect();
    let cbits: Vec<usize> = (0..helpers).collect();
    emit_fanout(&mut circ, &chain, &helper_qubits, &cbits, strategy, false);
    Ok(circ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_branches, unitary_matrix, DEFAULT_PRUNE};
    use crate::state::StateVector;
    use num_complex::Complex64;

    fn encoded(s: usize, alpha: Complex64, beta: Complex64) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << s];
        amps[0] = alpha;
        amps[(1 << s) - 1] = beta;
        StateVector::from_amps(amps).unwrap()
    }

    #[test]
    fn s1_is_empty() {
        for strategy in [FanoutStrategy::Tree, FanoutStrategy::MeasurementBased] {
            assert!(build_fanout(1, strategy).unwrap().is_empty());
        }
        assert_eq!(build_fanout(0, FanoutStrategy::Tree), Err(ParamError::ZeroFanout));
    }

    #[test]
    fn tree_encodes_s3() {
        let (alpha, beta) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let circ = build_fanout(3, FanoutStrategy::Tree).unwrap();
        let mut input = vec![Complex64::new(0.0, 0.0); 8];
        input[0] = alpha;
        input[1] = beta;
        let out = unitary_matrix(&circ).unwrap() * nalgebra::DVector::from_vec(input);
        let expect = encoded(3, alpha, beta);
        for (a, b) in out.iter().zip(expect.amps()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn tree_layer_count() {
        for s in 1..=9 {
            let circ = build_fanout(s, FanoutStrategy::Tree).unwrap();
            assert_eq!(circ.len(), s - 1);
        }
    }

    #[test]
    fn measurement_based_every_branch_encodes() {
        let (alpha, beta) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        for s in 2..=4 {
            let circ = build_fanout(s, FanoutStrategy::MeasurementBased).unwrap();
            let helpers = s - 1;
            let input = StateVector::from_amps({
                let mut v = vec![Complex64::new(0.0, 0.0); 1 << (s + helpers)];
                v[0] = alpha;
                v[1] = beta;
                v
            })
            .unwrap();
            let branches = run_branches(&circ, &input, DEFAULT_PRUNE).unwrap();
            assert_eq!(branches.len(), 1 << (s - 1));
            for b in &branches {
                // Helpers hold the measured parities; strip them off.
                let mut helper_bits = 0usize;
                for (i, &m) in b.cbits.iter().enumerate() {
                    helper_bits |= (m as usize) << i;
                }
                let base = helper_bits << s;
                let data: Vec<Complex64> = (0..1usize << s).map(|i| b.state.amps()[base | i]).collect();
                let data = StateVector::from_amps(data).unwrap();
                assert!(data.approx_eq_mod_phase(&encoded(s, alpha, beta), 1e-12));
            }
        }
    }
}
