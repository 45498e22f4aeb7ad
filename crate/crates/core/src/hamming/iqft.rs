//! Inverse QFT on the control register, coherent and semi-classical.
//!
//! The transform maps `|y⟩ ↦ (N+1)^{-1/2} Σ_z e^{-2πi yz/(N+1)} |z⟩` with the
//! register integer read from `C_1` (weight 1) upwards. Neither form swaps
//! qubits: level `l` of the transform decodes output bit `l` out of the
//! control of weight `2^{k-1-l}`, and the cbit layout records that.

use super::ParamError;
use crate::angle::pi_frac;
use crate::circuit::{Circuit, Condition, Instruction};

/// Angle that removes the already-decoded low bits at `level` when bit
/// `bit < level` is set: `-π·2^{bit}/2^{level}`.
fn correction_angle(bit: usize, level: usize) -> f64 {
    pi_frac(-1, 1u64 << (level - bit))
}

/// Emits the coherent inverse QFT on `controls` (weight order) and measures
/// output bit `l` into `cbits[l]`.
pub(crate) fn emit_iqft_and_measure(circ: &mut Circuit, controls: &[usize], cbits: &[usize]) {
    let k = controls.len();
    for level in 0..k {
        let target = controls[k - 1 - level];
        for bit in 0..level {
            // Controlled phase diag(1,1,1,e^{iθ}) = e^{iθ/4}·Rz(θ/2)_c·CRz(θ).
            let source = controls[k - 1 - bit];
            let theta = correction_angle(bit, level);
            circ.global_phase(pi_frac(-1, 1u64 << (level - bit + 2)));
            circ.rz(pi_frac(-1, 1u64 << (level - bit + 1)), source);
            circ.crz(theta, source, target);
        }
        circ.h(target);
    }
    for level in 0..k {
        circ.measure(controls[k - 1 - level], cbits[level]);
    }
}

/// Emits level `level` of the semi-classical encoded inverse QFT on `block`.
///
/// `prior[i]` is the cbit group whose parity is output bit `i`. The
/// correction for bit `i` is a classically controlled `Rz` on block member
/// `i mod s`; on a repetition-encoded qubit a `Z` rotation on any member acts
/// identically, and spreading them keeps the level at constant depth. With
/// `reset_after` each member is reset right after it is measured.
pub(crate) fn emit_semiclassical_level(
    circ: &mut Circuit,
    level: usize,
    block: &[usize],
    prior: &[Vec<usize>],
    cbits: &[usize],
    reset_after: bool,
) {
    let s = block.len();
    for (bit, group) in prior.iter().enumerate().take(level) {
        circ.conditioned(
            Condition::parity(group.clone(), true),
            Instruction::Rz { angle: correction_angle(bit, level), target: block[bit % s] },
        );
    }
    for &q in block {
        circ.h(q);
    }
    for (&q, &c) in block.iter().zip(cbits) {
        circ.measure(q, c);
        if reset_after {
            circ.reset(q);
        }
    }
}

/// A transform fragment plus how to read its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct IqftFragment {
    pub circuit: Circuit,
    /// Block for logical qubit `q` (weight `2^q`) at index `q`.
    pub blocks: Vec<Vec<usize>>,
    /// Outcome bit `l` is the parity of `outcome_cbits[l]`.
    pub outcome_cbits: Vec<Vec<usize>>,
}

impl IqftFragment {
    pub fn decode(&self, cbits: &[bool]) -> usize {
        self.outcome_cbits
            .iter()
            .enumerate()
            .map(|(l, g)| (Condition::parity_of(g, cbits) as usize) << l)
            .sum()
    }
}

/// Coherent inverse QFT on `k` qubits followed by measurement.
pub fn build_iqft(k: usize) -> Result<IqftFragment, ParamError> {
    if k == 0 {
        return Err(ParamError::ZeroRegister);
    }
    let mut circuit = Circuit::new(k, k);
    let controls: Vec<usize> = (0..k).collect();
    let cbits: Vec<usize> = (0..k).collect();
    emit_iqft_and_measure(&mut circuit, &controls, &cbits);
    Ok(IqftFragment {
        circuit,
        blocks: controls.iter().map(|&q| vec![q]).collect(),
        outcome_cbits: cbits.iter().map(|&c| vec![c]).collect(),
    })
}

/// Semi-classical encoded inverse QFT on `k` logical qubits, each encoded in
/// an `s`-qubit repetition block (`k·s` qubits and cbits). Logical qubit `q`
/// occupies qubits `q·s..(q+1)·s`; level `l` consumes block `k-1-l` and
/// writes cbits `l·s..(l+1)·s`.
pub fn build_semiclassical_iqft(k: usize, s: usize) -> Result<IqftFragment, ParamError> {
    if k == 0 {
        return Err(ParamError::ZeroRegister);
    }
    if s == 0 {
        return Err(ParamError::ZeroFanout);
    }
    let mut circuit = Circuit::new(k * s, k * s);
    let blocks: Vec<Vec<usize>> = (0..k).map(|q| (q * s..(q + 1) * s).collect()).collect();
    let outcome_cbits: Vec<Vec<usize>> = (0..k).map(|l| (l * s..(l + 1) * s).collect()).collect();
    for level in 0..k {
        emit_semiclassical_level(
            &mut circuit,
            level,
            &blocks[k - 1 - level],
            &outcome_cbits[..level],
            &outcome_cbits[level],
            false,
        );
    }
    Ok(IqftFragment { circuit, blocks, outcome_cbits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_branches, unitary_matrix, DEFAULT_PRUNE};
    use crate::state::StateVector;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Dense kernel `M^{-1/2} e^{-2πi yz/M}`, computed directly.
    fn dense_iqft_probs(input: &StateVector) -> Vec<f64> {
        let m = input.dim();
        (0..m)
            .map(|z| {
                let amp: Complex64 = (0..m)
                    .map(|y| input.amps()[y] * Complex64::from_polar(1.0, -2.0 * PI * (y * z) as f64 / m as f64))
                    .sum::<Complex64>()
                    / (m as f64).sqrt();
                amp.norm_sqr()
            })
            .collect()
    }

    #[test]
    fn coherent_iqft_operator_matches_kernel_with_bit_reversal() {
        for k in 1..=4 {
            let frag = build_iqft(k).unwrap();
            let mut unitary = frag.circuit.clone();
            unitary.instructions.retain(|i| !matches!(i, Instruction::Measure { .. }));
            let u = unitary_matrix(&unitary).unwrap();
            let m = 1usize << k;
            let reverse = |z: usize| (0..k).fold(0, |acc, b| acc | (((z >> b) & 1) << (k - 1 - b)));
            for y in 0..m {
                for z in 0..m {
                    let expect = Complex64::from_polar(1.0, -2.0 * PI * (y * z) as f64 / m as f64) / (m as f64).sqrt();
                    assert!((u[(reverse(z), y)] - expect).norm() < 1e-12, "k={k} y={y} z={z}");
                }
            }
        }
    }

    #[test]
    fn semiclassical_s1_matches_dense_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=3 {
            let frag = build_semiclassical_iqft(k, 1).unwrap();
            for _ in 0..5 {
                let input = StateVector::random(k, &mut rng);
                let expect = dense_iqft_probs(&input);
                let mut got = vec![0.0; 1 << k];
                for b in run_branches(&frag.circuit, &input, DEFAULT_PRUNE).unwrap() {
                    got[frag.decode(&b.cbits)] += b.probability;
                }
                for z in 0..1 << k {
                    assert!((got[z] - expect[z]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_level_parity_formula() {
        // k=1: p(a) = ½[1 + (−1)^a·2Re(αβ*)] for any block width.
        let (alpha, beta) = (Complex64::new(0.3, 0.4), Complex64::from_polar(0.866_025_403_784_438_6, 0.9));
        for s in 1..=3 {
            let frag = build_semiclassical_iqft(1, s).unwrap();
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << s];
            amps[0] = alpha;
            amps[(1 << s) - 1] = beta;
            let input = StateVector::normalized(amps).unwrap();
            let (a, b) = (input.amps()[0], input.amps()[(1 << s) - 1]);
            let mut p = [0.0; 2];
            for br in run_branches(&frag.circuit, &input, DEFAULT_PRUNE).unwrap() {
                p[frag.decode(&br.cbits)] += br.probability;
            }
            let re = (a * b.conj()).re;
            assert!((p[0] - 0.5 * (1.0 + 2.0 * re)).abs() < 1e-12);
            assert!((p[1] - 0.5 * (1.0 - 2.0 * re)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(build_iqft(0), Err(ParamError::ZeroRegister));
        assert_eq!(build_semiclassical_iqft(2, 0), Err(ParamError::ZeroFanout));
    }
}
