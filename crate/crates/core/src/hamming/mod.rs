//! Circuit families for the coherent Hamming-weight measurement.
//!
//! All builders share one qubit convention: the control register (or its
//! repetition blocks) comes first, then the `n` data qubits, then (for the
//! zero-padded construction) the `w` padding qubits, then any fanout helpers.
//! Control qubit `C_j` carries binary weight `2^{j-1}`, so the decoded
//! outcome is a plain integer.

mod builders;
mod fanout;
mod iqft;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::pi_frac;
use crate::circuit::{Circuit, Condition, Instruction};
use crate::sim::{self, Executor, InitialState};
use crate::state::StateVector;

pub use builders::{
    build_alg1, build_alg2, build_alg2_resets, build_alg2_resets_with, build_alg2_tradeoff,
    build_alg2_tradeoff_with, build_u_y, build_u_y_on, build_variant,
};
pub use fanout::{build_fanout, FanoutStrategy};
pub use iqft::{build_iqft, build_semiclassical_iqft, IqftFragment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("input size n must be at least 1")]
    EmptyInput,
    #[error("fanout width s={s} outside [1, {n}]")]
    FanoutWidth { s: usize, n: usize },
    #[error("group element y={y} outside [0, {max}]")]
    GroupElement { y: usize, max: usize },
    #[error("fanout width must be at least 1")]
    ZeroFanout,
    #[error("register size k must be at least 1")]
    ZeroRegister,
}

/// Sizes that drive every builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingParams {
    /// Data qubits.
    pub n: usize,
    /// Control qubits, `⌈log₂(n+1)⌉`.
    pub k: usize,
    /// Zero-padding qubits, `2^k − (n+1)`.
    pub w: usize,
    /// Padded register size, `2^k − 1`.
    pub big_n: usize,
    /// Repetition-block width for the tradeoff constructions.
    pub s: usize,
}

pub fn derive_params(n: usize, s: usize) -> Result<HammingParams, ParamError> {
    if n == 0 {
        return Err(ParamError::EmptyInput);
    }
    if s == 0 || s > n {
        return Err(ParamError::FanoutWidth { s, n });
    }
    let k = (usize::BITS - n.leading_zeros()) as usize;
    let big_n = (1usize << k) - 1;
    Ok(HammingParams { n, k, w: big_n - n, big_n, s })
}

impl HammingParams {
    pub fn with_s(self, s: usize) -> Result<HammingParams, ParamError> {
        derive_params(self.n, s)
    }

    /// Number of distinct measurement outcomes of the control register.
    pub fn outcomes(&self) -> usize {
        self.big_n + 1
    }
}

/// Rotation angles for control qubit `C_j`, stored at index `j-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    /// `πN/(N+1)·2^{j-1}`: phase of the controlled `U_{2^{j-1}}`.
    pub alphas: Vec<f64>,
    /// `2π/(N+1)·2^{j-1}`: controlled rotation on each target.
    pub betas: Vec<f64>,
    /// `nπ/(N+1)·2^{j-1}`: control rotation once padding is removed.
    pub gammas: Vec<f64>,
}

impl AngleSet {
    pub fn new(p: &HammingParams) -> Self {
        let m = p.outcomes() as u64;
        let scaled = |num: usize| -> Vec<f64> {
            (0..p.k).map(|j| pi_frac((num << j) as i64, m)).collect()
        };
        AngleSet { alphas: scaled(p.big_n), betas: scaled(2), gammas: scaled(p.n) }
    }
}

/// Which circuit family produced a [`BuiltCircuit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Zero-padded construction with full inverse QFT.
    Alg1,
    /// Padding-free construction with full inverse QFT.
    Alg2,
    /// Repetition-encoded control blocks, no resets.
    Tradeoff,
    /// One control block reused across rounds through resets.
    Resets,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Alg1, Variant::Alg2, Variant::Tradeoff, Variant::Resets];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
            Variant::Tradeoff => "tradeoff",
            Variant::Resets => "resets",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected alg1, alg2, tradeoff or resets)"))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where each logical role lives in a built circuit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutMap {
    pub data_qubits: Vec<usize>,
    pub padding_qubits: Vec<usize>,
    /// Block for `C_j` at index `j-1`. With resets every block is the same
    /// physical qubits.
    pub control_blocks: Vec<Vec<usize>>,
    pub helper_qubits: Vec<usize>,
    /// Bit `i` of the outcome is the parity of `outcome_cbits[i]`.
    pub outcome_cbits: Vec<Vec<usize>>,
    /// Parities recorded by measurement-based fanout.
    pub fanout_cbits: Vec<usize>,
}

impl LayoutMap {
    /// Outcome integer from a full classical record.
    pub fn decode(&self, cbits: &[bool]) -> usize {
        self.outcome_cbits
            .iter()
            .enumerate()
            .map(|(i, g)| (Condition::parity_of(g, cbits) as usize) << i)
            .sum()
    }

    /// Outcome integer from parities already reduced per outcome bit.
    pub fn decode_parities(bits: &[bool]) -> usize {
        bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
    }

    /// Distinct physical control qubits.
    pub fn control_qubit_count(&self) -> usize {
        let mut all: Vec<usize> = self.control_blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    }

    /// Qubits whose state is returned after a run: data then padding.
    pub fn register_qubits(&self) -> Vec<usize> {
        self.data_qubits.iter().chain(&self.padding_qubits).copied().collect()
    }
}

/// A circuit together with the bookkeeping needed to run and decode it.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltCircuit {
    pub variant: Variant,
    pub params: HammingParams,
    pub circuit: Circuit,
    pub layout: LayoutMap,
}

impl BuiltCircuit {
    /// Input placement: `data` on the data qubits, everything else `|0⟩`.
    pub fn initial_state(&self, data: &StateVector) -> InitialState {
        InitialState::on(self.layout.data_qubits.clone(), data.clone())
    }

    /// Executor whose final states cover the data and padding qubits.
    pub fn executor(&self) -> sim::Result<Executor<'_>> {
        Executor::new(&self.circuit)?.keep(self.layout.register_qubits())
    }

    /// Runs one sampled shot and returns the decoded outcome.
    pub fn sample_outcome(&self, exec: &Executor<'_>, data: &StateVector, rng: &mut sim::SimRng) -> sim::Result<(usize, StateVector)> {
        let (cbits, state) = exec.sample(&self.initial_state(data), rng)?;
        Ok((self.layout.decode(&cbits), state))
    }

    /// Outcome counts over `shots` sampled runs from one seeded generator.
    pub fn sample_counts(&self, data: &StateVector, shots: usize, seed: u64) -> sim::Result<BTreeMap<usize, usize>> {
        let exec = self.executor()?;
        let init = self.initial_state(data);
        let mut rng = sim::seeded_rng(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let (cbits, _) = exec.sample(&init, &mut rng)?;
            *counts.entry(self.layout.decode(&cbits)).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Adds `delta` to every controlled rotation driven by `C_1`. Negative
    /// control for verification.
    pub fn perturb_first_beta(&mut self, delta: f64) {
        let beta = AngleSet::new(&self.params).betas[0];
        for inst in &mut self.circuit.instructions {
            if let Instruction::Crz { angle, .. } = inst {
                if *angle == beta {
                    *angle += delta;
                }
            }
        }
    }

    /// Coarse-grained branches keyed by decoded outcome.
    pub fn outcome_branches(&self, data: &StateVector) -> sim::Result<Vec<(usize, f64, StateVector)>> {
        let exec = self.executor()?;
        let branches = exec.observed(&self.initial_state(data), &self.layout.outcome_cbits)?;
        Ok(branches
            .into_iter()
            .map(|b| (LayoutMap::decode_parities(&b.observed), b.probability, b.state))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn params_examples() {
        let p = derive_params(2, 1).unwrap();
        assert_eq!((p.k, p.w, p.big_n), (2, 1, 3));
        let p = derive_params(3, 1).unwrap();
        assert_eq!((p.k, p.w, p.big_n), (2, 0, 3));
        let p = derive_params(7, 1).unwrap();
        assert_eq!((p.k, p.w, p.big_n), (3, 0, 7));
        let p = derive_params(1, 1).unwrap();
        assert_eq!((p.k, p.w, p.big_n), (1, 0, 1));
        let p = derive_params(8, 8).unwrap();
        assert_eq!((p.k, p.w, p.big_n), (4, 7, 15));
    }

    #[test]
    fn params_invariants() {
        for n in 1..300usize {
            let p = derive_params(n, 1).unwrap();
            assert!(1usize << (p.k - 1) <= n + 1 && n < 1 << p.k, "n={n}");
            assert_eq!(p.w, (1 << p.k) - (n + 1));
            assert_eq!(p.big_n, (1 << p.k) - 1);
        }
    }

    #[test]
    fn params_errors() {
        assert_eq!(derive_params(0, 1), Err(ParamError::EmptyInput));
        assert_eq!(derive_params(3, 0), Err(ParamError::FanoutWidth { s: 0, n: 3 }));
        assert_eq!(derive_params(3, 4), Err(ParamError::FanoutWidth { s: 4, n: 3 }));
    }

    #[test]
    fn angle_set_relations() {
        for n in 1..20 {
            let p = derive_params(n, 1).unwrap();
            let a = AngleSet::new(&p);
            let m = p.outcomes() as f64;
            assert_eq!(a.betas.len(), p.k);
            for j in 0..p.k {
                let pow = (1u64 << j) as f64;
                assert!((a.alphas[j] - PI * p.big_n as f64 / m * pow).abs() < 1e-12);
                assert!((a.betas[j] - 2.0 * PI / m * pow).abs() < 1e-12);
                assert!((a.gammas[j] - n as f64 / 2.0 * a.betas[j]).abs() < 1e-12);
                if j > 0 {
                    assert!((a.betas[j] - 2.0 * a.betas[j - 1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variant_names_parse() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("alg3".parse::<Variant>().is_err());
    }

    #[test]
    fn decode_reads_parities() {
        let layout = LayoutMap { outcome_cbits: vec![vec![0, 1], vec![2]], ..Default::default() };
        assert_eq!(layout.decode(&[true, false, true]), 0b11);
        assert_eq!(layout.decode(&[true, true, true]), 0b10);
    }
}
