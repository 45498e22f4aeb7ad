use super::fanout::emit_fanout;
use super::iqft::{emit_iqft_and_measure, emit_semiclassical_level};
use super::{AngleSet, BuiltCircuit, FanoutStrategy, HammingParams, LayoutMap, ParamError, Variant};
use crate::angle::pi_frac;
use crate::circuit::Circuit;

/// `U_y` on `num_qubits` qubits: a global phase `πyN/(N+1)` and
/// `Rz(2πy/(N+1))` on every qubit, with `N = num_qubits`.
pub fn build_u_y_on(num_qubits: usize, y: usize) -> Result<Circuit, ParamError> {
    if y > num_qubits {
        return Err(ParamError::GroupElement { y, max: num_qubits });
    }
    let m = num_qubits as u64 + 1;
    let mut circ = Circuit::new(num_qubits, 0);
    circ.global_phase(pi_frac((y * num_qubits) as i64, m));
    let angle = pi_frac(2 * y as i64, m);
    for q in 0..num_qubits {
        circ.rz(angle, q);
    }
    Ok(circ)
}

/// `U_y` on the padded register of `N = 2^k − 1` qubits.
pub fn build_u_y(params: &HammingParams, y: usize) -> Result<Circuit, ParamError> {
    build_u_y_on(params.big_n, y)
}

/// Zero-padded construction. Qubits: controls `0..k`, data `k..k+n`, padding
/// `k+n..k+N`; cbit `l` is outcome bit `l`.
pub fn build_alg1(params: &HammingParams) -> BuiltCircuit {
    let HammingParams { n, k, big_n, .. } = *params;
    let angles = AngleSet::new(params);
    let controls: Vec<usize> = (0..k).collect();
    let mut circ = Circuit::new(k + big_n, k);
    for &c in &controls {
        circ.h(c);
    }
    for (j, &c) in controls.iter().enumerate() {
        // Controlled U_{2^j}: the relative phase moves onto the control as
        // Rz(α_j), leaving a global e^{-iα_j/2} that is tracked explicitly.
        circ.global_phase(angles.alphas[j] / 2.0);
        circ.rz(angles.alphas[j], c);
        for t in k..k + big_n {
            circ.crz(angles.betas[j], c, t);
        }
    }
    let cbits: Vec<usize> = (0..k).collect();
    emit_iqft_and_measure(&mut circ, &controls, &cbits);
    BuiltCircuit {
        variant: Variant::Alg1,
        params: *params,
        circuit: circ,
        layout: LayoutMap {
            data_qubits: (k..k + n).collect(),
            padding_qubits: (k + n..k + big_n).collect(),
            control_blocks: controls.iter().map(|&c| vec![c]).collect(),
            outcome_cbits: cbits.iter().map(|&c| vec![c]).collect(),
            ..Default::default()
        },
    }
}

/// Padding-free construction. Qubits: controls `0..k`, data `k..k+n`.
pub fn build_alg2(params: &HammingParams) -> BuiltCircuit {
    let HammingParams { n, k, .. } = *params;
    let angles = AngleSet::new(params);
    let controls: Vec<usize> = (0..k).collect();
    let mut circ = Circuit::new(k + n, k);
    for &c in &controls {
        circ.h(c);
    }
    for (j, &c) in controls.iter().enumerate() {
        circ.rz(angles.gammas[j], c);
    }
    for (j, &c) in controls.iter().enumerate() {
        for t in k..k + n {
            circ.crz(angles.betas[j], c, t);
        }
    }
    let cbits: Vec<usize> = (0..k).collect();
    emit_iqft_and_measure(&mut circ, &controls, &cbits);
    BuiltCircuit {
        variant: Variant::Alg2,
        params: *params,
        circuit: circ,
        layout: LayoutMap {
            data_qubits: (k..k + n).collect(),
            control_blocks: controls.iter().map(|&c| vec![c]).collect(),
            outcome_cbits: cbits.iter().map(|&c| vec![c]).collect(),
            ..Default::default()
        },
    }
}

/// One round of the encoded construction: prepare the block for `C_{j+1}`,
/// rotate, spread the controlled rotations, then run transform level
/// `level = k-1-j`.
struct Round<'a> {
    block: &'a [usize],
    helpers: &'a [usize],
    reuse: bool,
    last: bool,
}

struct EncodedEmitter<'p> {
    params: &'p HammingParams,
    data_base: usize,
    angles: AngleSet,
    strategy: FanoutStrategy,
    circ: Circuit,
    next_cbit: usize,
    outcome_cbits: Vec<Vec<usize>>,
    fanout_cbits: Vec<usize>,
}

impl<'p> EncodedEmitter<'p> {
    fn new(params: &'p HammingParams, strategy: FanoutStrategy, data_base: usize, num_qubits: usize) -> Self {
        EncodedEmitter {
            params,
            data_base,
            angles: AngleSet::new(params),
            strategy,
            circ: Circuit::new(num_qubits, 0),
            next_cbit: 0,
            outcome_cbits: Vec::new(),
            fanout_cbits: Vec::new(),
        }
    }

    fn take_cbits(&mut self, count: usize) -> Vec<usize> {
        let out: Vec<usize> = (self.next_cbit..self.next_cbit + count).collect();
        self.next_cbit += count;
        self.circ.num_cbits = self.next_cbit;
        out
    }

    fn round(&mut self, level: usize, r: Round<'_>) {
        let k = self.params.k;
        let j = k - 1 - level;
        let s = r.block.len();
        self.circ.h(r.block[0]);
        let fan_cbits = self.take_cbits(self.strategy.helpers_needed(s));
        emit_fanout(&mut self.circ, r.block, r.helpers, &fan_cbits, self.strategy, r.reuse);
        self.fanout_cbits.extend(&fan_cbits);
        self.circ.rz(self.angles.gammas[j], r.block[0]);
        // Round-robin: data qubit i is driven by block member i mod s.
        for t in 0..self.params.n {
            self.circ.crz(self.angles.betas[j], r.block[t % s], self.data_base + t);
        }
        let level_cbits = self.take_cbits(s);
        let prior = self.outcome_cbits.clone();
        emit_semiclassical_level(&mut self.circ, level, r.block, &prior, &level_cbits, r.reuse && !r.last);
        self.outcome_cbits.push(level_cbits);
    }
}

/// Depth–width tradeoff without resets: `k` blocks of `s` qubits and fresh
/// helpers per block. Qubits: block for `C_j` at `(j-1)s..js`, data
/// `ks..ks+n`, then helpers.
///
/// Rounds are emitted in transform order (highest-weight block first). The
/// blocks touch disjoint qubits, so this order has the same operator as
/// preparing every block before the transform.
pub fn build_alg2_tradeoff_with(params: &HammingParams, strategy: FanoutStrategy) -> BuiltCircuit {
    let HammingParams { n, k, s, .. } = *params;
    let per_block = strategy.helpers_needed(s);
    let blocks: Vec<Vec<usize>> = (0..k).map(|j| (j * s..(j + 1) * s).collect()).collect();
    let data_base = k * s;
    let helper_base = data_base + n;
    let helpers: Vec<Vec<usize>> = (0..k)
        .map(|j| (helper_base + j * per_block..helper_base + (j + 1) * per_block).collect())
        .collect();
    let mut em = EncodedEmitter::new(params, strategy, data_base, helper_base + k * per_block);
    for level in 0..k {
        let j = k - 1 - level;
        em.round(level, Round { block: &blocks[j], helpers: &helpers[j], reuse: false, last: level + 1 == k });
    }
    BuiltCircuit {
        variant: Variant::Tradeoff,
        params: *params,
        circuit: em.circ,
        layout: LayoutMap {
            data_qubits: (data_base..helper_base).collect(),
            control_blocks: blocks,
            helper_qubits: helpers.concat(),
            outcome_cbits: em.outcome_cbits,
            fanout_cbits: em.fanout_cbits,
            ..Default::default()
        },
    }
}

pub fn build_alg2_tradeoff(params: &HammingParams) -> BuiltCircuit {
    build_alg2_tradeoff_with(params, FanoutStrategy::MeasurementBased)
}

/// Sequential construction reusing one `s`-qubit block (and its helpers)
/// across all `k` rounds. Qubits: block `0..s`, data `s..s+n`, helpers after.
/// The depth-optimal configuration is `s = n`.
pub fn build_alg2_resets_with(params: &HammingParams, strategy: FanoutStrategy) -> BuiltCircuit {
    let HammingParams { n, k, s, .. } = *params;
    let block: Vec<usize> = (0..s).collect();
    let helpers: Vec<usize> = (s + n..s + n + strategy.helpers_needed(s)).collect();
    let mut em = EncodedEmitter::new(params, strategy, s, s + n + helpers.len());
    for level in 0..k {
        em.round(level, Round { block: &block, helpers: &helpers, reuse: true, last: level + 1 == k });
    }
    BuiltCircuit {
        variant: Variant::Resets,
        params: *params,
        circuit: em.circ,
        layout: LayoutMap {
            data_qubits: (s..s + n).collect(),
            control_blocks: vec![block; k],
            helper_qubits: helpers,
            outcome_cbits: em.outcome_cbits,
            fanout_cbits: em.fanout_cbits,
            ..Default::default()
        },
    }
}

pub fn build_alg2_resets(params: &HammingParams) -> BuiltCircuit {
    build_alg2_resets_with(params, FanoutStrategy::MeasurementBased)
}

/// Dispatches on `variant`; `params.s` is ignored by the unencoded families.
pub fn build_variant(variant: Variant, params: &HammingParams) -> BuiltCircuit {
    match variant {
        Variant::Alg1 => build_alg1(params),
        Variant::Alg2 => build_alg2(params),
        Variant::Tradeoff => build_alg2_tradeoff(params),
        Variant::Resets => build_alg2_resets(params),
    }
}
