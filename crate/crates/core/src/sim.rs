//! Statevector execution of dynamic circuits.
//!
//! Two execution modes share one instruction loop:
//!
//! * **sampling** follows a single trajectory, drawing measurement outcomes
//!   from a seeded [`SimRng`];
//! * **branching** follows every measurement and reset outcome, producing a
//!   list of [`Branch`]es whose probabilities sum to one.
//!
//! Branching can also run coarse-grained ([`Executor::observed`]): branches
//! that agree on every parity the rest of the circuit (or the caller) will
//! ever read, and whose states coincide, are merged. This keeps verification
//! of measurement-heavy circuits tractable without changing the outcome law.
//!
//! Qubits are allocated lazily in `|0⟩` on first use. When a kept-qubit list
//! is given, any other qubit whose last use is a measurement or reset is
//! dropped from the working state right after that instruction.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Condition, Instruction};
use crate::state::{max_abs_diff, StateVector};

/// Seeded generator used for every sampled run. ChaCha8 output is specified
/// independently of platform and word size, so a seed fixes the whole run.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const DEFAULT_PRUNE: f64 = 1e-14;
pub const DEFAULT_BRANCH_CAP: usize = 1 << 20;
/// Both outcome probabilities below this means the state lost its norm.
pub const DEGENERATE_PROB: f64 = 1e-14;
pub const DEFAULT_MERGE_TOL: f64 = 1e-12;
/// Discarding a qubit at the end of a run requires it to be this close to a
/// basis state.
const DEFINITE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("instruction is not unitary: {0:?}")]
    NotUnitary(Instruction),
    #[error("measurement of qubit {qubit} has degenerate norm (p0={p0:e}, p1={p1:e})")]
    DegenerateNorm { qubit: usize, p0: f64, p1: f64 },
    #[error("input covers {found} qubits, circuit expects {expected}")]
    InputMismatch { expected: usize, found: usize },
    #[error("input qubit list is invalid: {0}")]
    BadInputQubits(String),
    #[error("branch count exceeded cap of {cap}")]
    BranchCap { cap: usize },
    #[error("qubit {qubit} is not in a basis state and cannot be discarded")]
    EntangledDiscard { qubit: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

/// One exhaustively enumerated execution path.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub cbits: Vec<bool>,
    pub state: StateVector,
}

/// A coarse-grained branch: only the requested parities are retained.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedBranch {
    pub probability: f64,
    pub observed: Vec<bool>,
    pub state: StateVector,
}

/// Result of a single measurement or reset step.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub outcome: bool,
    pub prob: f64,
    pub post: StateVector,
}

/// Starting state for a run: `state` covers the listed circuit qubits (its
/// qubit `i` is circuit qubit `qubits[i]`); every other qubit starts in `|0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub qubits: Vec<usize>,
    pub state: StateVector,
}

impl InitialState {
    pub fn full(state: StateVector) -> Self {
        InitialState { qubits: (0..state.num_qubits()).collect(), state }
    }

    pub fn on(qubits: impl Into<Vec<usize>>, state: StateVector) -> Self {
        InitialState { qubits: qubits.into(), state }
    }
}

// ---------------------------------------------------------------------------
// Gate kernels
// ---------------------------------------------------------------------------

fn check_qubit(state: &StateVector, q: usize) -> Result<()> {
    if q >= state.num_qubits() {
        return Err(SimError::QubitOutOfRange { qubit: q, num_qubits: state.num_qubits() });
    }
    Ok(())
}

fn apply_1q(amps: &mut [Complex64], q: usize, m: [[Complex64; 2]; 2]) {
    let mask = 1usize << q;
    for b in 0..amps.len() {
        if b & mask == 0 {
            let a0 = amps[b];
            let a1 = amps[b | mask];
            amps[b] = m[0][0] * a0 + m[0][1] * a1;
            amps[b | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Phases `(e^{-iφ/2}, e^{iφ/2})` of `Rz(φ)` on `|0⟩` and `|1⟩`.
pub fn rz_phases(angle: f64) -> (Complex64, Complex64) {
    (Complex64::from_polar(1.0, -angle / 2.0), Complex64::from_polar(1.0, angle / 2.0))
}

fn apply_rz(amps: &mut [Complex64], q: usize, angle: f64, control: Option<usize>) {
    let (p0, p1) = rz_phases(angle);
    let mask = 1usize << q;
    let cmask = control.map_or(0, |c| 1usize << c);
    for (b, a) in amps.iter_mut().enumerate() {
        if b & cmask == cmask {
            *a *= if b & mask == 0 { p0 } else { p1 };
        }
    }
}

/// Applies a unitary instruction, translating circuit qubits through `slot`.
fn apply_unitary_mapped(
    state: &mut StateVector,
    inst: &Instruction,
    slot: &dyn Fn(usize) -> usize,
) -> Result<()> {
    let amps = state.amps_mut();
    let zero = Complex64::new(0.0, 0.0);
    match inst {
        Instruction::H(q) => {
            let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_1q(amps, slot(*q), [[r, r], [r, -r]]);
        }
        Instruction::X(q) => {
            let mask = 1usize << slot(*q);
            for b in 0..amps.len() {
                if b & mask == 0 {
                    amps.swap(b, b | mask);
                }
            }
        }
        Instruction::Ry { angle, target } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
            apply_1q(amps, slot(*target), [[c, -s], [s, c]]);
        }
        Instruction::Rz { angle, target } => apply_rz(amps, slot(*target), *angle, None),
        Instruction::GlobalPhase(angle) => {
            let ph = Complex64::from_polar(1.0, *angle);
            for a in amps.iter_mut() {
                *a *= ph;
            }
        }
        Instruction::Cnot { control, target } => {
            let cmask = 1usize << slot(*control);
            let tmask = 1usize << slot(*target);
            for b in 0..amps.len() {
                if b & cmask != 0 && b & tmask == 0 {
                    amps.swap(b, b | tmask);
                }
            }
        }
        Instruction::Cz(a, b) => {
            let mask = (1usize << slot(*a)) | (1usize << slot(*b));
            for (i, amp) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *amp = zero - *amp;
                }
            }
        }
        Instruction::Crz { angle, control, target } => {
            apply_rz(amps, slot(*target), *angle, Some(slot(*control)))
        }
        other => return Err(SimError::NotUnitary(other.clone())),
    }
    Ok(())
}

/// Applies a unitary instruction, or a conditioned one whose condition is
/// evaluated against `cbits`.
pub fn apply_instruction(state: &StateVector, inst: &Instruction, cbits: &[bool]) -> Result<StateVector> {
    for q in inst.qubits() {
        check_qubit(state, q)?;
    }
    let mut out = state.clone();
    match inst {
        Instruction::Conditioned { condition, gate } => {
            if !gate.is_unitary() {
                return Err(SimError::NotUnitary(inst.clone()));
            }
            if condition.holds(cbits) {
                apply_unitary_mapped(&mut out, gate, &|q| q)?;
            }
        }
        _ => apply_unitary_mapped(&mut out, inst, &|q| q)?,
    }
    Ok(out)
}

/// Dense operator of a unitary-only circuit, built column by column.
pub fn unitary_matrix(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    circuit.validate()?;
    let dim = 1usize << circuit.num_qubits;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for col in 0..dim {
        let mut s = StateVector::basis(circuit.num_qubits, col);
        for inst in &circuit.instructions {
            apply_unitary_mapped(&mut s, inst, &|q| q)?;
        }
        for (row, a) in s.amps().iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Measurement and reset
// ---------------------------------------------------------------------------

fn outcome_probs(state: &StateVector, q: usize) -> (f64, f64) {
    let p1 = state.prob_one(q);
    let p0 = state.norm_sqr() - p1;
    (p0.max(0.0), p1)
}

fn project(state: &StateVector, q: usize, outcome: bool, prob: f64) -> StateVector {
    let mut post = state.clone();
    let mask = 1usize << q;
    let scale = 1.0 / prob.sqrt();
    for (b, a) in post.amps_mut().iter_mut().enumerate() {
        if (b & mask != 0) == outcome {
            *a *= scale;
        } else {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    post
}

fn split(state: &StateVector, q: usize) -> Result<Vec<Measurement>> {
    let (p0, p1) = outcome_probs(state, q);
    if p0 < DEGENERATE_PROB && p1 < DEGENERATE_PROB {
        return Err(SimError::DegenerateNorm { qubit: q, p0, p1 });
    }
    let total = p0 + p1;
    let mut out = Vec::with_capacity(2);
    for (outcome, p) in [(false, p0), (true, p1)] {
        if p > 0.0 {
            out.push(Measurement { outcome, prob: p / total, post: project(state, q, outcome, p) });
        }
    }
    Ok(out)
}

fn sample(state: &StateVector, q: usize, rng: &mut SimRng) -> Result<Measurement> {
    let (p0, p1) = outcome_probs(state, q);
    if p0 < DEGENERATE_PROB && p1 < DEGENERATE_PROB {
        return Err(SimError::DegenerateNorm { qubit: q, p0, p1 });
    }
    let total = p0 + p1;
    let u: f64 = rng.random();
    let outcome = u * total >= p0;
    let p = if outcome { p1 } else { p0 };
    Ok(Measurement { outcome, prob: p / total, post: project(state, q, outcome, p) })
}

/// Computational-basis measurement of `q` with a Born-rule sample.
pub fn measure_qubit(state: &StateVector, q: usize, rng: &mut SimRng) -> Result<Measurement> {
    check_qubit(state, q)?;
    sample(state, q, rng)
}

/// Both measurement outcomes of `q` that have nonzero probability.
pub fn measure_branches(state: &StateVector, q: usize) -> Result<Vec<Measurement>> {
    check_qubit(state, q)?;
    split(state, q)
}

fn flip_if(m: &mut Measurement, q: usize) {
    if m.outcome {
        apply_unitary_mapped(&mut m.post, &Instruction::X(q), &|x| x).expect("X is unitary");
    }
}

/// Measure-then-flip reset of `q`; the returned outcome is the value seen
/// before the flip.
pub fn reset_qubit(state: &StateVector, q: usize, rng: &mut SimRng) -> Result<Measurement> {
    let mut m = measure_qubit(state, q, rng)?;
    flip_if(&mut m, q);
    Ok(m)
}

/// Reset of `q` in branching mode: one entry per pre-reset outcome.
pub fn reset_branches(state: &StateVector, q: usize) -> Result<Vec<Measurement>> {
    let mut ms = measure_branches(state, q)?;
    for m in &mut ms {
        flip_if(m, q);
    }
    Ok(ms)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Branches whose probability falls below this are dropped.
    pub prune_below: f64,
    pub branch_cap: usize,
    /// Largest entrywise difference for two states to count as equal when
    /// merging coarse-grained branches.
    pub merge_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { prune_below: DEFAULT_PRUNE, branch_cap: DEFAULT_BRANCH_CAP, merge_tol: DEFAULT_MERGE_TOL }
    }
}

/// Working state: amplitudes over the currently live qubits.
#[derive(Clone, Debug)]
struct Register {
    state: StateVector,
    slot_of: Vec<Option<usize>>,
    qubit_at: Vec<usize>,
}

impl Register {
    fn new(num_qubits: usize, init: &InitialState) -> Result<Self> {
        if init.state.num_qubits() != init.qubits.len() {
            return Err(SimError::InputMismatch { expected: init.qubits.len(), found: init.state.num_qubits() });
        }
        let mut slot_of = vec![None; num_qubits];
        for (i, &q) in init.qubits.iter().enumerate() {
            if q >= num_qubits {
                return Err(SimError::BadInputQubits(format!("qubit {q} >= {num_qubits}")));
            }
            if slot_of[q].is_some() {
                return Err(SimError::BadInputQubits(format!("qubit {q} listed twice")));
            }
            slot_of[q] = Some(i);
        }
        Ok(Register { state: init.state.clone(), slot_of, qubit_at: init.qubits.clone() })
    }

    fn ensure(&mut self, q: usize) -> usize {
        match self.slot_of[q] {
            Some(s) => s,
            None => {
                let s = self.qubit_at.len();
                self.state.push_zero_qubit();
                self.slot_of[q] = Some(s);
                self.qubit_at.push(q);
                s
            }
        }
    }

    fn slot(&self, q: usize) -> usize {
        self.slot_of[q].expect("qubit allocated before use")
    }

    fn apply(&mut self, inst: &Instruction) -> Result<()> {
        for q in inst.qubits() {
            self.ensure(q);
        }
        let slot_of = &self.slot_of;
        apply_unitary_mapped(&mut self.state, inst, &|q| slot_of[q].expect("allocated"))
    }

    /// Drops `q`, which must be (numerically) in a basis state.
    fn discard(&mut self, q: usize) -> Result<()> {
        let Some(s) = self.slot_of[q] else { return Ok(()) };
        let p1 = self.state.prob_one(s);
        let value = if p1 <= DEFINITE_TOL {
            false
        } else if p1 >= 1.0 - DEFINITE_TOL {
            true
        } else {
            return Err(SimError::EntangledDiscard { qubit: q });
        };
        self.state.remove_qubit(s, value);
        let norm = self.state.norm_sqr();
        self.state.scale(1.0 / norm.sqrt());
        self.qubit_at.remove(s);
        self.slot_of[q] = None;
        for (i, &other) in self.qubit_at.iter().enumerate().skip(s) {
            self.slot_of[other] = Some(i);
        }
        Ok(())
    }

    /// Final state over `keep`, in that order.
    fn finish(mut self, keep: &[usize]) -> Result<StateVector> {
        for &q in keep {
            self.ensure(q);
        }
        let extra: Vec<usize> = self.qubit_at.iter().copied().filter(|q| !keep.contains(q)).collect();
        for q in extra {
            self.discard(q)?;
        }
        let order: Vec<usize> = keep.iter().map(|&q| self.slot(q)).collect();
        Ok(self.state.permuted(&order))
    }
}

/// Per-circuit bookkeeping computed once before a run.
#[derive(Clone, Debug)]
struct Plan {
    /// Qubits dropped right after instruction `t`.
    release: Vec<Vec<usize>>,
    /// Distinct parity groups read by conditions.
    groups: Vec<Vec<usize>>,
    /// Indices into `groups` read strictly after instruction `t`.
    live_after: Vec<Vec<usize>>,
    /// Whether any cbit is written more than once.
    rewrites_cbits: bool,
}

impl Plan {
    fn new(circuit: &Circuit, keep: &[usize]) -> Self {
        let len = circuit.instructions.len();
        let mut uses: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_at: Vec<Option<usize>> = vec![None; len];
        let mut writes = vec![0usize; circuit.num_cbits];
        for (t, inst) in circuit.instructions.iter().enumerate() {
            if !matches!(inst, Instruction::Barrier(_)) {
                for q in inst.qubits() {
                    uses[q].push(t);
                }
            }
            if let Some(c) = inst.cbit_written() {
                writes[c] += 1;
            }
            if let Instruction::Conditioned { condition, .. } = inst {
                let mut key = condition.cbits.clone();
                key.sort_unstable();
                let idx = groups.iter().position(|g| *g == key).unwrap_or_else(|| {
                    groups.push(key);
                    groups.len() - 1
                });
                group_at[t] = Some(idx);
            }
        }
        // A qubit leaves the register whenever it is in a known basis state
        // and nothing reads that value: after a reset (it comes back as |0⟩
        // on its next use), after a measurement followed by a reset, and
        // after its final measurement unless it is kept.
        let mut release = vec![Vec::new(); len];
        for (q, ts) in uses.iter().enumerate() {
            for (i, &t) in ts.iter().enumerate() {
                let next = ts.get(i + 1).map(|&u| &circuit.instructions[u]);
                let drop = match circuit.instructions[t] {
                    Instruction::Reset(r) if r == q => next.is_some() || !keep.contains(&q),
                    Instruction::Measure { qubit, .. } if qubit == q => match next {
                        Some(Instruction::Reset(r)) => *r == q,
                        Some(_) => false,
                        None => !keep.contains(&q),
                    },
                    _ => false,
                };
                if drop {
                    release[t].push(q);
                }
            }
        }
        let mut live_after = vec![Vec::new(); len];
        let mut live: Vec<usize> = Vec::new();
        for t in (0..len).rev() {
            live_after[t] = live.clone();
            if let Some(g) = group_at[t] {
                if !live.contains(&g) {
                    live.push(g);
                    live.sort_unstable();
                }
            }
        }
        Plan { release, groups, live_after, rewrites_cbits: writes.iter().any(|&w| w > 1) }
    }
}

#[derive(Clone, Debug)]
struct Work {
    prob: f64,
    cbits: Vec<bool>,
    reg: Register,
}

/// Runs one circuit repeatedly under fixed options and kept-qubit list.
#[derive(Clone, Debug)]
pub struct Executor<'c> {
    circuit: &'c Circuit,
    options: RunOptions,
    keep: Vec<usize>,
    plan: Plan,
}

impl<'c> Executor<'c> {
    /// Validates the circuit; the final state covers every qubit.
    pub fn new(circuit: &'c Circuit) -> Result<Self> {
        circuit.validate()?;
        let keep: Vec<usize> = (0..circuit.num_qubits).collect();
        let plan = Plan::new(circuit, &keep);
        Ok(Executor { circuit, options: RunOptions::default(), keep, plan })
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    /// Restricts the final state to `qubits` (in that order). Other qubits are
    /// released once measured for the last time and must end in a basis state.
    pub fn keep(mut self, qubits: impl Into<Vec<usize>>) -> Result<Self> {
        let keep = qubits.into();
        for &q in &keep {
            if q >= self.circuit.num_qubits {
                return Err(SimError::QubitOutOfRange { qubit: q, num_qubits: self.circuit.num_qubits });
            }
        }
        self.plan = Plan::new(self.circuit, &keep);
        self.keep = keep;
        Ok(self)
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    /// One sampled trajectory.
    pub fn sample(&self, init: &InitialState, rng: &mut SimRng) -> Result<(Vec<bool>, StateVector)> {
        let mut work = Work {
            prob: 1.0,
            cbits: vec![false; self.circuit.num_cbits],
            reg: Register::new(self.circuit.num_qubits, init)?,
        };
        for (t, inst) in self.circuit.instructions.iter().enumerate() {
            match inst {
                Instruction::Measure { qubit, cbit } => {
                    let s = work.reg.ensure(*qubit);
                    let m = sample(&work.reg.state, s, rng)?;
                    work.reg.state = m.post;
                    work.cbits[*cbit] = m.outcome;
                }
                Instruction::Reset(q) => {
                    let s = work.reg.ensure(*q);
                    let mut m = sample(&work.reg.state, s, rng)?;
                    flip_if(&mut m, s);
                    work.reg.state = m.post;
                }
                _ => step_unitary(&mut work, inst)?,
            }
            for &q in &self.plan.release[t] {
                work.reg.discard(q)?;
            }
        }
        let state = work.reg.finish(&self.keep)?;
        Ok((work.cbits, state))
    }

    /// Exhaustive branch enumeration with full classical records.
    pub fn branches(&self, init: &InitialState) -> Result<Vec<Branch>> {
        let works = self.enumerate(init, None)?;
        works
            .into_iter()
            .map(|w| Ok(Branch { probability: w.prob, cbits: w.cbits, state: w.reg.finish(&self.keep)? }))
            .collect()
    }

    /// Coarse-grained enumeration keeping only the parities of `observe`.
    ///
    /// Branches are merged when they agree on those parities and on every
    /// parity a later condition reads, and their states agree within
    /// `merge_tol`. The result has the same outcome law as [`Self::branches`]
    /// aggregated over `observe`.
    pub fn observed(&self, init: &InitialState, observe: &[Vec<usize>]) -> Result<Vec<ObservedBranch>> {
        for g in observe {
            if let Some(&c) = g.iter().find(|&&c| c >= self.circuit.num_cbits) {
                return Err(CircuitError::CbitOutOfRange { index: usize::MAX, cbit: c, num_cbits: self.circuit.num_cbits }.into());
            }
        }
        let works = self.enumerate(init, Some(observe))?;
        works
            .into_iter()
            .map(|w| {
                let observed = observe.iter().map(|g| Condition::parity_of(g, &w.cbits)).collect();
                Ok(ObservedBranch { probability: w.prob, observed, state: w.reg.finish(&self.keep)? })
            })
            .collect()
    }

    fn enumerate(&self, init: &InitialState, observe: Option<&[Vec<usize>]>) -> Result<Vec<Work>> {
        let mut works = vec![Work {
            prob: 1.0,
            cbits: vec![false; self.circuit.num_cbits],
            reg: Register::new(self.circuit.num_qubits, init)?,
        }];
        let prune = self.options.prune_below;
        for (t, inst) in self.circuit.instructions.iter().enumerate() {
            let splits = matches!(inst, Instruction::Measure { .. } | Instruction::Reset(_));
            if splits {
                let mut next = Vec::with_capacity(works.len() * 2);
                for mut w in works {
                    let (q, cbit) = match inst {
                        Instruction::Measure { qubit, cbit } => (*qubit, Some(*cbit)),
                        Instruction::Reset(q) => (*q, None),
                        _ => unreachable!(),
                    };
                    let s = w.reg.ensure(q);
                    let outcomes = if cbit.is_some() {
                        split(&w.reg.state, s)?
                    } else {
                        reset_branches(&w.reg.state, s)?
                    };
                    let last = outcomes.len() - 1;
                    for (i, m) in outcomes.into_iter().enumerate() {
                        let prob = w.prob * m.prob;
                        if prob < prune {
                            continue;
                        }
                        let mut child = if i == last {
                            std::mem::replace(&mut w, placeholder())
                        } else {
                            w.clone()
                        };
                        child.prob = prob;
                        child.reg.state = m.post;
                        if let Some(c) = cbit {
                            child.cbits[c] = m.outcome;
                        }
                        next.push(child);
                    }
                }
                works = next;
            } else {
                for w in &mut works {
                    step_unitary(w, inst)?;
                }
            }
            for w in &mut works {
                for &q in &self.plan.release[t] {
                    w.reg.discard(q)?;
                }
            }
            if let Some(observe) = observe {
                if works.len() > 1 {
                    works = self.merge(works, t, observe);
                }
            }
            if works.len() > self.options.branch_cap {
                return Err(SimError::BranchCap { cap: self.options.branch_cap });
            }
        }
        Ok(works)
    }

    fn merge(&self, works: Vec<Work>, t: usize, observe: &[Vec<usize>]) -> Vec<Work> {
        let key_of = |w: &Work| -> Vec<bool> {
            if self.plan.rewrites_cbits {
                return w.cbits.clone();
            }
            self.plan.live_after[t]
                .iter()
                .map(|&g| Condition::parity_of(&self.plan.groups[g], &w.cbits))
                .chain(observe.iter().map(|g| Condition::parity_of(g, &w.cbits)))
                .collect()
        };
        let mut out: Vec<Work> = Vec::with_capacity(works.len());
        let mut by_key: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
        for w in works {
            let key = key_of(&w);
            let bucket = by_key.entry(key).or_default();
            let hit = bucket.iter().copied().find(|&i| {
                let o = &out[i];
                o.reg.qubit_at == w.reg.qubit_at
                    && max_abs_diff(o.reg.state.amps(), w.reg.state.amps()) <= self.options.merge_tol
            });
            match hit {
                Some(i) => out[i].prob += w.prob,
                None => {
                    bucket.push(out.len());
                    out.push(w);
                }
            }
        }
        out
    }
}

fn placeholder() -> Work {
    Work {
        prob: 0.0,
        cbits: Vec::new(),
        reg: Register { state: StateVector::zero(0), slot_of: Vec::new(), qubit_at: Vec::new() },
    }
}

fn step_unitary(w: &mut Work, inst: &Instruction) -> Result<()> {
    match inst {
        Instruction::Barrier(_) => Ok(()),
        Instruction::Conditioned { condition, gate } => {
            if condition.holds(&w.cbits) {
                w.reg.apply(gate)?;
            }
            Ok(())
        }
        _ => w.reg.apply(inst),
    }
}

/// Runs `circuit` once on `input` (covering every qubit), sampling
/// measurement outcomes from a generator seeded with `seed`.
pub fn run_sampled(circuit: &Circuit, input: &StateVector, seed: u64) -> Result<(Vec<bool>, StateVector)> {
    if input.num_qubits() != circuit.num_qubits {
        return Err(SimError::InputMismatch { expected: circuit.num_qubits, found: input.num_qubits() });
    }
    let mut rng = seeded_rng(seed);
    Executor::new(circuit)?.sample(&InitialState::full(input.clone()), &mut rng)
}

/// Enumerates every measurement/reset outcome path of `circuit` on `input`.
pub fn run_branches(circuit: &Circuit, input: &StateVector, prune_below: f64) -> Result<Vec<Branch>> {
    if input.num_qubits() != circuit.num_qubits {
        return Err(SimError::InputMismatch { expected: circuit.num_qubits, found: input.num_qubits() });
    }
    let options = RunOptions { prune_below, ..RunOptions::default() };
    Executor::new(circuit)?.with_options(options).branches(&InitialState::full(input.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> StateVector {
        StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn rz_on_one_picks_up_positive_half_angle() {
        let phi = 0.83;
        let out = apply_instruction(&StateVector::basis(1, 1), &Instruction::Rz { angle: phi, target: 0 }, &[]).unwrap();
        assert!((out.amps()[1] - Complex64::from_polar(1.0, phi / 2.0)).norm() < 1e-15);
        assert_eq!(out.amps()[0], c(0.0, 0.0));
    }

    #[test]
    fn rz_zero_is_exact_identity() {
        let out = apply_instruction(&StateVector::zero(1), &Instruction::Rz { angle: 0.0, target: 0 }, &[]).unwrap();
        assert_eq!(out, StateVector::zero(1));
    }

    #[test]
    fn rz_matrix_is_diag_of_half_angle_phases() {
        for i in 0..8 {
            let phi = -2.0 + 0.61 * i as f64;
            let mut circ = Circuit::new(1, 0);
            circ.rz(phi, 0);
            let m = unitary_matrix(&circ).unwrap();
            assert_eq!(m[(0, 0)], Complex64::from_polar(1.0, -phi / 2.0));
            assert_eq!(m[(1, 1)], Complex64::from_polar(1.0, phi / 2.0));
            assert_eq!(m[(0, 1)], c(0.0, 0.0));
            assert_eq!(m[(1, 0)], c(0.0, 0.0));
        }
    }

    #[test]
    fn errors_on_bad_index_and_non_unitary() {
        let s = StateVector::zero(1);
        assert!(matches!(apply_instruction(&s, &Instruction::H(1), &[]), Err(SimError::QubitOutOfRange { .. })));
        assert!(matches!(
            apply_instruction(&s, &Instruction::Measure { qubit: 0, cbit: 0 }, &[false]),
            Err(SimError::NotUnitary(_))
        ));
    }

    #[test]
    fn conditioned_gate_follows_cbits() {
        let inst = Instruction::conditioned(Condition::parity([0, 1], true), Instruction::X(0));
        let s = StateVector::zero(1);
        assert_eq!(apply_instruction(&s, &inst, &[true, true]).unwrap(), s);
        assert_eq!(apply_instruction(&s, &inst, &[true, false]).unwrap(), StateVector::basis(1, 1));
    }

    #[test]
    fn measure_basis_and_bell() {
        let mut rng = seeded_rng(3);
        let m = measure_qubit(&StateVector::basis(1, 1), 0, &mut rng).unwrap();
        assert_eq!((m.outcome, m.prob, m.post), (true, 1.0, StateVector::basis(1, 1)));

        let bs = measure_branches(&bell(), 0).unwrap();
        assert_eq!(bs.len(), 2);
        for b in &bs {
            assert!((b.prob - 0.5).abs() < 1e-15);
            let expect = if b.outcome { 3 } else { 0 };
            assert!(b.post.approx_eq_mod_phase(&StateVector::basis(2, expect), 1e-15));
        }

        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        for seed in 0..20 {
            let m = measure_qubit(&plus, 0, &mut seeded_rng(seed)).unwrap();
            assert!((m.prob - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_state_is_reported() {
        let mut s = StateVector::zero(1);
        s.amps_mut()[0] = c(1e-9, 0.0);
        assert!(matches!(measure_branches(&s, 0), Err(SimError::DegenerateNorm { .. })));
    }

    #[test]
    fn reset_cases() {
        let mut rng = seeded_rng(0);
        let m = reset_qubit(&StateVector::basis(1, 1), 0, &mut rng).unwrap();
        assert_eq!(m.post, StateVector::zero(1));

        let m = reset_qubit(&StateVector::zero(1), 0, &mut rng).unwrap();
        assert_eq!((m.prob, m.post), (1.0, StateVector::zero(1)));

        let bs = reset_branches(&bell(), 1).unwrap();
        assert_eq!(bs.len(), 2);
        for b in bs {
            assert!((b.prob - 0.5).abs() < 1e-15);
            // The collapse of qubit 0 is retained; qubit 1 is back to |0⟩.
            let expect = if b.outcome { 0b01 } else { 0b00 };
            assert!(b.post.approx_eq_mod_phase(&StateVector::basis(2, expect), 1e-15));
        }
    }

    #[test]
    fn reset_of_bell_in_run_branches_keeps_two_branches() {
        let mut circ = Circuit::new(2, 0);
        circ.reset(1);
        let bs = run_branches(&circ, &bell(), DEFAULT_PRUNE).unwrap();
        assert_eq!(bs.len(), 2);
        assert!((bs.iter().map(|b| b.probability).sum::<f64>() - 1.0).abs() < 1e-12);
        for b in &bs {
            assert_eq!(b.state.prob_one(1), 0.0);
        }
    }

    #[test]
    fn run_sampled_basics() {
        let input = StateVector::from_amps(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let (cbits, out) = run_sampled(&Circuit::new(1, 0), &input, 9).unwrap();
        assert!(cbits.is_empty());
        assert_eq!(out, input);

        let mut circ = Circuit::new(1, 1);
        circ.h(0).measure(0, 0);
        let a = run_sampled(&circ, &StateVector::zero(1), 42).unwrap();
        let b = run_sampled(&circ, &StateVector::zero(1), 42).unwrap();
        assert_eq!(a, b);
        let ones = (0..200).filter(|&s| run_sampled(&circ, &StateVector::zero(1), s).unwrap().0[0]).count();
        assert!(ones > 50 && ones < 150);
    }

    #[test]
    fn run_branches_basics() {
        let mut circ = Circuit::new(2, 0);
        circ.h(0).cnot(0, 1).rz(0.3, 1);
        let bs = run_branches(&circ, &StateVector::zero(2), DEFAULT_PRUNE).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs[0].probability, 1.0);

        let mut circ = Circuit::new(1, 1);
        circ.h(0).measure(0, 0);
        let bs = run_branches(&circ, &StateVector::zero(1), DEFAULT_PRUNE).unwrap();
        assert_eq!(bs.len(), 2);
        for b in &bs {
            assert!((b.probability - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn input_mismatch_and_branch_cap() {
        let circ = Circuit::new(2, 0);
        assert!(matches!(
            run_branches(&circ, &StateVector::zero(1), 0.0),
            Err(SimError::InputMismatch { expected: 2, found: 1 })
        ));
        let mut circ = Circuit::new(3, 3);
        for q in 0..3 {
            circ.h(q).measure(q, q);
        }
        let exec = Executor::new(&circ).unwrap().with_options(RunOptions { branch_cap: 4, ..Default::default() });
        assert_eq!(exec.branches(&InitialState::full(StateVector::zero(3))), Err(SimError::BranchCap { cap: 4 }));
    }

    #[test]
    fn lazy_allocation_and_release() {
        // Qubit 1 is never provided; qubit 2 is measured and discarded.
        let mut circ = Circuit::new(3, 1);
        circ.h(2).cnot(2, 1).measure(2, 0).conditioned(Condition::parity([0], true), Instruction::X(1));
        let exec = Executor::new(&circ).unwrap().keep([0, 1]).unwrap();
        let init = InitialState::on([0], StateVector::basis(1, 1));
        let bs = exec.branches(&init).unwrap();
        assert_eq!(bs.len(), 2);
        for b in bs {
            assert_eq!(b.state.num_qubits(), 2);
            assert!(b.state.approx_eq_mod_phase(&StateVector::basis(2, 0b01), 1e-15));
        }
    }

    #[test]
    fn qubits_reused_after_reset() {
        // q1 is measured, reset, and reused; q0 is kept after its own reset.
        let mut circ = Circuit::new(2, 2);
        circ.h(1).measure(1, 0).reset(1).h(1).measure(1, 1).x(0).reset(0).h(0);
        circ.conditioned(Condition::parity([0, 1], true), Instruction::X(1));
        let exec = Executor::new(&circ).unwrap().keep([0, 1]).unwrap();
        let branches = exec.branches(&InitialState::full(StateVector::zero(2))).unwrap();
        assert_eq!(branches.len(), 4);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        for b in &branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
            // The parity flip leaves q1 holding the first outcome.
            let want = plus.tensor(&StateVector::basis(1, b.cbits[0] as usize));
            assert!(b.state.approx_eq_mod_phase(&want, 1e-12), "{:?}", b.cbits);
        }
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let (cbits, state) = exec.sample(&InitialState::full(StateVector::zero(2)), &mut rng).unwrap();
            assert!((state.prob_one(1) - (cbits[0] as u8) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn discarding_entangled_qubit_fails() {
        let mut circ = Circuit::new(2, 0);
        circ.h(1).cnot(1, 0);
        let exec = Executor::new(&circ).unwrap().keep([0]).unwrap();
        assert_eq!(
            exec.branches(&InitialState::full(StateVector::zero(2))),
            Err(SimError::EntangledDiscard { qubit: 1 })
        );
    }

    #[test]
    fn observed_mode_merges_equivalent_paths() {
        // Three H+measure qubits whose parity is the only observable: 8 paths
        // collapse to 2 classes of probability 1/2.
        let mut circ = Circuit::new(3, 3);
        for q in 0..3 {
            circ.h(q).measure(q, q);
        }
        let exec = Executor::new(&circ).unwrap().keep(Vec::<usize>::new()).unwrap();
        let obs = exec.observed(&InitialState::on(Vec::<usize>::new(), StateVector::zero(0)), &[vec![0, 1, 2]]).unwrap();
        assert_eq!(obs.len(), 2);
        for o in obs {
            assert!((o.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn observed_mode_keeps_distinct_states_apart() {
        // Measuring half of a Bell pair without observing the bit leaves a
        // genuine mixture on the kept qubit.
        let mut circ = Circuit::new(2, 1);
        circ.h(0).cnot(0, 1).measure(1, 0);
        let exec = Executor::new(&circ).unwrap().keep([0]).unwrap();
        let obs = exec.observed(&InitialState::full(StateVector::zero(2)), &[]).unwrap();
        assert_eq!(obs.len(), 2);
    }

    #[test]
    fn crz_on_zero_target_reduces_to_rz() {
        // CRz(φ) with a |0⟩ target equals Rz(-φ/2) on the control, up to phase.
        let input = StateVector::from_amps(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        for i in 0..16 {
            let phi = 2.0 * PI * i as f64 / 16.0 - PI;
            let a = apply_instruction(&input, &Instruction::Crz { angle: phi, control: 0, target: 1 }, &[]).unwrap();
            let b = apply_instruction(&input, &Instruction::Rz { angle: -phi / 2.0, target: 0 }, &[]).unwrap();
            assert!(a.approx_eq_mod_phase(&b, 1e-14));
        }
    }

    #[test]
    fn ry_rotates_towards_one() {
        let out = apply_instruction(&StateVector::zero(1), &Instruction::Ry { angle: PI / 2.0, target: 0 }, &[]).unwrap();
        assert!((out.amps()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amps()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
