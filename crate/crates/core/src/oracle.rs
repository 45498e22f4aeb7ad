//! Brute-force ground truth: Hamming-weight projectors as index masks, exact
//! outcome laws, and the pinching identity checked with dense matrices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::hamming::{build_u_y_on, BuiltCircuit};
use crate::sim::{self, seeded_rng, unitary_matrix};
use crate::state::StateVector;

/// Outcomes below this probability are left out of an [`OutcomeReport`].
pub const REPORT_FLOOR: f64 = 1e-14;
/// Post states are compared only for outcomes at least this likely.
pub const POST_STATE_FLOOR: f64 = 1e-10;
/// Largest register for which the pinching check builds dense matrices.
pub const MAX_PINCHING_QUBITS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("weight {x} outside [0, {n}]")]
    WeightOutOfRange { n: usize, x: usize },
    #[error("pinching check needs 1 <= N <= {MAX_PINCHING_QUBITS}, got {0}")]
    PinchingSize(usize),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
}

/// Support of the projector `P_x` on `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMask {
    pub n: usize,
    pub x: usize,
    /// Ascending basis indices of popcount `x`.
    pub indices: Vec<usize>,
}

pub fn weight_mask(n: usize, x: usize) -> Result<WeightMask, OracleError> {
    if x > n {
        return Err(OracleError::WeightOutOfRange { n, x });
    }
    let indices = (0..1usize << n).filter(|b| b.count_ones() as usize == x).collect();
    Ok(WeightMask { n, x, indices })
}

impl WeightMask {
    /// `P_x|ψ⟩`, unnormalized.
    pub fn project(&self, state: &StateVector) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
        for &b in &self.indices {
            out[b] = state.amps()[b];
        }
        out
    }

    pub fn weight(&self, state: &StateVector) -> f64 {
        self.indices.iter().map(|&b| state.amps()[b].norm_sqr()).sum()
    }
}

/// Outcome law of one run: probabilities and post states keyed by weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub probs: BTreeMap<usize, f64>,
    #[serde(skip)]
    pub post_states: BTreeMap<usize, StateVector>,
    pub source: String,
}

impl OutcomeReport {
    pub fn prob(&self, x: usize) -> f64 {
        self.probs.get(&x).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// The coherent Hamming-weight measurement evaluated directly.
pub fn exact_hamming_distribution(state: &StateVector) -> OutcomeReport {
    let n = state.num_qubits();
    let mut probs = BTreeMap::new();
    let mut post_states = BTreeMap::new();
    for x in 0..=n {
        let mask = weight_mask(n, x).expect("x <= n");
        let p = mask.weight(state);
        if p < REPORT_FLOOR {
            continue;
        }
        let post = StateVector::normalized(mask.project(state)).expect("nonzero projection");
        probs.insert(x, p);
        post_states.insert(x, post);
    }
    OutcomeReport { probs, post_states, source: "oracle".to_string() }
}

/// Outcome law of a built circuit from exhaustive branch execution. When one
/// outcome is reached through several inequivalent branches, the most likely
/// branch supplies the reported post state.
pub fn circuit_report(built: &BuiltCircuit, data: &StateVector) -> sim::Result<OutcomeReport> {
    let mut probs: BTreeMap<usize, f64> = BTreeMap::new();
    let mut best: BTreeMap<usize, (f64, StateVector)> = BTreeMap::new();
    for (a, p, state) in built.outcome_branches(data)? {
        *probs.entry(a).or_default() += p;
        if best.get(&a).is_none_or(|(q, _)| p > *q) {
            best.insert(a, (p, state));
        }
    }
    probs.retain(|_, p| *p >= REPORT_FLOOR);
    let post_states = best.into_iter().filter(|(a, _)| probs.contains_key(a)).map(|(a, (_, s))| (a, s)).collect();
    Ok(OutcomeReport { probs, post_states, source: built.variant.name().to_string() })
}

/// Result of comparing a circuit against the oracle on one input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    /// Largest `|p_circuit(a) − p_oracle(a)|` over all register outcomes.
    pub max_prob_dev: f64,
    /// Largest per-outcome infidelity of the post states modulo global phase.
    pub max_infidelity: f64,
    /// Probability of decoded outcomes above `n`.
    pub stray_prob: f64,
    pub tol: f64,
}

impl Verification {
    pub fn max_deviation(&self) -> f64 {
        self.max_prob_dev.max(self.max_infidelity).max(self.stray_prob)
    }
}

/// Runs every branch of `built` on `data` and compares outcome probabilities
/// and post states with [`exact_hamming_distribution`]. Padding qubits must
/// come back in `|0⟩`; this is part of the post-state comparison.
pub fn verify_variant(built: &BuiltCircuit, data: &StateVector, tol: f64) -> sim::Result<Verification> {
    let n = built.params.n;
    let oracle = exact_hamming_distribution(data);
    let padding = StateVector::zero(built.layout.padding_qubits.len());
    let mut probs = vec![0.0; built.params.outcomes()];
    // Per outcome: Σ p_b and Σ p_b |⟨target|φ_b⟩|².
    let mut overlap = vec![(0.0, 0.0); built.params.outcomes()];
    let targets: BTreeMap<usize, StateVector> =
        oracle.post_states.iter().map(|(&x, s)| (x, s.tensor(&padding))).collect();
    for (a, p, state) in built.outcome_branches(data)? {
        probs[a] += p;
        if let Some(target) = targets.get(&a) {
            overlap[a].0 += p;
            overlap[a].1 += p * target.fidelity(&state);
        }
    }
    let mut max_prob_dev: f64 = 0.0;
    let mut stray_prob = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        max_prob_dev = max_prob_dev.max((p - oracle.prob(a)).abs());
        if a > n {
            stray_prob += p;
        }
    }
    let mut max_infidelity: f64 = 0.0;
    for (&x, &p) in &oracle.probs {
        if p < POST_STATE_FLOOR {
            continue;
        }
        let (mass, weighted) = overlap[x];
        let infidelity = if mass > 0.0 { 1.0 - weighted / mass } else { 1.0 };
        max_infidelity = max_infidelity.max(infidelity.max(0.0));
    }
    let passed = max_prob_dev <= tol && max_infidelity <= tol && stray_prob <= tol;
    Ok(Verification { passed, max_prob_dev, max_infidelity, stray_prob, tol })
}

/// Per-bin shot-noise check: every observed frequency lies within `sigmas`
/// binomial standard deviations of the exact probability. Bins with exact
/// probability 0 or 1 must match exactly. Returns the worst bin as
/// `(outcome, |f − p|, allowed)`.
pub fn shot_noise_check(
    counts: &BTreeMap<usize, usize>,
    exact: &BTreeMap<usize, f64>,
    shots: usize,
    sigmas: f64,
) -> (bool, Option<(usize, f64, f64)>) {
    let n = shots as f64;
    let mut ok = true;
    let mut worst: Option<(usize, f64, f64)> = None;
    for a in counts.keys().chain(exact.keys()) {
        let p = exact.get(a).copied().unwrap_or(0.0);
        let f = counts.get(a).copied().unwrap_or(0) as f64 / n;
        let allowed = sigmas * (p * (1.0 - p) / n).max(0.0).sqrt() + 1e-12;
        let gap = (f - p).abs();
        ok &= gap <= allowed;
        if worst.is_none_or(|(_, g, al)| gap / allowed > g / al) {
            worst = Some((*a, gap, allowed));
        }
    }
    (ok, worst)
}

/// Total-variation distance between empirical counts and exact probabilities.
pub fn tv_distance(counts: &BTreeMap<usize, usize>, exact: &BTreeMap<usize, f64>, shots: usize) -> f64 {
    let mut keys: Vec<usize> = counts.keys().chain(exact.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|a| (counts.get(a).copied().unwrap_or(0) as f64 / shots as f64 - exact.get(a).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Seeded random density operator: `G G† / tr(G G†)` with complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let trace = rho.trace();
    rho / trace
}

/// `Σ_x P_x L P_x`: keeps entries whose row and column weights agree.
pub fn pinch(num_qubits: usize, l: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = 1usize << num_qubits;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i.count_ones() == j.count_ones() {
            l[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `(1/(N+1)) Σ_y U_y L U_y†` with each `U_y` taken from its circuit.
pub fn twirl(num_qubits: usize, l: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, OracleError> {
    let dim = 1usize << num_qubits;
    let mut acc = DMatrix::zeros(dim, dim);
    for y in 0..=num_qubits {
        let u = unitary_matrix(&build_u_y_on(num_qubits, y).expect("y <= N"))?;
        acc += &u * l * u.adjoint();
    }
    Ok(acc / Complex64::new((num_qubits + 1) as f64, 0.0))
}

/// Largest entrywise gap between the two sides of the pinching identity.
pub fn pinching_deviation(num_qubits: usize, l: &DMatrix<Complex64>) -> Result<f64, OracleError> {
    if num_qubits == 0 || num_qubits > MAX_PINCHING_QUBITS {
        return Err(OracleError::PinchingSize(num_qubits));
    }
    let lhs = pinch(num_qubits, l);
    let rhs = twirl(num_qubits, l)?;
    Ok((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Pinching identity on `trials` seeded random density operators.
pub fn check_pinching(num_qubits: usize, trials: usize, seed: u64) -> Result<f64, OracleError> {
    if num_qubits == 0 || num_qubits > MAX_PINCHING_QUBITS {
        return Err(OracleError::PinchingSize(num_qubits));
    }
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let rho = random_density(1 << num_qubits, &mut rng);
        worst = worst.max(pinching_deviation(num_qubits, &rho)?);
    }
    Ok(worst)
}
