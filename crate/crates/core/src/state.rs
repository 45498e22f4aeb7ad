//! Pure-state amplitudes over an ordered qubit set.
//!
//! Basis index `b` encodes qubit `q` as bit `q` of `b`; qubit 0 is the least
//! significant bit.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Amplitudes smaller than this are treated as zero when fixing a phase
/// reference.
pub const PHASE_REFERENCE_FLOOR: f64 = 1e-8;

pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm squared {0} differs from 1")]
    NotNormalized(f64),
    #[error("amplitude {index} is not finite")]
    NonFinite { index: usize },
    #[error("state has zero norm")]
    ZeroNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    /// Wraps amplitudes that must already be unit norm.
    pub fn from_amps(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let state = Self::from_amps_unchecked(amps)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Wraps amplitudes and rescales them to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let mut state = Self::from_amps_unchecked(amps)?;
        let norm = state.norm_sqr();
        if norm <= 0.0 {
            return Err(StateError::ZeroNorm);
        }
        state.scale(1.0 / norm.sqrt());
        Ok(state)
    }

    fn from_amps_unchecked(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(len));
        }
        if let Some(index) = amps.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(StateError::NonFinite { index });
        }
        Ok(StateVector { num_qubits: len.trailing_zeros() as usize, amps })
    }

    /// Real amplitudes, rescaled to unit norm.
    pub fn from_real(values: &[f64]) -> Result<Self, StateError> {
        Self::normalized(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Haar-random pure state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << num_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps).expect("gaussian vector has nonzero norm")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`; independent of either global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Copy with the first amplitude of magnitude above
    /// [`PHASE_REFERENCE_FLOOR`] rotated onto the positive real axis.
    pub fn canonical_phase(&self) -> StateVector {
        let mut out = self.clone();
        if let Some(r) = self.amps.iter().find(|a| a.norm() > PHASE_REFERENCE_FLOOR) {
            let rot = r.conj() / r.norm();
            for a in &mut out.amps {
                *a *= rot;
            }
        }
        out
    }

    /// Largest entrywise deviation after both sides are put in canonical phase.
    pub fn distance_mod_phase(&self, other: &StateVector) -> f64 {
        let a = self.canonical_phase();
        let b = other.canonical_phase();
        max_abs_diff(&a.amps, &b.amps)
    }

    pub fn approx_eq_mod_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.dim() == other.dim() && self.distance_mod_phase(other) <= tol
    }

    /// `self ⊗ other` with `self` on the low qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for hi in &other.amps {
            for lo in &self.amps {
                amps.push(lo * hi);
            }
        }
        StateVector { num_qubits: self.num_qubits + other.num_qubits, amps }
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(b, _)| b & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Reorders qubits: qubit `i` of the result is qubit `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> StateVector {
        assert_eq!(order.len(), self.num_qubits, "permutation length");
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (b, a) in self.amps.iter().enumerate() {
            let mut nb = 0usize;
            for (i, &src) in order.iter().enumerate() {
                nb |= ((b >> src) & 1) << i;
            }
            amps[nb] = *a;
        }
        StateVector { num_qubits: self.num_qubits, amps }
    }

    /// Appends a fresh `|0⟩` qubit as the new most significant bit.
    pub(crate) fn push_zero_qubit(&mut self) {
        let len = self.amps.len();
        self.amps.resize(2 * len, Complex64::new(0.0, 0.0));
        self.num_qubits += 1;
    }

    /// Removes qubit `q`, keeping the slice where it reads `value`. The caller
    /// guarantees the other slice is empty.
    pub(crate) fn remove_qubit(&mut self, q: usize, value: bool) {
        let low_mask = (1usize << q) - 1;
        let half = self.amps.len() / 2;
        let bit = (value as usize) << q;
        let amps: Vec<Complex64> = (0..half)
            .map(|i| {
                let src = ((i & !low_mask) << 1) | bit | (i & low_mask);
                self.amps[src]
            })
            .collect();
        self.amps = amps;
        self.num_qubits -= 1;
    }
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
