//! Program representation for dynamic circuits: unitary gates, mid-circuit
//! measurement, reset and parity-conditioned feedback.

use std::fmt;

use thiserror::Error;

/// Classical condition guarding a feedback gate.
///
/// The gate fires when the XOR of the listed classical bits equals `value`.
/// A single-bit equality test is the one-element case.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    pub cbits: Vec<usize>,
    pub value: bool,
}

impl Condition {
    pub fn parity(cbits: impl Into<Vec<usize>>, value: bool) -> Self {
        Condition { cbits: cbits.into(), value }
    }

    /// Parity of the referenced bits; bits that were never written read as 0.
    pub fn parity_of(cbits: &[usize], register: &[bool]) -> bool {
        cbits.iter().fold(false, |acc, &c| acc ^ register[c])
    }

    pub fn holds(&self, register: &[bool]) -> bool {
        Self::parity_of(&self.cbits, register) == self.value
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    H(usize),
    X(usize),
    Ry { angle: f64, target: usize },
    Rz { angle: f64, target: usize },
    GlobalPhase(f64),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Crz { angle: f64, control: usize, target: usize },
    Measure { qubit: usize, cbit: usize },
    Reset(usize),
    Conditioned { condition: Condition, gate: Box<Instruction> },
    Barrier(Vec<usize>),
}

impl Instruction {
    pub fn conditioned(condition: Condition, gate: Instruction) -> Self {
        Instruction::Conditioned { condition, gate: Box::new(gate) }
    }

    /// Unitary variants are the ones that may sit inside a condition.
    pub fn is_unitary(&self) -> bool {
        matches!(
            self,
            Instruction::H(_)
                | Instruction::X(_)
                | Instruction::Ry { .. }
                | Instruction::Rz { .. }
                | Instruction::GlobalPhase(_)
                | Instruction::Cnot { .. }
                | Instruction::Cz(..)
                | Instruction::Crz { .. }
        )
    }

    pub fn is_two_qubit(&self) -> bool {
        match self {
            Instruction::Cnot { .. } | Instruction::Cz(..) | Instruction::Crz { .. } => true,
            Instruction::Conditioned { gate, .. } => gate.is_two_qubit(),
            _ => false,
        }
    }

    /// Qubits acted on. Barriers report their fence set; an empty fence means
    /// every qubit and is expanded by the caller.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::H(q) | Instruction::X(q) | Instruction::Reset(q) => vec![*q],
            Instruction::Ry { target, .. } | Instruction::Rz { target, .. } => vec![*target],
            Instruction::GlobalPhase(_) => Vec::new(),
            Instruction::Cnot { control, target } | Instruction::Crz { control, target, .. } => {
                vec![*control, *target]
            }
            Instruction::Cz(a, b) => vec![*a, *b],
            Instruction::Measure { qubit, .. } => vec![*qubit],
            Instruction::Conditioned { gate, .. } => gate.qubits(),
            Instruction::Barrier(qs) => qs.clone(),
        }
    }

    /// Classical bits read by a condition.
    pub fn cbits_read(&self) -> &[usize] {
        match self {
            Instruction::Conditioned { condition, .. } => &condition.cbits,
            _ => &[],
        }
    }

    pub fn cbit_written(&self) -> Option<usize> {
        match self {
            Instruction::Measure { cbit, .. } => Some(*cbit),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("instruction {index}: qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, qubit: usize, num_qubits: usize },
    #[error("instruction {index}: cbit {cbit} out of range for {num_cbits} cbits")]
    CbitOutOfRange { index: usize, cbit: usize, num_cbits: usize },
    #[error("instruction {index}: cbit {cbit} is read before any measurement writes it")]
    ReadBeforeWrite { index: usize, cbit: usize },
    #[error("instruction {index}: conditioned gate must be unitary")]
    NonUnitaryConditioned { index: usize },
    #[error("instruction {index}: two-qubit gate repeats qubit {qubit}")]
    RepeatedQubit { index: usize, qubit: usize },
    #[error("instruction {index}: angle {angle} is not finite")]
    NonFiniteAngle { index: usize, angle: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_cbits: usize,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize, num_cbits: usize) -> Self {
        Circuit { num_qubits, num_cbits, instructions: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn push(&mut self, inst: Instruction) -> &mut Self {
        self.instructions.push(inst);
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::H(q))
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::X(q))
    }

    pub fn ry(&mut self, angle: f64, target: usize) -> &mut Self {
        self.push(Instruction::Ry { angle, target })
    }

    pub fn rz(&mut self, angle: f64, target: usize) -> &mut Self {
        self.push(Instruction::Rz { angle, target })
    }

    pub fn global_phase(&mut self, angle: f64) -> &mut Self {
        self.push(Instruction::GlobalPhase(angle))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Instruction::Cnot { control, target })
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Instruction::Cz(a, b))
    }

    pub fn crz(&mut self, angle: f64, control: usize, target: usize) -> &mut Self {
        self.push(Instruction::Crz { angle, control, target })
    }

    pub fn measure(&mut self, qubit: usize, cbit: usize) -> &mut Self {
        self.push(Instruction::Measure { qubit, cbit })
    }

    pub fn reset(&mut self, q: usize) -> &mut Self {
        self.push(Instruction::Reset(q))
    }

    pub fn barrier(&mut self, qubits: impl Into<Vec<usize>>) -> &mut Self {
        self.push(Instruction::Barrier(qubits.into()))
    }

    pub fn conditioned(&mut self, condition: Condition, gate: Instruction) -> &mut Self {
        self.push(Instruction::conditioned(condition, gate))
    }

    /// Appends `other`, relabelling its qubits and cbits through the maps.
    pub fn append_mapped(&mut self, other: &Circuit, qubit_map: &[usize], cbit_map: &[usize]) {
        for inst in &other.instructions {
            self.instructions.push(remap(inst, qubit_map, cbit_map));
        }
    }

    /// Checks index bounds, conditioned-gate shape and write-before-read order.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut written = vec![false; self.num_cbits];
        for (index, inst) in self.instructions.iter().enumerate() {
            self.check_instruction(index, inst, &written)?;
            if let Some(c) = inst.cbit_written() {
                written[c] = true;
            }
        }
        Ok(())
    }

    fn check_instruction(
        &self,
        index: usize,
        inst: &Instruction,
        written: &[bool],
    ) -> Result<(), CircuitError> {
        for q in inst.qubits() {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange { index, qubit: q, num_qubits: self.num_qubits });
            }
        }
        match inst {
            Instruction::Cnot { control: a, target: b }
            | Instruction::Crz { control: a, target: b, .. }
            | Instruction::Cz(a, b)
                if a == b =>
            {
                return Err(CircuitError::RepeatedQubit { index, qubit: *a });
            }
            Instruction::Ry { angle, .. }
            | Instruction::Rz { angle, .. }
            | Instruction::Crz { angle, .. }
            | Instruction::GlobalPhase(angle)
                if !angle.is_finite() =>
            {
                return Err(CircuitError::NonFiniteAngle { index, angle: *angle });
            }
            Instruction::Measure { cbit, .. } if *cbit >= self.num_cbits => {
                return Err(CircuitError::CbitOutOfRange { index, cbit: *cbit, num_cbits: self.num_cbits });
            }
            Instruction::Conditioned { condition, gate } => {
                if !gate.is_unitary() {
                    return Err(CircuitError::NonUnitaryConditioned { index });
                }
                for &c in &condition.cbits {
                    if c >= self.num_cbits {
                        return Err(CircuitError::CbitOutOfRange { index, cbit: c, num_cbits: self.num_cbits });
                    }
                    if !written[c] {
                        return Err(CircuitError::ReadBeforeWrite { index, cbit: c });
                    }
                }
                self.check_instruction(index, gate, written)?;
            }
            _ => {}
        }
        Ok(())
    }
}

fn remap(inst: &Instruction, qm: &[usize], cm: &[usize]) -> Instruction {
    use Instruction::*;
    match inst {
        H(q) => H(qm[*q]),
        X(q) => X(qm[*q]),
        Ry { angle, target } => Ry { angle: *angle, target: qm[*target] },
        Rz { angle, target } => Rz { angle: *angle, target: qm[*target] },
        GlobalPhase(a) => GlobalPhase(*a),
        Cnot { control, target } => Cnot { control: qm[*control], target: qm[*target] },
        Cz(a, b) => Cz(qm[*a], qm[*b]),
        Crz { angle, control, target } => Crz { angle: *angle, control: qm[*control], target: qm[*target] },
        Measure { qubit, cbit } => Measure { qubit: qm[*qubit], cbit: cm[*cbit] },
        Reset(q) => Reset(qm[*q]),
        Conditioned { condition, gate } => Conditioned {
            condition: Condition {
                cbits: condition.cbits.iter().map(|c| cm[*c]).collect(),
                value: condition.value,
            },
            gate: Box::new(remap(gate, qm, cm)),
        },
        Barrier(qs) => Barrier(qs.iter().map(|q| qm[*q]).collect()),
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::hwc::emit(self))
    }
}
