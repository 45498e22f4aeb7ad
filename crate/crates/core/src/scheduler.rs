//! Depth and width accounting.
//!
//! Depth is the number of layers of a greedy as-soon-as-possible schedule.
//! Every gate, measurement and reset costs one layer; global phases and
//! barriers cost none. A classically conditioned gate goes strictly after the
//! layer of each measurement that writes a bit it reads.
//!
//! Conditioned `Rz` gates that follow each other on the same qubit share one
//! layer: together they are a single rotation whose angle the controller
//! computes from the measured bits.

use serde::Serialize;

use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::hamming::{build_alg2_resets, derive_params, HammingParams, LayoutMap, ParamError};

/// Layer assignment of a circuit's instructions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    /// Instruction indices per layer, in program order within a layer.
    pub layers: Vec<Vec<usize>>,
    /// Global phases and barriers.
    pub zero_depth: Vec<usize>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Instruction order obtained by running the layers one after another.
    pub fn order(&self) -> Vec<usize> {
        self.layers.iter().flatten().copied().collect()
    }
}

fn fusable(inst: &Instruction) -> bool {
    matches!(inst, Instruction::Conditioned { gate, .. } if matches!(**gate, Instruction::Rz { .. }))
}

/// Greedy ASAP layering. Fails on circuits that do not validate.
pub fn layer_circuit(circuit: &Circuit) -> Result<Schedule, CircuitError> {
    circuit.validate()?;
    let mut ready = vec![0usize; circuit.num_qubits];
    // Layer of the last fusable instruction on a qubit, if it was the last.
    let mut fuse_at: Vec<Option<usize>> = vec![None; circuit.num_qubits];
    let mut written_at: Vec<Option<usize>> = vec![None; circuit.num_cbits];
    let mut read_at: Vec<Option<usize>> = vec![None; circuit.num_cbits];
    let mut schedule = Schedule::default();
    let after = |slot: Option<usize>| slot.map_or(0, |l| l + 1);

    for (index, inst) in circuit.instructions.iter().enumerate() {
        match inst {
            Instruction::GlobalPhase(_) => {
                schedule.zero_depth.push(index);
                continue;
            }
            Instruction::Barrier(qs) => {
                let fence: Vec<usize> = if qs.is_empty() { (0..circuit.num_qubits).collect() } else { qs.clone() };
                let floor = fence.iter().map(|&q| ready[q]).max().unwrap_or(0);
                for q in fence {
                    ready[q] = floor;
                    fuse_at[q] = None;
                }
                schedule.zero_depth.push(index);
                continue;
            }
            _ => {}
        }
        let qubits = inst.qubits();
        let reads = inst.cbits_read();
        let classical_floor = reads.iter().map(|&c| after(written_at[c])).max().unwrap_or(0);

        let fused = match (fusable(inst), fuse_at[qubits[0]]) {
            (true, Some(layer)) if classical_floor <= layer => Some(layer),
            _ => None,
        };
        let layer = fused.unwrap_or_else(|| {
            let mut layer = qubits.iter().map(|&q| ready[q]).max().unwrap_or(0).max(classical_floor);
            if let Some(c) = inst.cbit_written() {
                layer = layer.max(after(read_at[c])).max(after(written_at[c]));
            }
            layer
        });

        if schedule.layers.len() <= layer {
            schedule.layers.resize_with(layer + 1, Vec::new);
        }
        schedule.layers[layer].push(index);
        for &q in &qubits {
            ready[q] = ready[q].max(layer + 1);
            fuse_at[q] = fusable(inst).then_some(layer);
        }
        for &c in reads {
            read_at[c] = Some(read_at[c].map_or(layer, |l| l.max(layer)));
        }
        if let Some(c) = inst.cbit_written() {
            written_at[c] = Some(layer);
        }
    }
    Ok(schedule)
}

/// Circuit depth under [`layer_circuit`].
pub fn depth(circuit: &Circuit) -> Result<usize, CircuitError> {
    layer_circuit(circuit).map(|s| s.depth())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub quantum_depth: usize,
    /// Distinct physical control qubits.
    pub control_qubits: usize,
    /// Control qubits alive in one round (the block width).
    pub controls_per_round: usize,
    pub data_qubits: usize,
    pub padding_qubits: usize,
    pub helper_qubits: usize,
    pub total_qubits: usize,
    pub two_qubit_gate_count: usize,
    pub measurement_count: usize,
    pub reset_count: usize,
    pub conditioned_count: usize,
}

pub fn measure_resources(circuit: &Circuit, layout: &LayoutMap) -> Result<ResourceReport, CircuitError> {
    let schedule = layer_circuit(circuit)?;
    let count = |pred: fn(&Instruction) -> bool| circuit.instructions.iter().filter(|i| pred(i)).count();
    Ok(ResourceReport {
        quantum_depth: schedule.depth(),
        control_qubits: layout.control_qubit_count(),
        controls_per_round: layout.control_blocks.iter().map(Vec::len).max().unwrap_or(0),
        data_qubits: layout.data_qubits.len(),
        padding_qubits: layout.padding_qubits.len(),
        helper_qubits: layout.helper_qubits.len(),
        total_qubits: circuit.num_qubits,
        two_qubit_gate_count: count(Instruction::is_two_qubit),
        measurement_count: count(|i| matches!(i, Instruction::Measure { .. })),
        reset_count: count(|i| matches!(i, Instruction::Reset(_))),
        conditioned_count: count(|i| matches!(i, Instruction::Conditioned { .. })),
    })
}

/// How the block width follows `n` in a scaling sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SPolicy {
    One,
    Full,
    Fixed(usize),
    /// `⌈n/d⌉`.
    Divided(usize),
}

impl SPolicy {
    pub fn width(self, n: usize) -> usize {
        match self {
            SPolicy::One => 1,
            SPolicy::Full => n,
            SPolicy::Fixed(s) => s.min(n),
            SPolicy::Divided(d) => n.div_ceil(d.max(1)),
        }
    }
}

impl std::str::FromStr for SPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "one" => Ok(SPolicy::One),
            "n" | "full" => Ok(SPolicy::Full),
            _ => {
                if let Some(d) = s.strip_prefix("n/") {
                    d.parse().ok().filter(|&d| d > 0).map(SPolicy::Divided).ok_or_else(|| format!("bad divisor in `{s}`"))
                } else {
                    s.parse().ok().filter(|&v| v > 0).map(SPolicy::Fixed).ok_or_else(|| {
                        format!("unknown s-policy `{s}` (expected 1, n, n/<d> or a positive integer)")
                    })
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub depth: usize,
    pub total_qubits: usize,
    pub control_qubits: usize,
    pub helper_qubits: usize,
    pub two_qubit_gates: usize,
}

impl ScalingRow {
    /// `depth / ⌈log₂(n+1)⌉`.
    pub fn per_log(&self) -> f64 {
        self.depth as f64 / self.k as f64
    }

    /// `depth / (n·⌈log₂(n+1)⌉)`.
    pub fn per_n_log(&self) -> f64 {
        self.depth as f64 / (self.n * self.k) as f64
    }
}

/// Resources of the reset-based construction (the one Table-style counts
/// assume) over a range of `n`. Builds circuits only, no simulation.
pub fn predicted_scaling(ns: &[usize], policy: SPolicy) -> Result<Vec<ScalingRow>, ParamError> {
    ns.iter()
        .map(|&n| {
            let params: HammingParams = derive_params(n, policy.width(n))?;
            let built = build_alg2_resets(&params);
            let r = measure_resources(&built.circuit, &built.layout).expect("builder output validates");
            Ok(ScalingRow {
                n,
                s: params.s,
                k: params.k,
                depth: r.quantum_depth,
                total_qubits: r.total_qubits,
                control_qubits: r.control_qubits,
                helper_qubits: r.helper_qubits,
                two_qubit_gates: r.two_qubit_gate_count,
            })
        })
        .collect()
}

/// Smallest and largest value of `f` over the rows.
pub fn ratio_bounds(rows: &[ScalingRow], f: fn(&ScalingRow) -> f64) -> (f64, f64) {
    rows.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
