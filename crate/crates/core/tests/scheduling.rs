use proptest::prelude::*;

use hwproj::hamming::{
    build_alg2, build_alg2_resets, build_fanout, build_semiclassical_iqft, build_variant,
    derive_params, FanoutStrategy, Variant,
};
use hwproj::scheduler::{depth, layer_circuit, measure_resources, predicted_scaling, ratio_bounds, SPolicy, ScalingRow};
use hwproj::sim::seeded_rng;
use hwproj::{Circuit, Instruction, StateVector};

fn is_fused_rz(inst: &Instruction) -> bool {
    matches!(inst, Instruction::Conditioned { gate, .. } if matches!(**gate, Instruction::Rz { .. }))
}

#[test]
fn layers_are_valid_for_builder_outputs() {
    for n in 1..=8 {
        for v in Variant::ALL {
            let built = build_variant(v, &derive_params(n, n.min(3)).unwrap());
            let circ = &built.circuit;
            let schedule = layer_circuit(circ).unwrap();
            let mut layer_of = vec![usize::MAX; circ.len()];
            for (l, layer) in schedule.layers.iter().enumerate() {
                let mut used = vec![None; circ.num_qubits];
                for &i in layer {
                    layer_of[i] = l;
                    for q in circ.instructions[i].qubits() {
                        if let Some(prev) = used[q] {
                            assert!(is_fused_rz(&circ.instructions[prev]) && is_fused_rz(&circ.instructions[i]));
                        }
                        used[q] = Some(i);
                    }
                }
            }
            // Conditioned gates sit after every measurement they read.
            for (i, inst) in circ.instructions.iter().enumerate() {
                for &c in inst.cbits_read() {
                    let writer = (0..i).rev().find(|&j| circ.instructions[j].cbit_written() == Some(c)).unwrap();
                    assert!(layer_of[writer] < layer_of[i]);
                }
            }
        }
    }
}

#[test]
fn layered_replay_matches_program_order() {
    let mut rng = seeded_rng(31);
    for v in Variant::ALL {
        let built = build_variant(v, &derive_params(3, 2).unwrap());
        let schedule = layer_circuit(&built.circuit).unwrap();
        let mut replay = built.clone();
        let mut order = schedule.order();
        order.extend(&schedule.zero_depth);
        replay.circuit.instructions = order.iter().map(|&i| built.circuit.instructions[i].clone()).collect();
        let psi = StateVector::random(3, &mut rng);
        let mut a = built.outcome_branches(&psi).unwrap();
        let mut b = replay.outcome_branches(&psi).unwrap();
        let key = |x: &(usize, f64, StateVector)| (x.0, (x.1 * 1e12) as i64);
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a.len(), b.len(), "{v}");
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
            assert!(x.2.approx_eq_mod_phase(&y.2, 1e-10));
        }
    }
}

#[test]
fn semiclassical_depth_linear_in_k_and_flat_in_s() {
    for k in 1..=6 {
        let depths: Vec<usize> = (1..=8).map(|s| depth(&build_semiclassical_iqft(k, s).unwrap().circuit).unwrap()).collect();
        assert!(depths.iter().all(|&d| d == depths[0]), "k={k}: {depths:?}");
        assert_eq!(depths[0], 3 * k - 1);
    }
}

#[test]
fn measurement_based_fanout_depth_does_not_grow() {
    let d: Vec<usize> = (2..=12).map(|s| depth(&build_fanout(s, FanoutStrategy::MeasurementBased).unwrap()).unwrap()).collect();
    assert!(d.iter().all(|&x| x <= 5), "{d:?}");
    let tree: Vec<usize> = (1..=9).map(|s| depth(&build_fanout(s, FanoutStrategy::Tree).unwrap()).unwrap()).collect();
    assert_eq!(tree, vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
}

#[test]
fn rotation_stage_depth_halves_with_width() {
    let n = 16;
    let k = derive_params(n, 1).unwrap().k;
    let mut totals = Vec::new();
    for s in [1usize, 2, 4, 8, 16] {
        let b = build_alg2_resets(&derive_params(n, s).unwrap());
        let mut stage = Circuit::new(b.circuit.num_qubits, 0);
        for inst in &b.circuit.instructions {
            if matches!(inst, Instruction::Crz { .. }) {
                stage.push(inst.clone());
            }
        }
        assert_eq!(depth(&stage).unwrap(), k * n.div_ceil(s), "s={s}");
        totals.push(measure_resources(&b.circuit, &b.layout).unwrap().quantum_depth);
    }
    assert!(totals.windows(2).all(|w| w[1] < w[0]), "{totals:?}");
}

#[test]
fn resource_examples() {
    let b = build_alg2(&derive_params(4, 1).unwrap());
    let r = measure_resources(&b.circuit, &b.layout).unwrap();
    assert_eq!(r.controls_per_round, 1);
    assert_eq!(r.data_qubits, 4);

    let b = build_alg2_resets(&derive_params(8, 8).unwrap());
    let r = measure_resources(&b.circuit, &b.layout).unwrap();
    assert_eq!(r.control_qubits, 8);
    assert!(r.control_qubits <= 8 + r.helper_qubits);
    assert!(r.reset_count > 0);
}

#[test]
fn table_scaling() {
    let ns = [4, 8, 16, 32, 64];
    let full = predicted_scaling(&ns, SPolicy::Full).unwrap();
    assert!(ratio_bounds(&full, ScalingRow::per_log).1 <= 10.0);
    assert!(full.iter().all(|r| r.control_qubits == r.n));
    let one = predicted_scaling(&ns, SPolicy::One).unwrap();
    let (lo, hi) = ratio_bounds(&one, ScalingRow::per_n_log);
    assert!(lo >= 1.0 && hi <= 3.0);
    assert!(one.iter().all(|r| r.control_qubits == 1));
}

#[test]
fn shared_control_examples() {
    let mut c = Circuit::new(5, 0);
    for t in 0..4 {
        c.crz(0.5, 4, t);
    }
    assert_eq!(depth(&c).unwrap(), 4);
}

fn inst_strategy() -> impl Strategy<Value = Instruction> {
    prop_oneof![
        (0..4usize).prop_map(Instruction::H),
        (0..4usize, 1..4usize).prop_map(|(a, d)| Instruction::Cnot { control: a, target: (a + d) % 4 }),
        (0..4usize, 0..2usize).prop_map(|(qubit, cbit)| Instruction::Measure { qubit, cbit }),
        (0..4usize).prop_map(Instruction::Reset),
        prop::collection::vec(0..4usize, 0..3).prop_map(Instruction::Barrier),
        Just(Instruction::GlobalPhase(0.2)),
    ]
}

proptest! {
    #[test]
    fn adding_instructions_never_lowers_depth(insts in prop::collection::vec(inst_strategy(), 0..40)) {
        let mut c = Circuit::new(4, 2);
        c.measure(0, 0).measure(1, 1);
        let mut last = depth(&c).unwrap();
        for inst in insts {
            c.push(inst);
            let d = depth(&c).unwrap();
            prop_assert!(d >= last);
            last = d;
        }
    }
}
