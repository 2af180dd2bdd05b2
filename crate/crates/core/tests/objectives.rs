//! Performance-function values on the published sequences: the swap-trick
//! reformulation of measured sequences attains the syndrome maxima, and the
//! gauge invariances hold.

use num_complex::Complex64 as C64;
use qecopt::cli::seqfile::parse_sequence;
use qecopt::codes::{
    builtin_code, coherent_objective, stabilizer_syndrome_objective, syndrome_objective, CodeName,
};
use qecopt::gateset::{to_swap_trick, Pulse, PulseKind, PulseSequence};
use qecopt::objective::{evaluate, EvalContext};
use qecopt::tensor::{expm_hermitian, ComplexOperator, StateVector};
use qecopt::verifier::corpus;

/// Discovered outcome wiring of the published bit-flip syndrome sequence in
/// swap-trick form: the first measurement parks on qubit 5, the second stays
/// on qubit 4, so the (q4,q5) patterns are I→11, X1→01, X2→10, X3→00.
const BITFLIP_SWAP_OUTCOMES: [usize; 4] = [3, 1, 2, 0];

fn bitflip_swap_trick() -> PulseSequence {
    let measured = parse_sequence(corpus::THREE_BITFLIP_SYNDROME).unwrap();
    to_swap_trick(&measured).unwrap()
}

#[test]
fn swap_trick_bitflip_attains_syndrome_maximum() {
    let seq = bitflip_swap_trick();
    assert_eq!(seq.n_qubits, 5);
    assert_eq!(seq.n_active, 4);
    assert_eq!(seq.unitary_count(), 14);
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(2)
        .unwrap();
    let obj = syndrome_objective(&code, &BITFLIP_SWAP_OUTCOMES).unwrap();
    let phi = evaluate(&obj, &seq).unwrap();
    assert!(
        (obj.max_value - phi).abs() < 1e-9,
        "phi {phi} vs max {}",
        obj.max_value
    );
}

#[test]
fn swap_trick_stabilizer_attains_maximum() {
    // The single-stabilizer sequence has only a trailing measurement; its
    // unitary part maps the +1 sector to aux |1⟩ and the −1 sector to |0⟩.
    let measured = parse_sequence(corpus::FIVE_QUBIT_STABILIZER_1).unwrap();
    let seq = to_swap_trick(&measured).unwrap();
    assert_eq!(seq.n_qubits, 6);
    assert_eq!(seq.unitary_count(), 13);
    let code = builtin_code(CodeName::FiveQubit);
    let obj = stabilizer_syndrome_objective(&code, 0, 1, 0).unwrap();
    let phi = evaluate(&obj, &seq).unwrap();
    assert!((2.0 - phi).abs() < 1e-9, "phi {phi}");
}

#[test]
fn coherent_objective_attained_by_published_sequence() {
    // Swap-trick form of the coherent sequence: both resets become parks
    // (they are resets without measurements, so park them by hand).
    let measured = parse_sequence(corpus::THREE_BITFLIP_COHERENT).unwrap();
    let mut pulses = Vec::new();
    let mut park = 5;
    for p in &measured.pulses {
        match p.kind {
            PulseKind::Reset(j) => {
                pulses.push(Pulse::swap_out(j, park));
                park += 1;
            }
            _ => pulses.push(p.clone()),
        }
    }
    let seq = PulseSequence::with_active(6, 4, pulses).unwrap();
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(3)
        .unwrap();
    let obj = coherent_objective(&code).unwrap();
    let phi = evaluate(&obj, &seq).unwrap();
    assert!(
        (obj.max_value - phi).abs() < 1e-9,
        "phi {phi} vs {}",
        obj.max_value
    );
}

#[test]
fn importance_of_essential_pulse_is_large() {
    let seq = bitflip_swap_trick();
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(2)
        .unwrap();
    let obj = syndrome_objective(&code, &BITFLIP_SWAP_OUTCOMES).unwrap();
    let mut ctx = EvalContext::new(obj, &seq).unwrap();
    let z2_index = seq
        .pulses
        .iter()
        .position(|p| p.kind == PulseKind::LocalZ(2))
        .unwrap();
    let importance = ctx.importance(z2_index).unwrap();
    assert!(importance > 0.1, "importance {importance}");
}

#[test]
fn syndrome_phi_invariant_under_outcome_phase_rotation() {
    // Rotating each |e_j⟩ by a phase is pure gauge: Φ is unchanged, and so
    // is maximality. Realized by appending aux-diagonal z rotations.
    let seq = bitflip_swap_trick();
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(2)
        .unwrap();
    let obj = syndrome_objective(&code, &BITFLIP_SWAP_OUTCOMES).unwrap();
    let phi = evaluate(&obj, &seq).unwrap();
    let mut appended = seq.clone();
    appended
        .pulses
        .push(Pulse::unitary(PulseKind::LocalZ(4), 0.7341).unwrap());
    let phi_rotated = evaluate(&obj, &appended).unwrap();
    assert!(
        (phi - phi_rotated).abs() < 1e-10,
        "{phi} vs {phi_rotated}"
    );
}

#[test]
fn coherent_phi_invariant_under_aux_unitary() {
    // Any unitary acting only on the auxiliary register is gauge for the
    // coherent objective.
    let code = builtin_code(CodeName::ThreeBitFlip);
    let obj = coherent_objective(&code).unwrap();
    // A sequence that corrects nothing still works for the invariance check;
    // use a random short sequence.
    let seq = PulseSequence::new(
        4,
        vec![
            Pulse::unitary(PulseKind::MsXX, 0.71).unwrap(),
            Pulse::unitary(PulseKind::LocalZ(2), -1.2).unwrap(),
            Pulse::unitary(PulseKind::GlobalY, 0.4).unwrap(),
        ],
    )
    .unwrap();
    let phi = evaluate(&obj, &seq).unwrap();

    // Append exp(−i·0.9·σ_x/2) on the auxiliary qubit: embed via a
    // z–x–z-free route is unavailable in the gate set, so check the
    // invariance directly on the evaluated brackets by applying the aux
    // unitary to the inputs of a fresh evaluation.
    let aux_rot = expm_hermitian(
        &qecopt::tensor::kron(
            &ComplexOperator::identity(3).unwrap(),
            &qecopt::tensor::sigma_x().scaled(C64::new(0.5, 0.0)),
        )
        .unwrap(),
        0.9,
    )
    .unwrap();
    // V·U: rotate each term's final states by V† instead (equivalent).
    let mut rotated_obj = obj.clone();
    for term in &mut rotated_obj.terms {
        for br in term.a.iter_mut().chain(term.b.iter_mut()) {
            br.final_state = aux_rot.dagger().apply(&br.final_state).unwrap();
        }
    }
    let phi_rot = evaluate(&rotated_obj, &seq).unwrap();
    assert!((phi - phi_rot).abs() < 1e-10, "{phi} vs {phi_rot}");
}

#[test]
fn phi_bounded_by_max_value() {
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(2)
        .unwrap();
    let obj = syndrome_objective(&code, &BITFLIP_SWAP_OUTCOMES).unwrap();
    let mut rng_state = 0x12345u64;
    let mut next = move || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
        ((rng_state >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 1.0
    };
    for _ in 0..10 {
        let pulses: Vec<Pulse> = (0..12)
            .map(|i| {
                let kind = match i % 4 {
                    0 => PulseKind::GlobalX,
                    1 => PulseKind::MsXX,
                    2 => PulseKind::GlobalY,
                    _ => PulseKind::LocalZ(1 + (i / 4) % 5),
                };
                Pulse::unitary(kind, next() * std::f64::consts::PI).unwrap()
            })
            .collect();
        let seq = PulseSequence::new(5, pulses).unwrap();
        let phi = evaluate(&obj, &seq).unwrap();
        assert!(phi <= obj.max_value + 1e-10, "phi {phi}");
    }
}

#[test]
fn state_prep_on_published_five_qubit_sequence() {
    let seq = parse_sequence(corpus::FIVE_QUBIT_PREP_ZERO).unwrap();
    let code = builtin_code(CodeName::FiveQubit);
    let init = StateVector::all_ones(5).unwrap();
    let obj = qecopt::objective::state_prep_objective(&code.codewords[0], &init).unwrap();
    let phi = evaluate(&obj, &seq).unwrap();
    assert!(phi > 1.0 - 1e-9, "phi {phi}");
}
