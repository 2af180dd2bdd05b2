//! Regression corpus: every published pulse sequence with its contract.
//!
//! Base sequences are embedded in the sequence file format; derived fixtures
//! (cyclic stabilizer permutations, z-rearrangements, inverted-pulse
//! preparation variants) are constructed from them by the documented rules.

use num_complex::Complex64 as C64;

use crate::codes::{builtin_code, hadamard_gate, pi8_gate, CodeName, CodeSpec};
use crate::error::Result;
use crate::gateset::{PulseKind, PulseSequence};
use crate::tensor::StateVector;
use crate::verifier::{
    verify_coherent, verify_logical_gate, verify_stabilizer, verify_state_prep, verify_syndrome,
    VerificationReport,
};

pub const THREE_BITFLIP_SYNDROME: &str = "\
qubits 4
Y -1/2 pi
z 4 -1/2 pi
X -1/4 pi
z 3 1/1 pi
X 3/4 pi
X2 1/4 pi
z 1 1/1 pi
X2 1/4 pi
M 4
R 4
X2 1/4 pi
z 2 1/1 pi
X2 1/4 pi
Y -3/4 pi
z 4 1/1 pi
Y 1/4 pi
M 4
";

pub const THREE_PHASEFLIP_SYNDROME: &str = "\
qubits 4
X 1/4 pi
z 4 1/1 pi
z 3 1/1 pi
X -1/4 pi
X2 1/4 pi
z 1 1/1 pi
X2 1/4 pi
X 1/2 pi
M 4
R 4
X2 1/4 pi
z 2 1/1 pi
X2 1/4 pi
Y 1/1 pi
M 4
";

pub const THREE_BITFLIP_COHERENT: &str = "\
qubits 4
z 2 1/2 pi
X2 1/2 pi
z 2 1/2 pi
z 1 1/2 pi
X 1/2 pi
z 4 1/2 pi
X2 1/2 pi
z 2 1/1 pi
Y -1/4 pi
z 4 1/2 pi
z 1 -1/2 pi
X2 1/2 pi
z 2 1/2 pi
z 1 1/2 pi
R 4
X2 1/2 pi
z 3 1/2 pi
X 1/2 pi
z 2 1/2 pi
X2 1/2 pi
z 1 1/4 pi
z 4 1/2 pi
z 3 -1/2 pi
X2 1/2 pi
z 1 1/2 pi
X 1/2 pi
R 4
";

pub const FIVE_QUBIT_PREP_ZERO: &str = "\
qubits 5
X 1/2 pi
z 5 1/2 pi
X2 1/4 pi
X -1/4 pi
z 1 1/1 pi
z 3 1/1 pi
X2 1/4 pi
X 3/4 pi
z 5 1/2 pi
X -1/2 pi
X2 1/4 pi
z 1 1/1 pi
z 4 1/1 pi
X2 1/4 pi
z 5 1/2 pi
";

/// The five-qubit superposition preparation; the `z 1` angle is the open
/// parameter (2α).
pub fn five_qubit_superposition_text(alpha: f64) -> String {
    format!(
        "\
qubits 5
Y 1/2 pi
z 3 -1/2 pi
z 5 1/2 pi
Y2 1/2 pi
z 4 1/2 pi
X 1/2 pi
z 1 1/2 pi
Y2 1/2 pi
z 3 1/2 pi
z 2 1/2 pi
Y 1/2 pi
z 1 {}
Y -1/2 pi
Y2 1/2 pi
z 1 1/2 pi
",
        crate::cli::seqfile::format_angle(2.0 * alpha)
    )
}

/// Variant with the first collective pulse inverted, yielding
/// `cos(α)|0_L⟩ − sin(α)|1_L⟩`.
pub fn five_qubit_superposition_variant_text(alpha: f64) -> String {
    five_qubit_superposition_text(alpha).replacen("Y 1/2 pi", "Y -1/2 pi", 1)
}

pub const FIVE_QUBIT_STABILIZER_1: &str = "\
qubits 6
X -1/2 pi
z 2 1/2 pi
z 3 1/2 pi
X 1/4 pi
X2 1/4 pi
z 5 1/1 pi
X2 1/4 pi
z 6 1/1 pi
X 1/4 pi
z 2 1/2 pi
z 3 1/2 pi
X -1/2 pi
z 5 1/1 pi
M 6
";

pub const FIVE_QUBIT_ALL_STABILIZERS: &str = "\
qubits 6
z 3 1/2 pi
X 1/2 pi
z 3 1/2 pi
z 2 1/2 pi
X2 1/4 pi
z 5 1/1 pi
X2 1/4 pi
z 2 1/2 pi
X -1/2 pi
z 2 1/2 pi
z 4 1/2 pi
M 6
R 6
X2 1/4 pi
z 1 1/1 pi
X2 1/4 pi
z 3 1/2 pi
M 6
R 6
z 5 1/2 pi
X2 1/4 pi
z 2 1/1 pi
X2 1/4 pi
z 4 1/2 pi
z 1 1/2 pi
M 6
R 6
X -1/2 pi
z 1 1/2 pi
X2 1/4 pi
z 3 1/1 pi
X2 1/4 pi
z 1 1/2 pi
z 5 1/2 pi
X 1/2 pi
z 5 1/2 pi
M 6
";

/// The Steane superposition preparation; the second `z 7` angle is the open
/// parameter (2α − π/2).
pub fn steane_superposition_text(alpha: f64) -> String {
    format!(
        "\
qubits 7
Y 1/2 pi
z 7 1/2 pi
Y2 1/2 pi
z 7 {}
X -1/2 pi
z 1 1/2 pi
z 4 1/2 pi
Y2 1/2 pi
z 7 1/2 pi
z 5 1/2 pi
Y2 1/2 pi
z 3 -1/2 pi
z 4 1/2 pi
Y2 1/2 pi
z 2 1/2 pi
z 7 1/2 pi
Y2 1/2 pi
z 6 1/2 pi
z 4 1/2 pi
X 1/2 pi
Y 1/2 pi
z 7 1/2 pi
z 1 1/2 pi
",
        crate::cli::seqfile::format_angle(2.0 * alpha - std::f64::consts::FRAC_PI_2)
    )
}

pub const STEANE_PREP_ZERO_22: &str = "\
qubits 7
Y -1/2 pi
z 3 1/2 pi
z 4 1/2 pi
X -1/2 pi
z 5 1/2 pi
X2 1/2 pi
z 7 1/2 pi
z 6 1/2 pi
z 3 -1/2 pi
X2 1/2 pi
z 5 1/2 pi
X 1/2 pi
z 7 1/2 pi
z 3 1/2 pi
z 1 1/2 pi
X2 1/2 pi
z 2 1/2 pi
z 3 1/2 pi
X2 1/2 pi
z 5 1/2 pi
z 7 1/2 pi
X -1/2 pi
";

/// `|1_L⟩` from the 22-operation preparation: invert the first pulse.
pub fn steane_prep_one_text() -> String {
    STEANE_PREP_ZERO_22.replacen("Y -1/2 pi", "Y 1/2 pi", 1)
}

pub const STEANE_PREP_ZERO_3MS: &str = "\
qubits 7
Y -1/2 pi
z 6 1/2 pi
z 7 1/2 pi
z 1 1/2 pi
Y2 1/2 pi
X 1/4 pi
z 5 1/1 pi
z 2 1/1 pi
z 7 1/1 pi
X 1/4 pi
Y2 1/2 pi
z 4 1/2 pi
z 3 1/2 pi
z 7 1/2 pi
X 1/4 pi
Y -1/2 pi
z 5 1/2 pi
MSY2 1,3,5,7 1/2 pi
z 7 -1/2 pi
";

pub const STEANE_STABILIZER_1: &str = "\
qubits 8
X 1/4 pi
z 2 1/1 pi
z 8 1/1 pi
X2 1/8 pi
z 3 1/1 pi
z 1 1/1 pi
X 1/4 pi
X2 1/8 pi
z 1 1/1 pi
z 2 1/1 pi
X2 1/8 pi
z 3 1/1 pi
z 1 1/1 pi
X2 1/8 pi
z 1 1/1 pi
M 8
";

pub const STEANE_STABILIZER_4: &str = "\
qubits 8
Y 1/2 pi
X -1/4 pi
z 8 1/2 pi
X2 1/8 pi
z 3 1/1 pi
z 2 1/1 pi
X2 1/8 pi
z 2 1/1 pi
z 1 1/1 pi
X2 1/8 pi
z 2 1/1 pi
z 3 1/1 pi
X2 1/8 pi
z 3 1/1 pi
z 8 1/2 pi
X 3/4 pi
Y 1/2 pi
M 8
";

pub const FIVE_QUBIT_LOGICAL_HADAMARD: &str = "\
qubits 5
z 3 1/2 pi
z 4 1/2 pi
X 1/2 pi
z 3 1/2 pi
Y2 1/2 pi
z 4 1/2 pi
z 1 1/2 pi
X 1/2 pi
z 1 -1/2 pi
Y2 1/2 pi
z 1 1/2 pi
z 2 1/2 pi
X 1/2 pi
Y2 1/2 pi
z 4 1/2 pi
z 1 1/2 pi
Y2 1/2 pi
z 4 1/2 pi
z 2 1/2 pi
";

pub const STEANE_LOGICAL_PI8: &str = "\
qubits 7
X 1/2 pi
z 5 1/2 pi
Y2 1/2 pi
z 5 -1/2 pi
X 1/2 pi
z 5 3/4 pi
Y2 1/2 pi
X -1/4 pi
z 5 1/2 pi
Y2 1/2 pi
X 1/2 pi
Y2 1/2 pi
z 5 1/4 pi
Y 1/2 pi
z 5 1/4 pi
Y2 1/2 pi
X 1/2 pi
Y2 1/2 pi
z 5 1/2 pi
X -1/4 pi
Y2 1/2 pi
";

/// Remap the local-z qubit indices of a sequence (derivation rule for
/// stabilizer variants); other pulses are untouched.
pub fn permute_local_z(seq: &PulseSequence, map: impl Fn(usize) -> usize) -> PulseSequence {
    let mut out = seq.clone();
    for p in &mut out.pulses {
        if let PulseKind::LocalZ(j) = p.kind {
            p.kind = PulseKind::LocalZ(map(j));
        }
    }
    out
}

/// The five-qubit stabilizer sequence for stabilizer `index` (0-based),
/// derived from the first by cyclic permutation of the code-qubit z
/// rotations (the auxiliary z stays put).
pub fn five_qubit_stabilizer_seq(index: usize) -> Result<PulseSequence> {
    let base = crate::cli::seqfile::parse_sequence(FIVE_QUBIT_STABILIZER_1)?;
    let shift = index;
    Ok(permute_local_z(&base, |j| {
        if j <= 5 {
            (j - 1 + shift) % 5 + 1
        } else {
            j
        }
    }))
}

/// Steane stabilizer sequences: 1–3 derive from the first base by
/// rearranging the z(π) pulses onto the identity positions of the target
/// stabilizer, 4–6 likewise from the fourth.
pub fn steane_stabilizer_seq(index: usize) -> Result<PulseSequence> {
    let base = if index < 3 {
        crate::cli::seqfile::parse_sequence(STEANE_STABILIZER_1)?
    } else {
        crate::cli::seqfile::parse_sequence(STEANE_STABILIZER_4)?
    };
    let map: fn(usize) -> usize = match index % 3 {
        0 => |j| j,
        1 => |j| match j {
            1 => 1,
            2 => 4,
            3 => 5,
            other => other,
        },
        _ => |j| match j {
            1 => 2,
            2 => 4,
            3 => 6,
            other => other,
        },
    };
    Ok(permute_local_z(&base, map))
}

/// `|1_L⟩` preparation for the five-qubit code: the first three collective
/// X pulses and the final z₅ of the `|0_L⟩` sequence are inverted.
pub fn five_qubit_prep_one_seq() -> Result<PulseSequence> {
    let mut seq = crate::cli::seqfile::parse_sequence(FIVE_QUBIT_PREP_ZERO)?;
    let mut x_seen = 0;
    for p in &mut seq.pulses {
        if p.kind == PulseKind::GlobalX && x_seen < 3 {
            p.theta = -p.theta;
            x_seen += 1;
        }
    }
    if let Some(last_z5) = seq
        .pulses
        .iter_mut()
        .rev()
        .find(|p| p.kind == PulseKind::LocalZ(5))
    {
        last_z5.theta = -last_z5.theta;
    }
    Ok(seq)
}

/// What a state-preparation fixture must produce.
#[derive(Debug, Clone)]
pub enum PrepTarget {
    CodeZero(CodeName),
    CodeOne(CodeName),
    /// sin(α)|0_L⟩ + cos(α)|1_L⟩ for the five-qubit code.
    FiveSuperposition { alpha: f64 },
    /// cos(α)|0_L⟩ − sin(α)|1_L⟩ (inverted first pulse).
    FiveSuperpositionVariant { alpha: f64 },
    /// cos(α)|0_L⟩ + sin(α)|1_L⟩ for the Steane code.
    SteaneSuperposition { alpha: f64 },
}

impl PrepTarget {
    pub fn resolve(&self) -> Result<StateVector> {
        let re = |x: f64| C64::new(x, 0.0);
        match self {
            PrepTarget::CodeZero(name) => Ok(builtin_code(*name).codewords[0].clone()),
            PrepTarget::CodeOne(name) => Ok(builtin_code(*name).codewords[1].clone()),
            PrepTarget::FiveSuperposition { alpha } => {
                builtin_code(CodeName::FiveQubit).logical_state(re(alpha.sin()), re(alpha.cos()))
            }
            PrepTarget::FiveSuperpositionVariant { alpha } => builtin_code(CodeName::FiveQubit)
                .logical_state(re(alpha.cos()), re(-alpha.sin())),
            PrepTarget::SteaneSuperposition { alpha } => {
                builtin_code(CodeName::Steane).logical_state(re(alpha.cos()), re(alpha.sin()))
            }
        }
    }
}

/// A contract a fixture is verified against.
#[derive(Debug, Clone)]
pub enum Contract {
    Syndrome { code: CodeName },
    Stabilizer { code: CodeName, index: usize },
    Coherent { code: CodeName },
    StatePrep { target: PrepTarget },
    LogicalHadamard { code: CodeName },
    LogicalPi8 { code: CodeName },
}

/// One regression fixture: a published sequence and its contract.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub seq: PulseSequence,
    pub contract: Contract,
}

fn parse(name: &str, text: &str, contract: Contract) -> Fixture {
    Fixture {
        name: name.to_string(),
        seq: crate::cli::seqfile::parse_sequence(text).expect(name),
        contract,
    }
}

/// Every published sequence with its contract.
pub fn regression_corpus() -> Vec<Fixture> {
    let mut fixtures = vec![
        parse(
            "three_bitflip_syndrome",
            THREE_BITFLIP_SYNDROME,
            Contract::Syndrome {
                code: CodeName::ThreeBitFlip,
            },
        ),
        parse(
            "three_phaseflip_syndrome",
            THREE_PHASEFLIP_SYNDROME,
            Contract::Syndrome {
                code: CodeName::ThreePhaseFlip,
            },
        ),
        parse(
            "three_bitflip_coherent",
            THREE_BITFLIP_COHERENT,
            Contract::Coherent {
                code: CodeName::ThreeBitFlip,
            },
        ),
        parse(
            "five_qubit_prep_zero",
            FIVE_QUBIT_PREP_ZERO,
            Contract::StatePrep {
                target: PrepTarget::CodeZero(CodeName::FiveQubit),
            },
        ),
    ];
    fixtures.push(Fixture {
        name: "five_qubit_prep_one".into(),
        seq: five_qubit_prep_one_seq().expect("five_qubit_prep_one"),
        contract: Contract::StatePrep {
            target: PrepTarget::CodeOne(CodeName::FiveQubit),
        },
    });
    let alpha = std::f64::consts::PI / 5.0;
    fixtures.push(parse(
        "five_qubit_prep_superposition",
        &five_qubit_superposition_text(alpha),
        Contract::StatePrep {
            target: PrepTarget::FiveSuperposition { alpha },
        },
    ));
    for index in 0..4 {
        fixtures.push(Fixture {
            name: format!("five_qubit_stabilizer_{}", index + 1),
            seq: five_qubit_stabilizer_seq(index).expect("five_qubit_stabilizer"),
            contract: Contract::Stabilizer {
                code: CodeName::FiveQubit,
                index,
            },
        });
    }
    fixtures.push(parse(
        "five_qubit_all_stabilizers",
        FIVE_QUBIT_ALL_STABILIZERS,
        Contract::Syndrome {
            code: CodeName::FiveQubit,
        },
    ));
    fixtures.push(parse(
        "steane_prep_superposition",
        &steane_superposition_text(alpha),
        Contract::StatePrep {
            target: PrepTarget::SteaneSuperposition { alpha },
        },
    ));
    fixtures.push(parse(
        "steane_prep_zero_22ops",
        STEANE_PREP_ZERO_22,
        Contract::StatePrep {
            target: PrepTarget::CodeZero(CodeName::Steane),
        },
    ));
    fixtures.push(parse(
        "steane_prep_one",
        &steane_prep_one_text(),
        Contract::StatePrep {
            target: PrepTarget::CodeOne(CodeName::Steane),
        },
    ));
    fixtures.push(parse(
        "steane_prep_zero_3ms",
        STEANE_PREP_ZERO_3MS,
        Contract::StatePrep {
            target: PrepTarget::CodeZero(CodeName::Steane),
        },
    ));
    for index in 0..6 {
        fixtures.push(Fixture {
            name: format!("steane_stabilizer_{}", index + 1),
            seq: steane_stabilizer_seq(index).expect("steane_stabilizer"),
            contract: Contract::Stabilizer {
                code: CodeName::Steane,
                index,
            },
        });
    }
    fixtures.push(parse(
        "five_qubit_logical_hadamard",
        FIVE_QUBIT_LOGICAL_HADAMARD,
        Contract::LogicalHadamard {
            code: CodeName::FiveQubit,
        },
    ));
    fixtures.push(parse(
        "steane_logical_pi8",
        STEANE_LOGICAL_PI8,
        Contract::LogicalPi8 {
            code: CodeName::Steane,
        },
    ));
    fixtures
}

fn contract_code(contract: &Contract) -> Option<CodeSpec> {
    match contract {
        Contract::Syndrome { code }
        | Contract::Stabilizer { code, .. }
        | Contract::Coherent { code }
        | Contract::LogicalHadamard { code }
        | Contract::LogicalPi8 { code } => Some(builtin_code(*code)),
        Contract::StatePrep { .. } => None,
    }
}

/// Verify one fixture against its contract.
pub fn verify_fixture(fixture: &Fixture, tol: f64) -> Result<VerificationReport> {
    match &fixture.contract {
        Contract::Syndrome { .. } => {
            verify_syndrome(&fixture.seq, &contract_code(&fixture.contract).unwrap(), tol)
        }
        Contract::Stabilizer { index, .. } => verify_stabilizer(
            &fixture.seq,
            &contract_code(&fixture.contract).unwrap(),
            *index,
            tol,
        ),
        Contract::Coherent { .. } => {
            verify_coherent(&fixture.seq, &contract_code(&fixture.contract).unwrap(), tol)
        }
        Contract::StatePrep { target } => {
            verify_state_prep(&fixture.seq, &target.resolve()?, tol)
        }
        Contract::LogicalHadamard { .. } => verify_logical_gate(
            &fixture.seq,
            &contract_code(&fixture.contract).unwrap(),
            &hadamard_gate(),
            tol,
        ),
        Contract::LogicalPi8 { .. } => verify_logical_gate(
            &fixture.seq,
            &contract_code(&fixture.contract).unwrap(),
            &pi8_gate(),
            tol,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_enumerates_all_published_sequences() {
        let corpus = regression_corpus();
        assert_eq!(corpus.len(), 23);
        let all_stab = corpus
            .iter()
            .find(|f| f.name == "five_qubit_all_stabilizers")
            .unwrap();
        assert_eq!(all_stab.seq.unitary_count(), 30);
        assert_eq!(all_stab.seq.ms_count(), 8);
        assert_eq!(all_stab.seq.measure_count(), 4);
        assert_eq!(all_stab.seq.reset_count(), 3);
        let steane22 = corpus
            .iter()
            .find(|f| f.name == "steane_prep_zero_22ops")
            .unwrap();
        assert_eq!(steane22.seq.unitary_count(), 22);
        assert_eq!(steane22.seq.ms_count(), 4);
        let stab1 = corpus
            .iter()
            .find(|f| f.name == "five_qubit_stabilizer_1")
            .unwrap();
        assert_eq!(stab1.seq.unitary_count(), 13);
        assert_eq!(stab1.seq.ms_count(), 2);
    }
}
