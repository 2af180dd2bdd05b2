//! QEC codes and the compilation of target contracts into objectives.
//!
//! Ships the three-qubit bit-flip and phase-flip codes, the five-qubit code
//! and the seven-qubit Steane code: codewords, elementary-error bases with
//! hierarchy levels, and stabilizer lists. The `*_objective` constructors
//! turn a code plus a contract into an [`Objective`] ready for evaluation
//! and optimization.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::objective::{BracketSpec, Combine, Objective, ObjectiveKind, Term};
use crate::tensor::{kron, sigma_x, sigma_y, sigma_z, ComplexOperator, StateVector};

/// A Pauli string over the code qubits, e.g. `XZZXI`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString(pub String);

impl PauliString {
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() || !s.chars().all(|c| "IXYZ".contains(c)) {
            return Err(Error::ConfigInvalid(format!("invalid Pauli string `{s}`")));
        }
        Ok(Self(s.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Dense operator representation on `self.len()` qubits.
    pub fn to_operator(&self) -> Result<ComplexOperator> {
        let mut out: Option<ComplexOperator> = None;
        for c in self.0.chars() {
            let factor = match c {
                'I' => ComplexOperator::identity(1)?,
                'X' => sigma_x(),
                'Y' => sigma_y(),
                'Z' => sigma_z(),
                _ => unreachable!(),
            };
            out = Some(match out {
                None => factor,
                Some(prev) => kron(&prev, &factor)?,
            });
        }
        Ok(out.unwrap())
    }

    /// Whether two Pauli strings commute (count anticommuting positions).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .0
            .chars()
            .zip(other.0.chars())
            .filter(|(a, b)| *a != 'I' && *b != 'I' && a != b)
            .count();
        anti % 2 == 0
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One elementary correctable error with its hierarchy level.
#[derive(Debug, Clone)]
pub struct ElementaryError {
    /// 0 = no incorrect qubit (identity), 1 = one incorrect qubit.
    pub level: usize,
    pub label: String,
    pub op: ComplexOperator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeName {
    ThreeBitFlip,
    ThreePhaseFlip,
    FiveQubit,
    Steane,
}

impl CodeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodeName::ThreeBitFlip => "three_bitflip",
            CodeName::ThreePhaseFlip => "three_phaseflip",
            CodeName::FiveQubit => "five_qubit",
            CodeName::Steane => "steane",
        }
    }
}

impl std::str::FromStr for CodeName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three_bitflip" => Ok(CodeName::ThreeBitFlip),
            "three_phaseflip" => Ok(CodeName::ThreePhaseFlip),
            "five_qubit" => Ok(CodeName::FiveQubit),
            "steane" => Ok(CodeName::Steane),
            other => Err(Error::UnknownCode(other.to_string())),
        }
    }
}

/// A QEC code: codewords, error basis, stabilizers and auxiliary layout.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub name: CodeName,
    pub n_code_qubits: usize,
    pub n_aux_qubits: usize,
    /// Initial auxiliary state, `|1…1⟩` by default.
    pub aux_init: StateVector,
    pub codewords: [StateVector; 2],
    pub errors: Vec<ElementaryError>,
    pub stabilizers: Vec<PauliString>,
}

fn state_from_terms(n: usize, terms: &[(&str, f64)], scale: f64) -> StateVector {
    let mut amps = ndarray::Array1::zeros(1usize << n);
    for (bits, sign) in terms {
        let idx = usize::from_str_radix(bits, 2).unwrap();
        amps[idx] = C64::new(sign * scale, 0.0);
    }
    StateVector::new(n, amps).unwrap()
}

fn complement_state(v: &StateVector) -> StateVector {
    let dim = v.dim();
    let mut amps = ndarray::Array1::zeros(dim);
    for (i, a) in v.amps().iter().enumerate() {
        amps[dim - 1 - i] = *a;
    }
    StateVector::new(v.n_qubits(), amps).unwrap()
}

fn plus_minus_codewords(n: usize) -> [StateVector; 2] {
    // |±…±⟩ built from uniform amplitudes with parity signs.
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    let mut plus = ndarray::Array1::zeros(dim);
    let mut minus = ndarray::Array1::zeros(dim);
    for i in 0..dim {
        plus[i] = C64::new(scale, 0.0);
        let parity = (i as u32).count_ones() % 2;
        minus[i] = C64::new(if parity == 0 { scale } else { -scale }, 0.0);
    }
    [
        StateVector::new(n, plus).unwrap(),
        StateVector::new(n, minus).unwrap(),
    ]
}

fn pauli_errors_single_qubit(n: usize) -> Vec<ElementaryError> {
    let mut errors = vec![ElementaryError {
        level: 0,
        label: "I".into(),
        op: ComplexOperator::identity(n).unwrap(),
    }];
    for j in 1..=n {
        for (sym, _op) in [("X", 0), ("Y", 1), ("Z", 2)] {
            let mut s = vec!['I'; n];
            s[j - 1] = sym.chars().next().unwrap();
            let string: String = s.into_iter().collect();
            errors.push(ElementaryError {
                level: 1,
                label: format!("{sym}{j}"),
                op: PauliString::parse(&string).unwrap().to_operator().unwrap(),
            });
        }
    }
    errors
}

fn single_axis_errors(n: usize, axis: char) -> Vec<ElementaryError> {
    let mut errors = vec![ElementaryError {
        level: 0,
        label: "I".into(),
        op: ComplexOperator::identity(n).unwrap(),
    }];
    for j in 1..=n {
        let mut s = vec!['I'; n];
        s[j - 1] = axis;
        let string: String = s.into_iter().collect();
        errors.push(ElementaryError {
            level: 1,
            label: format!("{axis}{j}"),
            op: PauliString::parse(&string).unwrap().to_operator().unwrap(),
        });
    }
    errors
}

const FIVE_QUBIT_ZERO: [(&str, f64); 16] = [
    ("00000", 1.0),
    ("10010", 1.0),
    ("01001", 1.0),
    ("10100", 1.0),
    ("01010", 1.0),
    ("11011", -1.0),
    ("00110", -1.0),
    ("11000", -1.0),
    ("11101", -1.0),
    ("00011", -1.0),
    ("11110", -1.0),
    ("01111", -1.0),
    ("10001", -1.0),
    ("01100", -1.0),
    ("10111", -1.0),
    ("00101", 1.0),
];

const STEANE_ZERO: [(&str, f64); 8] = [
    ("0000000", 1.0),
    ("1010101", 1.0),
    ("0110011", 1.0),
    ("1100110", 1.0),
    ("0001111", 1.0),
    ("1011010", 1.0),
    ("0111100", 1.0),
    ("1101001", 1.0),
];

/// Construct one of the built-in codes with its default auxiliary layout.
pub fn builtin_code(name: CodeName) -> CodeSpec {
    match name {
        CodeName::ThreeBitFlip => CodeSpec {
            name,
            n_code_qubits: 3,
            n_aux_qubits: 1,
            aux_init: StateVector::all_ones(1).unwrap(),
            codewords: [
                StateVector::basis(3, 0b000).unwrap(),
                StateVector::basis(3, 0b111).unwrap(),
            ],
            errors: single_axis_errors(3, 'X'),
            stabilizers: vec![
                PauliString::parse("ZZI").unwrap(),
                PauliString::parse("IZZ").unwrap(),
            ],
        },
        CodeName::ThreePhaseFlip => CodeSpec {
            name,
            n_code_qubits: 3,
            n_aux_qubits: 1,
            aux_init: StateVector::all_ones(1).unwrap(),
            codewords: plus_minus_codewords(3),
            errors: single_axis_errors(3, 'Z'),
            stabilizers: vec![
                PauliString::parse("XXI").unwrap(),
                PauliString::parse("IXX").unwrap(),
            ],
        },
        CodeName::FiveQubit => {
            let zero = state_from_terms(5, &FIVE_QUBIT_ZERO, 0.25);
            let one = complement_state(&zero);
            CodeSpec {
                name,
                n_code_qubits: 5,
                n_aux_qubits: 1,
                aux_init: StateVector::all_ones(1).unwrap(),
                codewords: [zero, one],
                errors: pauli_errors_single_qubit(5),
                stabilizers: vec![
                    PauliString::parse("XZZXI").unwrap(),
                    PauliString::parse("IXZZX").unwrap(),
                    PauliString::parse("XIXZZ").unwrap(),
                    PauliString::parse("ZXIXZ").unwrap(),
                ],
            }
        }
        CodeName::Steane => {
            let zero = state_from_terms(7, &STEANE_ZERO, 1.0 / 8f64.sqrt());
            let one = complement_state(&zero);
            CodeSpec {
                name,
                n_code_qubits: 7,
                n_aux_qubits: 1,
                aux_init: StateVector::all_ones(1).unwrap(),
                codewords: [zero, one],
                errors: pauli_errors_single_qubit(7),
                stabilizers: vec![
                    PauliString::parse("IIIXXXX").unwrap(),
                    PauliString::parse("IXXIIXX").unwrap(),
                    PauliString::parse("XIXIXIX").unwrap(),
                    PauliString::parse("IIIZZZZ").unwrap(),
                    PauliString::parse("IZZIIZZ").unwrap(),
                    PauliString::parse("ZIZIZIZ").unwrap(),
                ],
            }
        }
    }
}

/// Construct a built-in code by its CLI name.
pub fn builtin_code_by_name(name: &str) -> Result<CodeSpec> {
    Ok(builtin_code(name.parse()?))
}

impl CodeSpec {
    /// Same code with a different number of auxiliary qubits.
    pub fn with_aux_qubits(mut self, n_aux: usize) -> Result<Self> {
        if n_aux == 0 {
            return Err(Error::ConfigInvalid("need at least one aux qubit".into()));
        }
        self.n_aux_qubits = n_aux;
        self.aux_init = StateVector::all_ones(n_aux)?;
        Ok(self)
    }

    pub fn total_qubits(&self) -> usize {
        self.n_code_qubits + self.n_aux_qubits
    }

    pub fn aux_dim(&self) -> usize {
        1 << self.n_aux_qubits
    }

    /// `α|0_L⟩ + β|1_L⟩`, normalized.
    pub fn logical_state(&self, alpha: C64, beta: C64) -> Result<StateVector> {
        let a = self.codewords[0].scaled(alpha);
        let b = self.codewords[1].scaled(beta);
        let mut amps = a.amps().clone();
        amps += b.amps();
        StateVector::new(self.n_code_qubits, amps)?.normalized()
    }

    /// `E_j |ψ⟩` on the code register.
    pub fn apply_error(&self, error_index: usize, psi: &StateVector) -> Result<StateVector> {
        let err = self.errors.get(error_index).ok_or(Error::IndexOutOfRange {
            index: error_index,
            len: self.errors.len(),
        })?;
        err.op.apply(psi)
    }

    /// `(E_j |ψ⟩) ⊗ aux_init` on the full register.
    pub fn erroneous_input(&self, error_index: usize, psi: &StateVector) -> Result<StateVector> {
        self.apply_error(error_index, psi)?.kron(&self.aux_init)
    }

    /// Eigenvalue (±1) of each stabilizer on `E_j |0_L⟩`.
    pub fn stabilizer_signs(&self, error_index: usize) -> Result<Vec<i8>> {
        let state = self.apply_error(error_index, &self.codewords[0])?;
        let mut signs = Vec::with_capacity(self.stabilizers.len());
        for s in &self.stabilizers {
            let acted = s.to_operator()?.apply(&state)?;
            let overlap = crate::tensor::inner_states(&state, &acted)?;
            signs.push(if overlap.re >= 0.0 { 1 } else { -1 });
        }
        Ok(signs)
    }

    /// The Knill–Laflamme data: for each error pair `(i, j)` the worst
    /// deviation from `⟨a_L|E_i†E_j|b_L⟩ = C_ij·δ_ab`, plus the diagonal
    /// coefficient matrix `C`.
    pub fn knill_laflamme(&self) -> Result<(ndarray::Array2<C64>, f64)> {
        let m = self.errors.len();
        let mut c = ndarray::Array2::zeros((m, m));
        let mut worst = 0.0f64;
        for i in 0..m {
            let ei_0 = self.apply_error(i, &self.codewords[0])?;
            let ei_1 = self.apply_error(i, &self.codewords[1])?;
            for j in 0..m {
                let ej_0 = self.apply_error(j, &self.codewords[0])?;
                let ej_1 = self.apply_error(j, &self.codewords[1])?;
                let c00 = crate::tensor::inner_states(&ei_0, &ej_0)?;
                let c11 = crate::tensor::inner_states(&ei_1, &ej_1)?;
                let c01 = crate::tensor::inner_states(&ei_0, &ej_1)?;
                let c10 = crate::tensor::inner_states(&ei_1, &ej_0)?;
                worst = worst
                    .max(c01.norm())
                    .max(c10.norm())
                    .max((c00 - c11).norm());
                c[[i, j]] = (c00 + c11) * 0.5;
            }
        }
        Ok((c, worst))
    }
}

/// List the stabilizers of a code.
pub fn stabilizer_list(code: &CodeSpec) -> &[PauliString] {
    &code.stabilizers
}

/// Default error→outcome assignment: error list order mapped to auxiliary
/// basis states in ascending order.
pub fn lexicographic_outcome_map(code: &CodeSpec) -> Vec<usize> {
    (0..code.errors.len()).collect()
}

fn aux_basis(code: &CodeSpec, index: usize) -> StateVector {
    StateVector::basis(code.n_aux_qubits, index).unwrap()
}

/// Syndrome objective: maximal exactly when the sequence maps each
/// `E_j|ψ⟩ ⊗ aux_init` to `e^{iφ_j}·E_j|ψ⟩ ⊗ |e_j⟩` with the given
/// error→outcome assignment `outcome_map[j] = e_j`.
pub fn syndrome_objective(code: &CodeSpec, outcome_map: &[usize]) -> Result<Objective> {
    let n_err = code.errors.len();
    if code.aux_dim() < n_err {
        return Err(Error::AuxTooSmall {
            outcomes: n_err,
            capacity: code.aux_dim(),
        });
    }
    if outcome_map.len() != n_err {
        return Err(Error::ConfigInvalid(format!(
            "outcome map covers {} errors, code has {}",
            outcome_map.len(),
            n_err
        )));
    }
    let mut seen = vec![false; code.aux_dim()];
    for &o in outcome_map {
        if o >= code.aux_dim() {
            return Err(Error::ConfigInvalid(format!(
                "outcome index {o} out of range for {} aux qubits",
                code.n_aux_qubits
            )));
        }
        if seen[o] {
            return Err(Error::NonInjectiveOutcomeMap);
        }
        seen[o] = true;
    }
    let mut terms = Vec::with_capacity(n_err);
    for (j, err) in code.errors.iter().enumerate() {
        let outcome = aux_basis(code, outcome_map[j]);
        let mut sides = Vec::with_capacity(2);
        for l in 0..2 {
            let corrupted = err.op.apply(&code.codewords[l])?;
            sides.push(BracketSpec {
                final_state: corrupted.kron(&outcome)?,
                init_state: corrupted.kron(&code.aux_init)?,
            });
        }
        let b = sides.pop().unwrap();
        let a = sides.pop().unwrap();
        terms.push(Term {
            label: err.label.clone(),
            combine: Combine::ProductPerK,
            weight: 1.0,
            a: vec![a],
            b: vec![b],
        });
    }
    let obj = Objective {
        kind: ObjectiveKind::Syndrome,
        n_qubits: code.total_qubits(),
        max_value: n_err as f64,
        terms,
    };
    obj.validate()?;
    Ok(obj)
}

/// Single-stabilizer syndrome objective: two projector pairs, one per
/// eigenvalue sector, with outcomes `outcome_plus`/`outcome_minus` on the
/// auxiliary register. The −1 sector is represented by the first listed
/// error anticommuting with the stabilizer.
pub fn stabilizer_syndrome_objective(
    code: &CodeSpec,
    stabilizer_index: usize,
    outcome_plus: usize,
    outcome_minus: usize,
) -> Result<Objective> {
    if stabilizer_index >= code.stabilizers.len() {
        return Err(Error::IndexOutOfRange {
            index: stabilizer_index,
            len: code.stabilizers.len(),
        });
    }
    if outcome_plus == outcome_minus {
        return Err(Error::NonInjectiveOutcomeMap);
    }
    if outcome_plus >= code.aux_dim() || outcome_minus >= code.aux_dim() {
        return Err(Error::AuxTooSmall {
            outcomes: 2,
            capacity: code.aux_dim(),
        });
    }
    let minus_rep = (0..code.errors.len())
        .find(|&j| code.stabilizer_signs(j).map(|s| s[stabilizer_index]) == Ok(-1))
        .ok_or_else(|| {
            Error::ContractMismatch("no listed error anticommutes with the stabilizer".into())
        })?;
    let mut terms = Vec::new();
    for (sector, error_index, outcome) in [
        ("+1", 0usize, outcome_plus),
        ("-1", minus_rep, outcome_minus),
    ] {
        let out_state = aux_basis(code, outcome);
        let mut sides = Vec::with_capacity(2);
        for l in 0..2 {
            let corrupted = code.errors[error_index].op.apply(&code.codewords[l])?;
            sides.push(BracketSpec {
                final_state: corrupted.kron(&out_state)?,
                init_state: corrupted.kron(&code.aux_init)?,
            });
        }
        let b = sides.pop().unwrap();
        let a = sides.pop().unwrap();
        terms.push(Term {
            label: format!("sector{sector}"),
            combine: Combine::ProductPerK,
            weight: 1.0,
            a: vec![a],
            b: vec![b],
        });
    }
    let obj = Objective {
        kind: ObjectiveKind::Syndrome,
        n_qubits: code.total_qubits(),
        max_value: 2.0,
        terms,
    };
    obj.validate()?;
    Ok(obj)
}

/// Coherent-QEC objective: maximal exactly when the sequence corrects every
/// listed error unitarily, leaving the auxiliary register in an arbitrary
/// error-dependent but logical-state-independent state.
pub fn coherent_objective(code: &CodeSpec) -> Result<Objective> {
    let mut terms = Vec::with_capacity(code.errors.len());
    for err in &code.errors {
        let mut a = Vec::with_capacity(code.aux_dim());
        let mut b = Vec::with_capacity(code.aux_dim());
        for l in 0..2 {
            let corrupted = err.op.apply(&code.codewords[l])?;
            let init = corrupted.kron(&code.aux_init)?;
            let side = if l == 0 { &mut a } else { &mut b };
            for m in 0..code.aux_dim() {
                side.push(BracketSpec {
                    final_state: code.codewords[l].kron(&aux_basis(code, m))?,
                    init_state: init.clone(),
                });
            }
        }
        terms.push(Term {
            label: err.label.clone(),
            combine: Combine::ProductPerK,
            weight: 1.0,
            a,
            b,
        });
    }
    let obj = Objective {
        kind: ObjectiveKind::CoherentQec,
        n_qubits: code.total_qubits(),
        max_value: code.errors.len() as f64,
        terms,
    };
    obj.validate()?;
    Ok(obj)
}

fn gate_is_unitary(gate: &[[C64; 2]; 2]) -> bool {
    let mut defect = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut dot = C64::new(0.0, 0.0);
            for k in 0..2 {
                dot += gate[k][i].conj() * gate[k][j];
            }
            let expect = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            defect = defect.max((dot - expect).norm());
        }
    }
    defect < 1e-10
}

/// Logical-gate objective: maximal exactly when the sequence implements the
/// 2×2 gate on the codewords and maps every listed error onto errors of the
/// same hierarchy level.
pub fn logical_gate_objective(code: &CodeSpec, gate: &[[C64; 2]; 2]) -> Result<Objective> {
    if !gate_is_unitary(gate) {
        return Err(Error::NonUnitaryGate);
    }
    // Ô|l_L⟩: the gate applied in the logical basis.
    let gated: Vec<StateVector> = (0..2)
        .map(|l| {
            let mut amps = code.codewords[0].scaled(gate[0][l]).amps().clone();
            amps += code.codewords[1].scaled(gate[1][l]).amps();
            StateVector::new(code.n_code_qubits, amps).unwrap()
        })
        .collect();
    let mut terms = Vec::new();
    let levels: Vec<usize> = {
        let mut ls: Vec<usize> = code.errors.iter().map(|e| e.level).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    };
    for &h in &levels {
        let level_errors: Vec<usize> = (0..code.errors.len())
            .filter(|&j| code.errors[j].level == h)
            .collect();
        for &j in &level_errors {
            let mut a = Vec::with_capacity(level_errors.len());
            let mut b = Vec::with_capacity(level_errors.len());
            for l in 0..2 {
                let init = code.errors[j].op.apply(&code.codewords[l])?;
                let side = if l == 0 { &mut a } else { &mut b };
                for &k in &level_errors {
                    side.push(BracketSpec {
                        final_state: code.errors[k].op.apply(&gated[l])?,
                        init_state: init.clone(),
                    });
                }
            }
            terms.push(Term {
                label: format!("h{h}:{}", code.errors[j].label),
                combine: Combine::ProductPerK,
                weight: 1.0,
                a,
                b,
            });
        }
    }
    let obj = Objective {
        kind: ObjectiveKind::LogicalGate,
        n_qubits: code.n_code_qubits,
        max_value: terms.len() as f64,
        terms,
    };
    obj.validate()?;
    Ok(obj)
}

/// The logical Hadamard gate matrix.
pub fn hadamard_gate() -> [[C64; 2]; 2] {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// The π/8 gate `diag(1, e^{iπ/4})`.
pub fn pi8_gate() -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    [
        [C64::new(1.0, 0.0), z],
        [z, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
    ]
}

/// Pauli X as a logical gate matrix.
pub fn pauli_x_gate() -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    [[z, o], [o, z]]
}

/// Identity gate matrix.
pub fn identity_gate() -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    [[o, z], [z, o]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::PulseSequence;
    use crate::objective::evaluate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn five_qubit_codeword_amplitudes() {
        let code = builtin_code(CodeName::FiveQubit);
        let zero = &code.codewords[0];
        assert_abs_diff_eq!(zero.amps()[0b00000].re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.amps()[0b11011].re, -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.norm(), 1.0, epsilon = 1e-12);
        let one = &code.codewords[1];
        assert_abs_diff_eq!(one.amps()[0b11111].re, 0.25, epsilon = 1e-15);
        let overlap = crate::tensor::inner_states(zero, one).unwrap();
        assert!(overlap.norm() < 1e-12);
    }

    #[test]
    fn steane_codeword_amplitudes() {
        let code = builtin_code(CodeName::Steane);
        let zero = &code.codewords[0];
        let amp = 1.0 / 8f64.sqrt();
        assert_abs_diff_eq!(zero.amps()[0b1010101].re, amp, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.amps()[0b0110011].re, amp, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_bitflip_knill_laflamme_is_identity() {
        let code = builtin_code(CodeName::ThreeBitFlip);
        let (c, worst) = code.knill_laflamme().unwrap();
        assert!(worst < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(c[[i, j]].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(c[[i, j]].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn knill_laflamme_testable_codes() {
        for name in [CodeName::FiveQubit, CodeName::Steane] {
            let code = builtin_code(name);
            let (_c, worst) = code.knill_laflamme().unwrap();
            assert!(worst < 1e-10, "{name:?}: worst violation {worst}");
        }
    }

    #[test]
    fn stabilizer_lists_match_published_tables() {
        let five = builtin_code(CodeName::FiveQubit);
        assert_eq!(five.stabilizers.len(), 4);
        assert_eq!(five.stabilizers[2].0, "XIXZZ");
        let steane = builtin_code(CodeName::Steane);
        assert_eq!(steane.stabilizers.len(), 6);
        assert_eq!(steane.stabilizers[4].0, "IZZIIZZ");
    }

    #[test]
    fn stabilizers_commute_and_fix_codewords() {
        for name in [
            CodeName::ThreeBitFlip,
            CodeName::ThreePhaseFlip,
            CodeName::FiveQubit,
            CodeName::Steane,
        ] {
            let code = builtin_code(name);
            for (i, a) in code.stabilizers.iter().enumerate() {
                for b in code.stabilizers.iter().skip(i + 1) {
                    assert!(a.commutes_with(b), "{name:?}: {a} vs {b}");
                }
                let op = a.to_operator().unwrap();
                for word in &code.codewords {
                    let acted = op.apply(word).unwrap();
                    let overlap = crate::tensor::inner_states(word, &acted).unwrap();
                    assert_abs_diff_eq!(overlap.re, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn error_hierarchy_levels() {
        let code = builtin_code(CodeName::FiveQubit);
        assert_eq!(code.errors.len(), 16);
        assert_eq!(code.errors[0].level, 0);
        assert_eq!(code.errors[0].label, "I");
        assert!(code.errors[1..].iter().all(|e| e.level == 1));
        let steane = builtin_code(CodeName::Steane);
        assert_eq!(steane.errors.len(), 22);
    }

    #[test]
    fn syndrome_objective_shape_and_bounds() {
        let code = builtin_code(CodeName::ThreeBitFlip)
            .with_aux_qubits(2)
            .unwrap();
        // Natural map from the published circuit convention: I→11, X1→01,
        // X2→10, X3→00.
        let obj = syndrome_objective(&code, &[3, 1, 2, 0]).unwrap();
        assert_eq!(obj.terms.len(), 4);
        assert_abs_diff_eq!(obj.max_value, 4.0);
        // Rank-one partial isometries: each bracket side has unit norm.
        for term in &obj.terms {
            for br in term.a.iter().chain(term.b.iter()) {
                assert_abs_diff_eq!(br.final_state.norm(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(br.init_state.norm(), 1.0, epsilon = 1e-12);
            }
        }
        // Identity sequence scores the identity-error term only when the
        // outcome map sends it to the untouched aux state.
        let seq = PulseSequence::new(5, vec![]).unwrap();
        let phi = evaluate(&obj, &seq).unwrap();
        assert_abs_diff_eq!(phi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn syndrome_objective_rejects_bad_maps() {
        let code = builtin_code(CodeName::ThreeBitFlip)
            .with_aux_qubits(2)
            .unwrap();
        assert!(matches!(
            syndrome_objective(&code, &[0, 1, 2, 2]),
            Err(Error::NonInjectiveOutcomeMap)
        ));
        let one_aux = builtin_code(CodeName::ThreeBitFlip);
        assert!(matches!(
            syndrome_objective(&one_aux, &[0, 1, 2, 3]),
            Err(Error::AuxTooSmall { .. })
        ));
        let five = builtin_code(CodeName::FiveQubit);
        assert!(matches!(
            syndrome_objective(&five, &lexicographic_outcome_map(&five)),
            Err(Error::AuxTooSmall {
                outcomes: 16,
                capacity: 2
            })
        ));
    }

    #[test]
    fn stabilizer_syndrome_two_pairs() {
        let code = builtin_code(CodeName::FiveQubit);
        let obj = stabilizer_syndrome_objective(&code, 0, 0, 1).unwrap();
        assert_eq!(obj.terms.len(), 2);
        assert_abs_diff_eq!(obj.max_value, 2.0);
    }

    #[test]
    fn coherent_objective_shape() {
        let code = builtin_code(CodeName::ThreeBitFlip);
        let obj = coherent_objective(&code).unwrap();
        assert_eq!(obj.terms.len(), 4);
        assert_abs_diff_eq!(obj.max_value, 4.0);
        // The identity sequence does not correct X1.
        let seq = PulseSequence::new(4, vec![]).unwrap();
        let phi = evaluate(&obj, &seq).unwrap();
        assert!(phi < 4.0 - 0.5);
    }

    #[test]
    fn logical_gate_objective_max_values() {
        let five = builtin_code(CodeName::FiveQubit);
        let obj = logical_gate_objective(&five, &hadamard_gate()).unwrap();
        assert_abs_diff_eq!(obj.max_value, 16.0);
        let steane = builtin_code(CodeName::Steane);
        let obj = logical_gate_objective(&steane, &pi8_gate()).unwrap();
        assert_abs_diff_eq!(obj.max_value, 22.0);
    }

    #[test]
    fn logical_identity_attained_by_empty_sequence() {
        let five = builtin_code(CodeName::FiveQubit);
        let obj = logical_gate_objective(&five, &identity_gate()).unwrap();
        let seq = PulseSequence::new(5, vec![]).unwrap();
        let phi = evaluate(&obj, &seq).unwrap();
        assert_abs_diff_eq!(phi, 16.0, epsilon = 1e-10);
    }

    #[test]
    fn non_unitary_gate_rejected() {
        let five = builtin_code(CodeName::FiveQubit);
        let o = C64::new(1.0, 0.0);
        let bad = [[o, o], [o, C64::from_polar(1.0, 0.5)]];
        assert!(matches!(
            logical_gate_objective(&five, &bad),
            Err(Error::NonUnitaryGate)
        ));
    }

    #[test]
    fn unknown_code_name() {
        assert!(matches!(
            builtin_code_by_name("four_qubit"),
            Err(Error::UnknownCode(_))
        ));
    }
}
