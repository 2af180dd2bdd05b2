//! Trapped-ion elementary operations and the pulse/sequence data model.
//!
//! The unitary-generating pulses are `exp(−i·θ·H)` with `H` drawn from the
//! collective spin operators `S_x`, `S_y`, the Mølmer–Sørensen generators
//! `S_x²`, `S_y²` (optionally on a qubit subset) and the local `σ_z^(j)/2`.
//! Qubit indices are 1-based and qubit 1 is the leftmost tensor factor.
//!
//! All generators diagonalize in a product basis, so both `exp(−iθH)` and
//! its derivatives act on state vectors in `O(N·2^N)` via per-qubit basis
//! rotations and a diagonal phase pass. The factored eigendecompositions are
//! memoized behind a read-mostly cache keyed by `(kind, N, active)`.
//!
//! A sequence may mark a suffix of its register as *parked*: elementary
//! pulses act on qubits `1..=n_active` only, and `SwapOut` slots exchange an
//! active qubit with a parked one. This is the unitary stand-in for
//! mid-sequence measure-and-reset used when compiling syndrome objectives.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{kron, sigma_x, sigma_y, sigma_z, ComplexOperator, StateVector};

pub const MAX_PULSE_ANGLE: f64 = 4.0 * std::f64::consts::PI;

/// One elementary operation kind, plus the measurement/reset markers and the
/// swap-out wiring slot used by the measurement-free reformulation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PulseKind {
    /// Collective rotation `exp(−iθS_x)`.
    GlobalX,
    /// Collective rotation `exp(−iθS_y)`.
    GlobalY,
    /// Mølmer–Sørensen gate `exp(−iθS_x²)`.
    MsXX,
    /// Mølmer–Sørensen gate `exp(−iθS_y²)`.
    MsYY,
    /// Local phase shift `exp(−iθσ_z^(j)/2)` on qubit `j`.
    LocalZ(usize),
    /// Mølmer–Sørensen gate restricted to a qubit subset.
    SubsetMsYY(Vec<usize>),
    /// Exact swap of two qubits; a fixed wiring slot, not an elementary pulse.
    SwapOut(usize, usize),
    /// Projective measurement of qubit `j` in the computational basis.
    Measure(usize),
    /// Reset of qubit `j` to `|1⟩`; requires the qubit to be disentangled.
    Reset(usize),
}

impl PulseKind {
    /// Kinds generated by `exp(−iθH)` with a tunable angle.
    pub fn is_angle_kind(&self) -> bool {
        matches!(
            self,
            PulseKind::GlobalX
                | PulseKind::GlobalY
                | PulseKind::MsXX
                | PulseKind::MsYY
                | PulseKind::LocalZ(_)
                | PulseKind::SubsetMsYY(_)
        )
    }

    pub fn is_ms(&self) -> bool {
        matches!(
            self,
            PulseKind::MsXX | PulseKind::MsYY | PulseKind::SubsetMsYY(_)
        )
    }

    pub fn is_unitary(&self) -> bool {
        self.is_angle_kind() || matches!(self, PulseKind::SwapOut(_, _))
    }

    /// Period of the generated one-parameter group in the angle.
    pub fn angle_period(&self) -> f64 {
        match self {
            PulseKind::GlobalX | PulseKind::GlobalY | PulseKind::LocalZ(_) => {
                2.0 * std::f64::consts::TAU
            }
            // Squared-spin spectra live on quarter-integers.
            PulseKind::MsXX | PulseKind::MsYY | PulseKind::SubsetMsYY(_) => {
                4.0 * std::f64::consts::TAU
            }
            _ => f64::INFINITY,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PulseKind::GlobalX => "X".into(),
            PulseKind::GlobalY => "Y".into(),
            PulseKind::MsXX => "X2".into(),
            PulseKind::MsYY => "Y2".into(),
            PulseKind::LocalZ(j) => format!("z{j}"),
            PulseKind::SubsetMsYY(s) => {
                let list: Vec<String> = s.iter().map(|q| q.to_string()).collect();
                format!("MSY2[{}]", list.join(","))
            }
            PulseKind::SwapOut(a, b) => format!("SWAP{a},{b}"),
            PulseKind::Measure(j) => format!("M{j}"),
            PulseKind::Reset(j) => format!("R{j}"),
        }
    }
}

impl std::fmt::Display for PulseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// One pulse: a kind plus its angle. The angle is meaningless (and fixed to
/// zero) for `SwapOut`, `Measure` and `Reset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub theta: f64,
}

impl Pulse {
    pub fn unitary(kind: PulseKind, theta: f64) -> Result<Self> {
        if !kind.is_angle_kind() {
            return Err(Error::NotUnitaryKind(kind.label()));
        }
        if !theta.is_finite() || theta.abs() > MAX_PULSE_ANGLE {
            return Err(Error::InvalidPulse(format!(
                "angle {theta} outside ±4π for {kind}"
            )));
        }
        if let PulseKind::SubsetMsYY(subset) = &kind {
            if subset.is_empty() || subset.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidPulse(
                    "subset must be nonempty and strictly increasing".into(),
                ));
            }
        }
        Ok(Self { kind, theta })
    }

    pub fn measure(qubit: usize) -> Self {
        Self {
            kind: PulseKind::Measure(qubit),
            theta: 0.0,
        }
    }

    pub fn reset(qubit: usize) -> Self {
        Self {
            kind: PulseKind::Reset(qubit),
            theta: 0.0,
        }
    }

    pub fn swap_out(active: usize, parked: usize) -> Self {
        Self {
            kind: PulseKind::SwapOut(active, parked),
            theta: 0.0,
        }
    }

    /// Angle wrapped into the fundamental period of the generator. Raw angles
    /// are kept as given elsewhere; equality of pulses is physical, not
    /// textual.
    pub fn canonical_angle(&self) -> f64 {
        let period = self.kind.angle_period();
        if !period.is_finite() {
            return self.theta;
        }
        let mut t = self.theta % period;
        if t > period / 2.0 {
            t -= period;
        } else if t <= -period / 2.0 {
            t += period;
        }
        t
    }

    /// Equal up to physical action: same kind and same angle modulo the
    /// generator period within `tol`.
    pub fn physically_eq(&self, other: &Pulse, tol: f64) -> bool {
        if self.kind != other.kind {
            return false;
        }
        if !self.kind.is_angle_kind() {
            return true;
        }
        let period = self.kind.angle_period();
        let mut d = (self.theta - other.theta).abs() % period;
        if d > period / 2.0 {
            d = period - d;
        }
        d < tol
    }
}

/// An ordered pulse list, applied left to right. `n_active` qubits are
/// addressable by elementary pulses; the rest are parked.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub n_qubits: usize,
    pub n_active: usize,
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new(n_qubits: usize, pulses: Vec<Pulse>) -> Result<Self> {
        Self::with_active(n_qubits, n_qubits, pulses)
    }

    pub fn with_active(n_qubits: usize, n_active: usize, pulses: Vec<Pulse>) -> Result<Self> {
        if n_active == 0 || n_active > n_qubits {
            return Err(Error::ConfigInvalid(format!(
                "active window {n_active} invalid for {n_qubits} qubits"
            )));
        }
        let seq = Self {
            n_qubits,
            n_active,
            pulses,
        };
        for p in &seq.pulses {
            seq.validate_pulse(p)?;
        }
        Ok(seq)
    }

    pub fn validate_pulse(&self, p: &Pulse) -> Result<()> {
        let check_active = |j: usize| -> Result<()> {
            if j == 0 || j > self.n_active {
                return Err(Error::InvalidPulse(format!(
                    "qubit {j} outside active window 1..={}",
                    self.n_active
                )));
            }
            Ok(())
        };
        match &p.kind {
            PulseKind::LocalZ(j) => check_active(*j)?,
            PulseKind::SubsetMsYY(subset) => {
                if subset.is_empty() || subset.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidPulse(
                        "subset must be nonempty and strictly increasing".into(),
                    ));
                }
                for &j in subset {
                    check_active(j)?;
                }
            }
            PulseKind::SwapOut(a, b) => {
                if *a == 0 || *b == 0 || *a > self.n_qubits || *b > self.n_qubits || a == b {
                    return Err(Error::InvalidPulse(format!("invalid swap pair {a},{b}")));
                }
            }
            PulseKind::Measure(j) | PulseKind::Reset(j) => {
                if *j == 0 || *j > self.n_qubits {
                    return Err(Error::InvalidPulse(format!(
                        "qubit {j} outside register 1..={}",
                        self.n_qubits
                    )));
                }
            }
            _ => {}
        }
        if p.kind.is_angle_kind() && (!p.theta.is_finite() || p.theta.abs() > MAX_PULSE_ANGLE) {
            return Err(Error::InvalidPulse(format!("angle {} outside ±4π", p.theta)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Elementary angle-carrying unitaries (swap slots and markers excluded).
    pub fn unitary_count(&self) -> usize {
        self.pulses.iter().filter(|p| p.kind.is_angle_kind()).count()
    }

    pub fn ms_count(&self) -> usize {
        self.pulses.iter().filter(|p| p.kind.is_ms()).count()
    }

    pub fn measure_count(&self) -> usize {
        self.pulses
            .iter()
            .filter(|p| matches!(p.kind, PulseKind::Measure(_)))
            .count()
    }

    pub fn reset_count(&self) -> usize {
        self.pulses
            .iter()
            .filter(|p| matches!(p.kind, PulseKind::Reset(_)))
            .count()
    }

    pub fn ms_total_angle(&self) -> f64 {
        self.pulses
            .iter()
            .filter(|p| p.kind.is_ms())
            .map(|p| p.theta.abs())
            .sum()
    }

    pub fn is_unitary_only(&self) -> bool {
        self.pulses.iter().all(|p| p.kind.is_unitary())
    }
}

// ---------------------------------------------------------------------------
// Factored eigendecompositions and fast state application
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum RotationAxis {
    X,
    Y,
}

/// Eigendecomposition of a gate-set Hamiltonian in factored form: a set of
/// per-qubit basis rotations plus the eigenvalue per (rotated) basis index.
struct Generator {
    axis: Option<RotationAxis>,
    /// Bit positions (0 = least significant) whose qubits must be rotated.
    rotate_bits: Vec<usize>,
    /// Eigenvalue per basis index, valid in the rotated basis.
    lambda: Vec<f64>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct GeneratorKey {
    kind: PulseKind,
    n_qubits: usize,
    n_active: usize,
}

static GENERATOR_CACHE: OnceLock<RwLock<HashMap<GeneratorKey, Arc<Generator>>>> = OnceLock::new();

fn bit_of_qubit(qubit: usize, n_qubits: usize) -> usize {
    // Qubit 1 is the leftmost factor, i.e. the most significant bit.
    n_qubits - qubit
}

fn build_generator(kind: &PulseKind, n_qubits: usize, n_active: usize) -> Result<Generator> {
    let dim = 1usize << n_qubits;
    let active_mask: usize = (1..=n_active)
        .map(|q| 1usize << bit_of_qubit(q, n_qubits))
        .sum();
    let half = |m: i64| m as f64 / 2.0;
    match kind {
        PulseKind::LocalZ(j) => {
            let bit = bit_of_qubit(*j, n_qubits);
            let lambda = (0..dim)
                .map(|b| if b >> bit & 1 == 0 { 0.5 } else { -0.5 })
                .collect();
            Ok(Generator {
                axis: None,
                rotate_bits: vec![],
                lambda,
            })
        }
        PulseKind::GlobalX | PulseKind::GlobalY => {
            let axis = if *kind == PulseKind::GlobalX {
                RotationAxis::X
            } else {
                RotationAxis::Y
            };
            let lambda = (0..dim)
                .map(|b| half(n_active as i64 - 2 * (b & active_mask).count_ones() as i64))
                .collect();
            Ok(Generator {
                axis: Some(axis),
                rotate_bits: (1..=n_active).map(|q| bit_of_qubit(q, n_qubits)).collect(),
                lambda,
            })
        }
        PulseKind::MsXX | PulseKind::MsYY => {
            let axis = if *kind == PulseKind::MsXX {
                RotationAxis::X
            } else {
                RotationAxis::Y
            };
            let lambda = (0..dim)
                .map(|b| {
                    let m = half(n_active as i64 - 2 * (b & active_mask).count_ones() as i64);
                    m * m
                })
                .collect();
            Ok(Generator {
                axis: Some(axis),
                rotate_bits: (1..=n_active).map(|q| bit_of_qubit(q, n_qubits)).collect(),
                lambda,
            })
        }
        PulseKind::SubsetMsYY(subset) => {
            let mask: usize = subset
                .iter()
                .map(|&q| 1usize << bit_of_qubit(q, n_qubits))
                .sum();
            let k = subset.len() as i64;
            let lambda = (0..dim)
                .map(|b| {
                    let m = half(k - 2 * (b & mask).count_ones() as i64);
                    m * m
                })
                .collect();
            Ok(Generator {
                axis: Some(RotationAxis::Y),
                rotate_bits: subset
                    .iter()
                    .map(|&q| bit_of_qubit(q, n_qubits))
                    .collect(),
                lambda,
            })
        }
        other => Err(Error::NotUnitaryKind(other.label())),
    }
}

fn generator(kind: &PulseKind, n_qubits: usize, n_active: usize) -> Result<Arc<Generator>> {
    let key = GeneratorKey {
        kind: kind.clone(),
        n_qubits,
        n_active,
    };
    let cache = GENERATOR_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(g) = cache.read().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let built = Arc::new(build_generator(kind, n_qubits, n_active)?);
    cache.write().unwrap().insert(key, built.clone());
    Ok(built)
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[inline]
fn for_each_pair(amps: &mut [C64], bit: usize, mut f: impl FnMut(&mut C64, &mut C64)) {
    let mask = 1usize << bit;
    let dim = amps.len();
    let mut base = 0usize;
    while base < dim {
        if base & mask != 0 {
            base += mask;
            continue;
        }
        for offset in base..base + mask {
            let (lo, hi) = amps.split_at_mut(offset | mask);
            f(&mut lo[offset], &mut hi[0]);
        }
        base += 2 * mask;
    }
}

/// Hadamard on one qubit (x-basis change, self-inverse).
fn rotate_x(amps: &mut [C64], bit: usize) {
    for_each_pair(amps, bit, |a, b| {
        let (x, y) = (*a, *b);
        *a = (x + y) * FRAC_1_SQRT_2;
        *b = (x - y) * FRAC_1_SQRT_2;
    });
}

/// y-basis change: coefficients in the σ_y eigenbasis.
fn rotate_y_in(amps: &mut [C64], bit: usize) {
    let i = C64::new(0.0, 1.0);
    for_each_pair(amps, bit, |a, b| {
        let (x, y) = (*a, *b);
        *a = (x - i * y) * FRAC_1_SQRT_2;
        *b = (x + i * y) * FRAC_1_SQRT_2;
    });
}

fn rotate_y_out(amps: &mut [C64], bit: usize) {
    let i = C64::new(0.0, 1.0);
    for_each_pair(amps, bit, |a, b| {
        let (x, y) = (*a, *b);
        *a = (x + y) * FRAC_1_SQRT_2;
        *b = i * (x - y) * FRAC_1_SQRT_2;
    });
}

fn with_diagonal(
    gen: &Generator,
    amps: &mut [C64],
    diag: impl Fn(f64) -> C64,
) {
    match gen.axis {
        None => {
            for (b, a) in amps.iter_mut().enumerate() {
                *a *= diag(gen.lambda[b]);
            }
        }
        Some(RotationAxis::X) => {
            for &bit in &gen.rotate_bits {
                rotate_x(amps, bit);
            }
            for (b, a) in amps.iter_mut().enumerate() {
                *a *= diag(gen.lambda[b]);
            }
            for &bit in &gen.rotate_bits {
                rotate_x(amps, bit);
            }
        }
        Some(RotationAxis::Y) => {
            for &bit in &gen.rotate_bits {
                rotate_y_in(amps, bit);
            }
            for (b, a) in amps.iter_mut().enumerate() {
                *a *= diag(gen.lambda[b]);
            }
            for &bit in &gen.rotate_bits {
                rotate_y_out(amps, bit);
            }
        }
    }
}

fn apply_swap_bits(amps: &mut [C64], bit_a: usize, bit_b: usize) {
    let (ma, mb) = (1usize << bit_a, 1usize << bit_b);
    for b in 0..amps.len() {
        let has_a = b & ma != 0;
        let has_b = b & mb != 0;
        if has_a && !has_b {
            let partner = (b & !ma) | mb;
            amps.swap(b, partner);
        }
    }
}

/// Apply a unitary pulse (angle kinds and swap slots) to raw amplitudes.
pub fn apply_unitary_pulse(
    p: &Pulse,
    n_qubits: usize,
    n_active: usize,
    amps: &mut [C64],
) -> Result<()> {
    match &p.kind {
        PulseKind::SwapOut(a, b) => {
            apply_swap_bits(
                amps,
                bit_of_qubit(*a, n_qubits),
                bit_of_qubit(*b, n_qubits),
            );
            Ok(())
        }
        kind if kind.is_angle_kind() => {
            let gen = generator(kind, n_qubits, n_active)?;
            let theta = p.theta;
            with_diagonal(&gen, amps, |lam| C64::from_polar(1.0, -theta * lam));
            Ok(())
        }
        other => Err(Error::NotUnitaryKind(other.label())),
    }
}

/// Apply the inverse of a unitary pulse.
pub fn apply_unitary_pulse_dagger(
    p: &Pulse,
    n_qubits: usize,
    n_active: usize,
    amps: &mut [C64],
) -> Result<()> {
    match &p.kind {
        PulseKind::SwapOut(_, _) => apply_unitary_pulse(p, n_qubits, n_active, amps),
        _ => {
            let inv = Pulse {
                kind: p.kind.clone(),
                theta: -p.theta,
            };
            apply_unitary_pulse(&inv, n_qubits, n_active, amps)
        }
    }
}

/// Apply `(−iH)^power · exp(−iθH)` in a single diagonal pass. `power` 0, 1
/// or 2 covers the value, first and second pulse derivatives.
pub fn apply_exp_with_generator(
    p: &Pulse,
    n_qubits: usize,
    n_active: usize,
    power: u8,
    amps: &mut [C64],
) -> Result<()> {
    if !p.kind.is_angle_kind() {
        return Err(Error::NotUnitaryKind(p.kind.label()));
    }
    let gen = generator(&p.kind, n_qubits, n_active)?;
    let theta = p.theta;
    with_diagonal(&gen, amps, |lam| {
        let ph = C64::from_polar(1.0, -theta * lam);
        match power {
            0 => ph,
            1 => ph * C64::new(0.0, -lam),
            _ => ph * C64::new(-lam * lam, 0.0),
        }
    });
    Ok(())
}

/// Apply the bare generator action `(−iH)` to raw amplitudes.
pub fn apply_generator(
    kind: &PulseKind,
    n_qubits: usize,
    n_active: usize,
    amps: &mut [C64],
) -> Result<()> {
    let p = Pulse {
        kind: kind.clone(),
        theta: 0.0,
    };
    apply_exp_with_generator(&p, n_qubits, n_active, 1, amps)
}

// ---------------------------------------------------------------------------
// Materialized operators
// ---------------------------------------------------------------------------

fn embed_single(op: &ComplexOperator, qubit: usize, n_qubits: usize) -> Result<ComplexOperator> {
    let mut out = ComplexOperator::identity(1)?;
    let mut first = true;
    for q in 1..=n_qubits {
        let factor = if q == qubit {
            op.clone()
        } else {
            ComplexOperator::identity(1)?
        };
        out = if first {
            first = false;
            factor
        } else {
            kron(&out, &factor)?
        };
    }
    Ok(out)
}

/// The effective Hamiltonian of a unitary-generating pulse kind, materialized
/// densely. Elementary pulses act on the active window only.
pub fn hamiltonian_in(kind: &PulseKind, n_qubits: usize, n_active: usize) -> Result<ComplexOperator> {
    if !kind.is_angle_kind() {
        return Err(Error::NotUnitaryKind(kind.label()));
    }
    let collective = |single: &ComplexOperator, qubits: &[usize]| -> Result<ComplexOperator> {
        let mut sum = ComplexOperator::new(
            n_qubits,
            ndarray::Array2::zeros((1 << n_qubits, 1 << n_qubits)),
        )?;
        for &q in qubits {
            sum = sum.add(&embed_single(single, q, n_qubits)?)?;
        }
        Ok(sum.scaled(C64::new(0.5, 0.0)))
    };
    let active: Vec<usize> = (1..=n_active).collect();
    match kind {
        PulseKind::GlobalX => collective(&sigma_x(), &active),
        PulseKind::GlobalY => collective(&sigma_y(), &active),
        PulseKind::MsXX => {
            let s = collective(&sigma_x(), &active)?;
            s.matmul(&s)
        }
        PulseKind::MsYY => {
            let s = collective(&sigma_y(), &active)?;
            s.matmul(&s)
        }
        PulseKind::LocalZ(j) => {
            if *j == 0 || *j > n_active {
                return Err(Error::InvalidPulse(format!("qubit {j} outside window")));
            }
            Ok(embed_single(&sigma_z(), *j, n_qubits)?.scaled(C64::new(0.5, 0.0)))
        }
        PulseKind::SubsetMsYY(subset) => {
            for &j in subset {
                if j == 0 || j > n_active {
                    return Err(Error::InvalidPulse(format!("qubit {j} outside window")));
                }
            }
            let s = collective(&sigma_y(), subset)?;
            s.matmul(&s)
        }
        other => Err(Error::NotUnitaryKind(other.label())),
    }
}

/// [`hamiltonian_in`] with the whole register active.
pub fn hamiltonian(kind: &PulseKind, n_qubits: usize) -> Result<ComplexOperator> {
    hamiltonian_in(kind, n_qubits, n_qubits)
}

fn materialize(
    n_qubits: usize,
    mut column_action: impl FnMut(&mut [C64]) -> Result<()>,
) -> Result<ComplexOperator> {
    let dim = 1usize << n_qubits;
    let mut mat = ndarray::Array2::zeros((dim, dim));
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for c in 0..dim {
        col.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        col[c] = C64::new(1.0, 0.0);
        column_action(&mut col)?;
        for r in 0..dim {
            mat[[r, c]] = col[r];
        }
    }
    ComplexOperator::new(n_qubits, mat)
}

/// The unitary of a pulse, reconstructed per angle from the cached factored
/// eigendecomposition of its generator.
pub fn pulse_unitary_in(p: &Pulse, n_qubits: usize, n_active: usize) -> Result<ComplexOperator> {
    if !p.kind.is_unitary() {
        return Err(Error::NotUnitaryKind(p.kind.label()));
    }
    materialize(n_qubits, |col| {
        apply_unitary_pulse(p, n_qubits, n_active, col)
    })
}

pub fn pulse_unitary(p: &Pulse, n_qubits: usize) -> Result<ComplexOperator> {
    pulse_unitary_in(p, n_qubits, n_qubits)
}

/// `dU/dθ = (−iH)·exp(−iθH)` for an angle-carrying pulse.
pub fn pulse_derivative_in(p: &Pulse, n_qubits: usize, n_active: usize) -> Result<ComplexOperator> {
    if !p.kind.is_angle_kind() {
        return Err(Error::NotUnitaryKind(p.kind.label()));
    }
    materialize(n_qubits, |col| {
        apply_exp_with_generator(p, n_qubits, n_active, 1, col)
    })
}

pub fn pulse_derivative(p: &Pulse, n_qubits: usize) -> Result<ComplexOperator> {
    pulse_derivative_in(p, n_qubits, n_qubits)
}

/// Rewrite mid-sequence measure-and-reset pairs as swap-out slots onto
/// freshly parked qubits, postponing all measurements to the end. The
/// returned sequence is unitary throughout; a trailing measurement (with
/// nothing after it) is dropped since the final auxiliary state carries the
/// outcome.
pub fn to_swap_trick(seq: &PulseSequence) -> Result<PulseSequence> {
    let pairs = seq
        .pulses
        .windows(2)
        .filter(|w| {
            matches!((&w[0].kind, &w[1].kind),
                (PulseKind::Measure(a), PulseKind::Reset(b)) if a == b)
        })
        .count();
    let n_total = seq.n_qubits + pairs;
    let mut pulses = Vec::with_capacity(seq.pulses.len());
    let mut next_park = seq.n_qubits + 1;
    let mut iter = seq.pulses.iter().peekable();
    while let Some(p) = iter.next() {
        match &p.kind {
            PulseKind::Measure(j) => {
                if let Some(next) = iter.peek() {
                    if next.kind == PulseKind::Reset(*j) {
                        iter.next();
                        pulses.push(Pulse::swap_out(*j, next_park));
                        next_park += 1;
                        continue;
                    }
                }
                if iter.peek().is_some() {
                    return Err(Error::ContractMismatch(
                        "mid-sequence measurement without immediate reset".into(),
                    ));
                }
                // Trailing measurement: the final state carries the outcome.
            }
            PulseKind::Reset(_) => {
                return Err(Error::ContractMismatch(
                    "reset without preceding measurement of the same qubit".into(),
                ))
            }
            _ => pulses.push(p.clone()),
        }
    }
    PulseSequence::with_active(n_total, seq.n_qubits, pulses)
}

/// Inverse of the swap trick: swap-out slots become measure-and-reset
/// pairs, parked qubits are dropped, and the listed qubits are measured at
/// the end.
pub fn to_measured_form(seq: &PulseSequence, final_measures: &[usize]) -> Result<PulseSequence> {
    let n = seq.n_active;
    let mut pulses = Vec::with_capacity(seq.pulses.len() + final_measures.len());
    for p in &seq.pulses {
        match &p.kind {
            PulseKind::SwapOut(a, parked) => {
                if *a > n || *parked <= n {
                    return Err(Error::ContractMismatch(format!(
                        "swap pair {a},{parked} does not park outside the active window"
                    )));
                }
                pulses.push(Pulse::measure(*a));
                pulses.push(Pulse::reset(*a));
            }
            PulseKind::Measure(j) | PulseKind::Reset(j) if *j > n => {
                return Err(Error::ContractMismatch(
                    "marker on a parked qubit".into(),
                ))
            }
            _ => pulses.push(p.clone()),
        }
    }
    for &q in final_measures {
        if q > n {
            return Err(Error::ContractMismatch(format!(
                "final measurement qubit {q} outside active window"
            )));
        }
        pulses.push(Pulse::measure(q));
    }
    PulseSequence::new(n, pulses)
}

/// Apply a whole unitary-only sequence to a state.
pub fn apply_sequence(seq: &PulseSequence, input: &StateVector) -> Result<StateVector> {
    if input.dim() != seq.dim() {
        return Err(Error::DimensionMismatch {
            left: input.dim(),
            right: seq.dim(),
        });
    }
    let mut out = input.clone();
    for p in &seq.pulses {
        if !p.kind.is_unitary() {
            return Err(Error::NonUnitarySequence);
        }
        apply_unitary_pulse(p, seq.n_qubits, seq.n_active, out.amps_mut().as_slice_mut().unwrap())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{eigh, expm_hermitian, StateVector};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn all_angle_kinds(n: usize) -> Vec<PulseKind> {
        let mut kinds = vec![
            PulseKind::GlobalX,
            PulseKind::GlobalY,
            PulseKind::MsXX,
            PulseKind::MsYY,
        ];
        for j in 1..=n {
            kinds.push(PulseKind::LocalZ(j));
        }
        if n >= 2 {
            kinds.push(PulseKind::SubsetMsYY((1..=n).step_by(2).collect()));
        }
        kinds
    }

    #[test]
    fn global_x_hamiltonian_single_qubit() {
        let h = hamiltonian(&PulseKind::GlobalX, 1).unwrap();
        let expect = sigma_x().scaled(c(0.5, 0.0));
        assert!(h.max_distance(&expect) < 1e-15);
    }

    #[test]
    fn ms_xx_eigenvalues_two_qubits() {
        // Brute-force diagonalization oracle: S_x on 2 qubits has eigenvalues
        // {−1, 0, 0, 1}, so S_x² has {0, 0, 1, 1}.
        let h = hamiltonian(&PulseKind::MsXX, 2).unwrap();
        let eig = eigh(&h, 1e-12).unwrap();
        let expect = [0.0, 0.0, 1.0, 1.0];
        for (got, want) in eig.values.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn local_z_hamiltonian_is_half_sigma_z() {
        let h = hamiltonian(&PulseKind::LocalZ(2), 2).unwrap();
        for (i, want) in [0.5, -0.5, 0.5, -0.5].iter().enumerate() {
            assert_abs_diff_eq!(h.mat()[[i, i]].re, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn pulse_unitary_global_x_pi() {
        let p = Pulse::unitary(PulseKind::GlobalX, PI).unwrap();
        let u = pulse_unitary(&p, 1).unwrap();
        let expect = sigma_x().scaled(c(0.0, -1.0));
        assert!(u.max_distance(&expect) < 1e-12);
    }

    #[test]
    fn pulse_unitary_local_z_phase_on_zero() {
        let p = Pulse::unitary(PulseKind::LocalZ(1), PI).unwrap();
        let u = pulse_unitary(&p, 1).unwrap();
        let out = u.apply(&StateVector::basis(1, 0).unwrap()).unwrap();
        let expect = C64::from_polar(1.0, -FRAC_PI_2);
        assert!((out.amps()[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn fast_apply_matches_dense_exponential_all_kinds() {
        let mut rng = StdRng::seed_from_u64(17);
        for n in 1..=4usize {
            for kind in all_angle_kinds(n) {
                if matches!(kind, PulseKind::SubsetMsYY(_)) && n < 2 {
                    continue;
                }
                let theta = rng.gen_range(-PI..PI);
                let p = Pulse::unitary(kind.clone(), theta).unwrap();
                let fast = pulse_unitary(&p, n).unwrap();
                let h = hamiltonian(&kind, n).unwrap();
                let dense = expm_hermitian(&h, theta).unwrap();
                assert!(
                    fast.max_distance(&dense) < 1e-10,
                    "kind {kind} n {n} theta {theta}"
                );
                assert!(fast.unitarity_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn fast_apply_respects_active_window() {
        // Global X on active window 2 of a 3-qubit register leaves qubit 3 alone.
        let p = Pulse::unitary(PulseKind::GlobalX, 0.7).unwrap();
        let u = pulse_unitary_in(&p, 3, 2).unwrap();
        let u_small = pulse_unitary(&p, 2).unwrap();
        let expect = kron(&u_small, &ComplexOperator::identity(1).unwrap()).unwrap();
        assert!(u.max_distance(&expect) < 1e-12);
    }

    #[test]
    fn derivative_at_zero_is_generator() {
        let p = Pulse::unitary(PulseKind::LocalZ(1), 0.0).unwrap();
        let d = pulse_derivative(&p, 1).unwrap();
        let expect = sigma_z().scaled(c(0.0, -0.5));
        assert!(d.max_distance(&expect) < 1e-14);

        let p = Pulse::unitary(PulseKind::MsXX, 0.0).unwrap();
        let d = pulse_derivative(&p, 2).unwrap();
        let expect = hamiltonian(&PulseKind::MsXX, 2)
            .unwrap()
            .scaled(c(0.0, -1.0));
        assert!(d.max_distance(&expect) < 1e-12);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = StdRng::seed_from_u64(23);
        let h_step = 1e-5;
        for n in 1..=3usize {
            for kind in all_angle_kinds(n) {
                let theta = rng.gen_range(-PI..PI);
                let d = pulse_derivative(&Pulse::unitary(kind.clone(), theta).unwrap(), n).unwrap();
                let up = pulse_unitary(&Pulse::unitary(kind.clone(), theta + h_step).unwrap(), n)
                    .unwrap();
                let dn = pulse_unitary(&Pulse::unitary(kind.clone(), theta - h_step).unwrap(), n)
                    .unwrap();
                let fd = up
                    .add(&dn.scaled(c(-1.0, 0.0)))
                    .unwrap()
                    .scaled(c(1.0 / (2.0 * h_step), 0.0));
                assert!(d.max_distance(&fd) < 1e-6, "kind {kind} n {n}");
            }
        }
    }

    #[test]
    fn dagger_is_negative_angle() {
        let mut rng = StdRng::seed_from_u64(29);
        for kind in all_angle_kinds(3) {
            let theta = rng.gen_range(-PI..PI);
            let u = pulse_unitary(&Pulse::unitary(kind.clone(), theta).unwrap(), 3).unwrap();
            let v = pulse_unitary(&Pulse::unitary(kind.clone(), -theta).unwrap(), 3).unwrap();
            assert!(u.dagger().max_distance(&v) < 1e-10, "kind {kind}");
        }
    }

    #[test]
    fn unitarity_holds_up_to_4pi() {
        let mut rng = StdRng::seed_from_u64(31);
        for kind in all_angle_kinds(3) {
            let theta = rng.gen_range(-4.0 * PI..4.0 * PI);
            let u = pulse_unitary(&Pulse::unitary(kind.clone(), theta).unwrap(), 3).unwrap();
            assert!(u.unitarity_defect() < 1e-10, "kind {kind} theta {theta}");
        }
    }

    #[test]
    fn global_rotation_factorizes() {
        let theta = 0.9;
        let n = 3;
        let u = pulse_unitary(&Pulse::unitary(PulseKind::GlobalX, theta).unwrap(), n).unwrap();
        let single = expm_hermitian(&sigma_x().scaled(c(0.5, 0.0)), theta).unwrap();
        let mut expect = single.clone();
        for _ in 1..n {
            expect = kron(&expect, &single).unwrap();
        }
        assert!(u.max_distance(&expect) < 1e-10);
    }

    #[test]
    fn ms_gate_does_not_factorize() {
        // Operator-Schmidt rank across the 1|2 cut must exceed 1.
        let u = pulse_unitary(&Pulse::unitary(PulseKind::MsXX, FRAC_PI_2).unwrap(), 2).unwrap();
        let mut m = ndarray::Array2::zeros((4, 4));
        for i1 in 0..2 {
            for j1 in 0..2 {
                for i2 in 0..2 {
                    for j2 in 0..2 {
                        m[[i1 * 2 + j1, i2 * 2 + j2]] = u.mat()[[i1 * 2 + i2, j1 * 2 + j2]];
                    }
                }
            }
        }
        let m_op = ComplexOperator::new(2, m).unwrap();
        let gram = m_op.dagger().matmul(&m_op).unwrap();
        let eig = eigh(&gram, 1e-10).unwrap();
        let rank = eig.values.iter().filter(|&&v| v > 1e-6).count();
        assert!(rank > 1, "schmidt rank {rank}");
    }

    #[test]
    fn swap_out_is_exact_swap() {
        let p = Pulse::swap_out(1, 3);
        let u = pulse_unitary_in(&p, 3, 1).unwrap();
        let v = StateVector::basis(3, 0b100).unwrap();
        let out = u.apply(&v).unwrap();
        assert!((out.amps()[0b001] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn marker_kinds_are_rejected() {
        assert!(matches!(
            hamiltonian(&PulseKind::Measure(1), 2),
            Err(Error::NotUnitaryKind(_))
        ));
        assert!(matches!(
            Pulse::unitary(PulseKind::Reset(1), 0.3),
            Err(Error::NotUnitaryKind(_))
        ));
    }

    #[test]
    fn sequence_validation() {
        assert!(PulseSequence::new(
            2,
            vec![Pulse::unitary(PulseKind::LocalZ(3), 0.1).unwrap()]
        )
        .is_err());
        assert!(PulseSequence::with_active(
            3,
            2,
            vec![Pulse::unitary(PulseKind::LocalZ(3), 0.1).unwrap()]
        )
        .is_err());
        let ok = PulseSequence::with_active(
            3,
            2,
            vec![
                Pulse::unitary(PulseKind::GlobalX, 0.5).unwrap(),
                Pulse::swap_out(2, 3),
            ],
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn canonical_angles_wrap_by_generator_period() {
        let p = Pulse::unitary(PulseKind::LocalZ(1), 3.5 * PI).unwrap();
        let q = Pulse::unitary(PulseKind::LocalZ(1), -0.5 * PI).unwrap();
        assert!(p.physically_eq(&q, 1e-12));
        assert_abs_diff_eq!(p.canonical_angle(), -0.5 * PI, epsilon = 1e-12);
        // Negative z rendered as its positive counterpart agrees up to a
        // global phase (the replacement shifts the angle by 2π, half the
        // generator period).
        let neg = Pulse::unitary(PulseKind::LocalZ(1), -FRAC_PI_4).unwrap();
        let pos = Pulse::unitary(PulseKind::LocalZ(1), 2.0 * PI - FRAC_PI_4).unwrap();
        let u = pulse_unitary(&neg, 1).unwrap();
        let v = pulse_unitary(&pos, 1).unwrap();
        let overlap = crate::tensor::inner_operators(&u, &v).unwrap();
        assert_abs_diff_eq!(overlap.norm(), 2.0, epsilon = 1e-12);
    }
}
