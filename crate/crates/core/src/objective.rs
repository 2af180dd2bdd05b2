//! Performance functions and their efficient evaluation.
//!
//! Every supported contract compiles into a sum of *terms*, each built from
//! scalar brackets `⟨f|U(α)|i⟩` with `U(α) = ∏_t u_t(α_t)`. A term combines
//! its brackets in one of three ways:
//!
//! - `ProductPerK` — `Σ_k Re(A_k · conj(B_k))`, the paired-projector form
//!   used by the syndrome, coherent-QEC and logical-gate functions (the `k`
//!   index ranges over auxiliary basis states or same-level output errors);
//! - `ProductOfSums` — `Re((Σ_k A_k) · conj(Σ_k B_k))`, which yields the
//!   squared trace overlap of the phase-insensitive fixed-unitary function;
//! - `RealOfSum` — `Re(Σ_k A_k)`, the plain trace overlap.
//!
//! [`EvalContext`] caches the split products `⟨f|∏_{t<k}u_t` and
//! `∏_{t>k}u_t|i⟩` so that the value, every angle derivative and every pulse
//! importance come out of `O(T)` operator applications per sweep instead of
//! `O(T²)`.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gateset::{
    apply_exp_with_generator, apply_unitary_pulse, apply_unitary_pulse_dagger, Pulse,
    PulseSequence,
};
use crate::tensor::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    FixedUnitaryRe,
    FixedUnitaryAbs,
    Syndrome,
    CoherentQec,
    LogicalGate,
    StatePrep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    ProductPerK,
    ProductOfSums,
    RealOfSum,
}

/// One scalar bracket `⟨final|U|init⟩`.
#[derive(Debug, Clone)]
pub struct BracketSpec {
    pub final_state: StateVector,
    pub init_state: StateVector,
}

/// One additive term of a performance function.
#[derive(Debug, Clone)]
pub struct Term {
    pub label: String,
    pub combine: Combine,
    pub weight: f64,
    pub a: Vec<BracketSpec>,
    pub b: Vec<BracketSpec>,
}

/// A compiled target contract: the performance function as data.
#[derive(Debug, Clone)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub n_qubits: usize,
    pub max_value: f64,
    pub terms: Vec<Term>,
}

impl Objective {
    pub(crate) fn validate(&self) -> Result<()> {
        let dim = 1usize << self.n_qubits;
        for term in &self.terms {
            if matches!(term.combine, Combine::ProductPerK) && term.a.len() != term.b.len() {
                return Err(Error::ConfigInvalid(format!(
                    "term {}: paired brackets must have equal length",
                    term.label
                )));
            }
            for br in term.a.iter().chain(term.b.iter()) {
                if br.final_state.dim() != dim || br.init_state.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        left: br.final_state.dim(),
                        right: dim,
                    });
                }
            }
        }
        Ok(())
    }
}

fn combine_value(term: &Term, a: &[C64], b: &[C64]) -> f64 {
    match term.combine {
        Combine::ProductPerK => {
            term.weight
                * a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x * y.conj()).re)
                    .sum::<f64>()
        }
        Combine::ProductOfSums => {
            let sa: C64 = a.iter().sum();
            let sb: C64 = b.iter().sum();
            term.weight * (sa * sb.conj()).re
        }
        Combine::RealOfSum => term.weight * a.iter().sum::<C64>().re,
    }
}

fn combine_d1(term: &Term, a: &[C64], b: &[C64], da: &[C64], db: &[C64]) -> f64 {
    match term.combine {
        Combine::ProductPerK => {
            term.weight
                * (0..a.len())
                    .map(|k| (da[k] * b[k].conj() + a[k] * db[k].conj()).re)
                    .sum::<f64>()
        }
        Combine::ProductOfSums => {
            let sa: C64 = a.iter().sum();
            let sb: C64 = b.iter().sum();
            let dsa: C64 = da.iter().sum();
            let dsb: C64 = db.iter().sum();
            term.weight * (dsa * sb.conj() + sa * dsb.conj()).re
        }
        Combine::RealOfSum => term.weight * da.iter().sum::<C64>().re,
    }
}

fn combine_d2(
    term: &Term,
    a: &[C64],
    b: &[C64],
    da: &[C64],
    db: &[C64],
    dda: &[C64],
    ddb: &[C64],
) -> f64 {
    match term.combine {
        Combine::ProductPerK => {
            term.weight
                * (0..a.len())
                    .map(|k| {
                        (dda[k] * b[k].conj() + da[k] * db[k].conj() * 2.0 + a[k] * ddb[k].conj())
                            .re
                    })
                    .sum::<f64>()
        }
        Combine::ProductOfSums => {
            let (sa, sb): (C64, C64) = (a.iter().sum(), b.iter().sum());
            let (dsa, dsb): (C64, C64) = (da.iter().sum(), db.iter().sum());
            let (ddsa, ddsb): (C64, C64) = (dda.iter().sum(), ddb.iter().sum());
            term.weight * (ddsa * sb.conj() + dsa * dsb.conj() * 2.0 + sa * ddsb.conj()).re
        }
        Combine::RealOfSum => term.weight * dda.iter().sum::<C64>().re,
    }
}

fn raw_inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone)]
struct Wiring {
    /// (final index, init index) per bracket, term-a brackets first.
    brackets: Vec<(usize, usize)>,
    term_a: Vec<std::ops::Range<usize>>,
    term_b: Vec<std::ops::Range<usize>>,
}

/// Cached evaluation state for one unitary pulse list under one objective.
///
/// Pulses act in list order, so in matrix order the bracket splits as
/// `⟨f| · (u_{T−1}···u_{k+1}) · u_k · (u_{k−1}···u_0) · |i⟩`. The init-side
/// prefix states are advanced incrementally as a sweep commits angles left
/// to right; the final-side suffix states are rebuilt at the start of each
/// cycle.
pub struct EvalContext {
    objective: Objective,
    n_qubits: usize,
    n_active: usize,
    pulses: Vec<Pulse>,
    inits: Vec<Array1<C64>>,
    finals: Vec<Array1<C64>>,
    wiring: Wiring,
    /// fwd[u][k] = u_{k−1}···u_0 |i_u⟩, the state after the first k pulses.
    fwd: Vec<Vec<Array1<C64>>>,
    /// bwd[u][k] = (u_{T−1}···u_k)† |f_u⟩ (bwd[T] = |f⟩).
    bwd: Vec<Vec<Array1<C64>>>,
    fwd_valid_to: usize,
    bwd_valid_from: usize,
    matvec_ops: u64,
}

fn dedup_push(store: &mut Vec<Array1<C64>>, v: &StateVector) -> usize {
    let arr = v.amps();
    for (idx, existing) in store.iter().enumerate() {
        if existing.len() == arr.len() && existing.iter().zip(arr.iter()).all(|(a, b)| a == b) {
            return idx;
        }
    }
    store.push(arr.clone());
    store.len() - 1
}

impl EvalContext {
    /// Build a context for a sequence of unitary pulses. Measurement and
    /// reset markers are rejected; the swap-trick reformulation removes them
    /// before objectives apply.
    pub fn new(objective: Objective, seq: &PulseSequence) -> Result<Self> {
        objective.validate()?;
        if objective.n_qubits != seq.n_qubits {
            return Err(Error::DimensionMismatch {
                left: objective.n_qubits,
                right: seq.n_qubits,
            });
        }
        if !seq.is_unitary_only() {
            return Err(Error::MeasurementInUnitarySegment);
        }
        let mut inits = Vec::new();
        let mut finals = Vec::new();
        let mut brackets = Vec::new();
        let mut term_a = Vec::new();
        let mut term_b = Vec::new();
        for term in &objective.terms {
            let start = brackets.len();
            for br in &term.a {
                let fi = dedup_push(&mut finals, &br.final_state);
                let ii = dedup_push(&mut inits, &br.init_state);
                brackets.push((fi, ii));
            }
            term_a.push(start..brackets.len());
            let start = brackets.len();
            for br in &term.b {
                let fi = dedup_push(&mut finals, &br.final_state);
                let ii = dedup_push(&mut inits, &br.init_state);
                brackets.push((fi, ii));
            }
            term_b.push(start..brackets.len());
        }
        let mut ctx = Self {
            n_qubits: seq.n_qubits,
            n_active: seq.n_active,
            pulses: seq.pulses.clone(),
            objective,
            inits,
            finals,
            wiring: Wiring {
                brackets,
                term_a,
                term_b,
            },
            fwd: Vec::new(),
            bwd: Vec::new(),
            fwd_valid_to: 0,
            bwd_valid_from: 0,
            matvec_ops: 0,
        };
        ctx.refresh()?;
        Ok(ctx)
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Number of operator-to-vector applications performed so far.
    pub fn matvec_ops(&self) -> u64 {
        self.matvec_ops
    }

    pub fn sequence(&self) -> PulseSequence {
        PulseSequence {
            n_qubits: self.n_qubits,
            n_active: self.n_active,
            pulses: self.pulses.clone(),
        }
    }

    fn apply(&mut self, p: &Pulse, v: &mut Array1<C64>) -> Result<()> {
        self.matvec_ops += 1;
        apply_unitary_pulse(p, self.n_qubits, self.n_active, v.as_slice_mut().unwrap())
    }

    fn apply_dagger(&mut self, p: &Pulse, v: &mut Array1<C64>) -> Result<()> {
        self.matvec_ops += 1;
        apply_unitary_pulse_dagger(p, self.n_qubits, self.n_active, v.as_slice_mut().unwrap())
    }

    fn apply_fused(&mut self, p: &Pulse, power: u8, v: &mut Array1<C64>) -> Result<()> {
        self.matvec_ops += 1;
        apply_exp_with_generator(
            p,
            self.n_qubits,
            self.n_active,
            power,
            v.as_slice_mut().unwrap(),
        )
    }

    /// Rebuild all prefix and suffix caches for the current angles.
    pub fn refresh(&mut self) -> Result<()> {
        let t_len = self.pulses.len();
        let pulses = self.pulses.clone();
        let inits = self.inits.clone();
        let finals = self.finals.clone();
        let mut fwd = Vec::with_capacity(inits.len());
        for init in &inits {
            let mut per_pos = vec![Array1::zeros(0); t_len + 1];
            let mut cur = init.clone();
            per_pos[0] = cur.clone();
            for (k, p) in pulses.iter().enumerate() {
                self.apply(p, &mut cur)?;
                per_pos[k + 1] = cur.clone();
            }
            fwd.push(per_pos);
        }
        let mut bwd = Vec::with_capacity(finals.len());
        for fin in &finals {
            let mut per_pos = vec![Array1::zeros(0); t_len + 1];
            let mut cur = fin.clone();
            per_pos[t_len] = cur.clone();
            for k in (0..t_len).rev() {
                self.apply_dagger(&pulses[k], &mut cur)?;
                per_pos[k] = cur.clone();
            }
            bwd.push(per_pos);
        }
        self.fwd = fwd;
        self.bwd = bwd;
        self.fwd_valid_to = t_len;
        self.bwd_valid_from = 0;
        Ok(())
    }

    /// Rebuild only the suffix caches and rewind the prefix cursor to the
    /// start; sweeps advance the prefixes incrementally as angles commit.
    pub fn refresh_for_sweep(&mut self) -> Result<()> {
        let t_len = self.pulses.len();
        let pulses = self.pulses.clone();
        let finals = self.finals.clone();
        let mut bwd = Vec::with_capacity(finals.len());
        for fin in &finals {
            let mut per_pos = vec![Array1::zeros(0); t_len + 1];
            let mut cur = fin.clone();
            per_pos[t_len] = cur.clone();
            for k in (0..t_len).rev() {
                self.apply_dagger(&pulses[k], &mut cur)?;
                per_pos[k] = cur.clone();
            }
            bwd.push(per_pos);
        }
        self.bwd = bwd;
        for (u, init) in self.inits.clone().into_iter().enumerate() {
            if self.fwd[u].len() != t_len + 1 {
                self.fwd[u] = vec![Array1::zeros(0); t_len + 1];
            }
            self.fwd[u][0] = init;
        }
        self.fwd_valid_to = 0;
        self.bwd_valid_from = 0;
        Ok(())
    }

    fn is_fresh(&self) -> bool {
        self.fwd_valid_to == self.pulses.len() && self.bwd_valid_from == 0
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.pulses.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.pulses.len(),
            });
        }
        Ok(())
    }

    fn bracket_values(&self) -> Vec<C64> {
        let split = self.bwd_valid_from.min(self.fwd_valid_to);
        self.wiring
            .brackets
            .iter()
            .map(|&(f, i)| raw_inner(&self.bwd[f][split], &self.fwd[i][split]))
            .collect()
    }

    fn total_from(&self, values: &[C64]) -> f64 {
        let mut phi = 0.0;
        for (t, term) in self.objective.terms.iter().enumerate() {
            let a = &values[self.wiring.term_a[t].clone()];
            let b = &values[self.wiring.term_b[t].clone()];
            phi += combine_value(term, a, b);
        }
        phi
    }

    /// Current performance function value from the caches.
    pub fn phi(&self) -> f64 {
        self.total_from(&self.bracket_values())
    }

    /// Bracket values with pulse `k` replaced by `(−iH)^power · u_k(theta)`;
    /// `None` deletes the pulse.
    fn bracket_values_at(&mut self, k: usize, theta: Option<f64>, power: u8) -> Result<Vec<C64>> {
        self.check_index(k)?;
        if k > self.fwd_valid_to || k + 1 < self.bwd_valid_from {
            return Err(Error::StaleCache);
        }
        let mut transformed: Vec<Array1<C64>> = Vec::with_capacity(self.inits.len());
        for u in 0..self.inits.len() {
            let mut v = self.fwd[u][k].clone();
            if let Some(theta) = theta {
                let trial = Pulse {
                    kind: self.pulses[k].kind.clone(),
                    theta,
                };
                if power == 0 {
                    self.apply(&trial, &mut v)?;
                } else {
                    self.apply_fused(&trial, power, &mut v)?;
                }
            }
            transformed.push(v);
        }
        Ok(self
            .wiring
            .brackets
            .iter()
            .map(|&(f, i)| raw_inner(&self.bwd[f][k + 1], &transformed[i]))
            .collect())
    }

    /// φ_k(theta): the performance function as a function of angle `k` alone.
    pub fn phi_with_angle(&mut self, k: usize, theta: f64) -> Result<f64> {
        self.check_index(k)?;
        if !self.pulses[k].kind.is_angle_kind() {
            return Err(Error::NotUnitaryKind(self.pulses[k].kind.label()));
        }
        let vals = self.bracket_values_at(k, Some(theta), 0)?;
        Ok(self.total_from(&vals))
    }

    /// Φ with pulse `k` deleted (identity substituted).
    pub fn phi_without(&mut self, k: usize) -> Result<f64> {
        let vals = self.bracket_values_at(k, None, 0)?;
        Ok(self.total_from(&vals))
    }

    /// Value, first and second derivative of φ_k at angle `theta`.
    pub fn local_quadratic_at(&mut self, k: usize, theta: f64) -> Result<(f64, f64, f64)> {
        self.check_index(k)?;
        if !self.pulses[k].kind.is_angle_kind() {
            return Err(Error::NotUnitaryKind(self.pulses[k].kind.label()));
        }
        let v0 = self.bracket_values_at(k, Some(theta), 0)?;
        let v1 = self.bracket_values_at(k, Some(theta), 1)?;
        let v2 = self.bracket_values_at(k, Some(theta), 2)?;
        let mut value = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (t, term) in self.objective.terms.iter().enumerate() {
            let ra = self.wiring.term_a[t].clone();
            let rb = self.wiring.term_b[t].clone();
            value += combine_value(term, &v0[ra.clone()], &v0[rb.clone()]);
            d1 += combine_d1(
                term,
                &v0[ra.clone()],
                &v0[rb.clone()],
                &v1[ra.clone()],
                &v1[rb.clone()],
            );
            d2 += combine_d2(
                term,
                &v0[ra.clone()],
                &v0[rb.clone()],
                &v1[ra.clone()],
                &v1[rb.clone()],
                &v2[ra],
                &v2[rb],
            );
        }
        Ok((value, d1, d2))
    }

    /// Value, first and second derivative of φ_k at the current angle.
    pub fn local_quadratic(&mut self, k: usize) -> Result<(f64, f64, f64)> {
        self.check_index(k)?;
        let theta = self.pulses[k].theta;
        self.local_quadratic_at(k, theta)
    }

    /// Importance of pulse `k` at angle `theta`: Φ with the pulse present
    /// minus Φ with the pulse deleted. May be negative.
    pub fn importance_at(&mut self, k: usize, theta: f64) -> Result<f64> {
        let with = self.phi_with_angle(k, theta)?;
        let without = self.phi_without(k)?;
        Ok(with - without)
    }

    /// Importance at the current angle.
    pub fn importance(&mut self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        let theta = self.pulses[k].theta;
        self.importance_at(k, theta)
    }

    /// Exact analytic gradient with respect to every pulse angle. Entries
    /// for parameterless pulses (swap slots) are zero. Requires fresh caches.
    pub fn gradient(&mut self) -> Result<Vec<f64>> {
        if !self.is_fresh() {
            return Err(Error::StaleCache);
        }
        let t_len = self.pulses.len();
        let v0 = self.bracket_values();
        let mut grad = vec![0.0; t_len];
        for k in 0..t_len {
            if !self.pulses[k].kind.is_angle_kind() {
                continue;
            }
            let theta = self.pulses[k].theta;
            let v1 = self.bracket_values_at(k, Some(theta), 1)?;
            let mut g = 0.0;
            for (t, term) in self.objective.terms.iter().enumerate() {
                let ra = self.wiring.term_a[t].clone();
                let rb = self.wiring.term_b[t].clone();
                g += combine_d1(term, &v0[ra.clone()], &v0[rb.clone()], &v1[ra], &v1[rb]);
            }
            grad[k] = g;
        }
        Ok(grad)
    }

    /// Commit a new angle for pulse `k` and advance the prefix caches past
    /// it. Sweeps call this strictly left to right.
    pub fn commit_angle(&mut self, k: usize, theta: f64) -> Result<()> {
        self.check_index(k)?;
        if !self.pulses[k].kind.is_angle_kind() {
            return Err(Error::NotUnitaryKind(self.pulses[k].kind.label()));
        }
        self.pulses[k].theta = theta;
        self.advance_fwd(k)
    }

    fn advance_fwd(&mut self, k: usize) -> Result<()> {
        if k > self.fwd_valid_to || k + 1 < self.bwd_valid_from {
            return Err(Error::StaleCache);
        }
        let p = self.pulses[k].clone();
        for u in 0..self.inits.len() {
            let mut v = self.fwd[u][k].clone();
            self.apply(&p, &mut v)?;
            self.fwd[u][k + 1] = v;
        }
        self.fwd_valid_to = k + 1;
        self.bwd_valid_from = self.bwd_valid_from.max(k + 1);
        Ok(())
    }

    /// Advance the prefix caches past pulse `k` without changing its angle.
    pub fn advance_past(&mut self, k: usize) -> Result<()> {
        self.check_index(k)?;
        self.advance_fwd(k)
    }

    /// Delete pulse `k`. Suffix caches for later positions stay valid; the
    /// prefix caches remain valid up to `k`.
    pub fn delete_pulse(&mut self, k: usize) -> Result<()> {
        self.check_index(k)?;
        self.pulses.remove(k);
        for per_init in &mut self.fwd {
            per_init.remove(k + 1);
        }
        for per_final in &mut self.bwd {
            per_final.remove(k);
        }
        self.fwd_valid_to = self.fwd_valid_to.min(k);
        self.bwd_valid_from = if self.bwd_valid_from > k {
            self.bwd_valid_from - 1
        } else {
            k
        };
        Ok(())
    }

    /// Insert a pulse at position `k` and rebuild the caches.
    pub fn insert_pulse(&mut self, k: usize, pulse: Pulse) -> Result<()> {
        if k > self.pulses.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.pulses.len(),
            });
        }
        self.pulses.insert(k, pulse);
        self.refresh()
    }

    /// Overwrite an angle without updating the caches; callers refresh later.
    pub fn set_angle_stale(&mut self, k: usize, theta: f64) -> Result<()> {
        self.check_index(k)?;
        if !self.pulses[k].kind.is_angle_kind() {
            return Err(Error::NotUnitaryKind(self.pulses[k].kind.label()));
        }
        self.pulses[k].theta = theta;
        self.fwd_valid_to = self.fwd_valid_to.min(k);
        self.bwd_valid_from = self.bwd_valid_from.max(k + 1);
        Ok(())
    }
}

/// Evaluate a performance function on a unitary sequence.
pub fn evaluate(objective: &Objective, seq: &PulseSequence) -> Result<f64> {
    let ctx = EvalContext::new(objective.clone(), seq)?;
    Ok(ctx.phi())
}

/// State-prep objective: `Φ = |⟨target|U|init⟩|²`, maximum 1.
pub fn state_prep_objective(target: &StateVector, init: &StateVector) -> Result<Objective> {
    if target.dim() != init.dim() {
        return Err(Error::DimensionMismatch {
            left: target.dim(),
            right: init.dim(),
        });
    }
    for s in [target, init] {
        let n = s.norm();
        if (n - 1.0).abs() > crate::tensor::NORM_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
    }
    let bracket = BracketSpec {
        final_state: target.clone(),
        init_state: init.clone(),
    };
    let obj = Objective {
        kind: ObjectiveKind::StatePrep,
        n_qubits: target.n_qubits(),
        max_value: 1.0,
        terms: vec![Term {
            label: "prep".into(),
            combine: Combine::ProductPerK,
            weight: 1.0,
            a: vec![bracket.clone()],
            b: vec![bracket],
        }],
    };
    obj.validate()?;
    Ok(obj)
}

fn unitary_columns(target: &crate::tensor::ComplexOperator) -> Vec<BracketSpec> {
    let d = target.dim();
    let n = target.n_qubits();
    (0..d)
        .map(|c| {
            let init = StateVector::basis(n, c).unwrap();
            let mut col = Array1::zeros(d);
            for r in 0..d {
                col[r] = target.mat()[[r, c]];
            }
            BracketSpec {
                final_state: StateVector::new(n, col).unwrap(),
                init_state: init,
            }
        })
        .collect()
}

/// `Φ_Re = Re tr(U_target† · U)`, maximum `2^N`.
pub fn fixed_unitary_re(target: &crate::tensor::ComplexOperator) -> Result<Objective> {
    let obj = Objective {
        kind: ObjectiveKind::FixedUnitaryRe,
        n_qubits: target.n_qubits(),
        max_value: target.dim() as f64,
        terms: vec![Term {
            label: "trace".into(),
            combine: Combine::RealOfSum,
            weight: 1.0,
            a: unitary_columns(target),
            b: vec![],
        }],
    };
    obj.validate()?;
    Ok(obj)
}

/// `Φ_Abs = |tr(U_target† · U)|² / 2^{2N}`, normalized to maximum 1.
pub fn fixed_unitary_abs(target: &crate::tensor::ComplexOperator) -> Result<Objective> {
    let cols = unitary_columns(target);
    let d = target.dim() as f64;
    let obj = Objective {
        kind: ObjectiveKind::FixedUnitaryAbs,
        n_qubits: target.n_qubits(),
        max_value: 1.0,
        terms: vec![Term {
            label: "trace".into(),
            combine: Combine::ProductOfSums,
            weight: 1.0 / (d * d),
            a: cols.clone(),
            b: cols,
        }],
    };
    obj.validate()?;
    Ok(obj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::{pulse_unitary_in, PulseKind};
    use crate::tensor::{ComplexOperator, StateVector};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_sequence(n: usize, t: usize, rng: &mut StdRng) -> PulseSequence {
        let mut pulses = Vec::new();
        for _ in 0..t {
            let kind = match rng.gen_range(0..5) {
                0 => PulseKind::GlobalX,
                1 => PulseKind::GlobalY,
                2 => PulseKind::MsXX,
                3 => PulseKind::MsYY,
                _ => PulseKind::LocalZ(rng.gen_range(1..=n)),
            };
            pulses.push(Pulse::unitary(kind, rng.gen_range(-PI..PI)).unwrap());
        }
        PulseSequence::new(n, pulses).unwrap()
    }

    /// Independent oracle: evaluate by materializing every pulse unitary and
    /// taking the full matrix product.
    fn naive_phi(obj: &Objective, seq: &PulseSequence) -> f64 {
        let mut u = ComplexOperator::identity(seq.n_qubits).unwrap();
        for p in &seq.pulses {
            let up = pulse_unitary_in(p, seq.n_qubits, seq.n_active).unwrap();
            u = up.matmul(&u).unwrap();
        }
        let mut phi = 0.0;
        for term in &obj.terms {
            let bracket = |br: &BracketSpec| -> C64 {
                let evolved = u.apply(&br.init_state).unwrap();
                crate::tensor::inner_states(&br.final_state, &evolved).unwrap()
            };
            let a: Vec<C64> = term.a.iter().map(bracket).collect();
            let b: Vec<C64> = term.b.iter().map(bracket).collect();
            phi += combine_value(term, &a, &b);
        }
        phi
    }

    fn random_state(n: usize, rng: &mut StdRng) -> StateVector {
        let dim = 1usize << n;
        let mut amps = Array1::zeros(dim);
        for a in amps.iter_mut() {
            *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        StateVector::new(n, amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn cached_phi_matches_naive_product() {
        let mut rng = StdRng::seed_from_u64(41);
        for trial in 0..8 {
            let n = 2 + trial % 3;
            let t = 3 + trial * 2;
            let seq = random_sequence(n, t, &mut rng);
            let target = random_state(n, &mut rng);
            let init = random_state(n, &mut rng);
            let obj = state_prep_objective(&target, &init).unwrap();
            let phi = evaluate(&obj, &seq).unwrap();
            assert!((0.0..=1.0 + 1e-10).contains(&phi));
            assert_abs_diff_eq!(phi, naive_phi(&obj, &seq), epsilon = 1e-10);
        }
    }

    #[test]
    fn identity_sequence_prep_values() {
        let mut rng = StdRng::seed_from_u64(42);
        let s = random_state(2, &mut rng);
        let obj = state_prep_objective(&s, &s).unwrap();
        let seq = PulseSequence::new(2, vec![]).unwrap();
        assert_abs_diff_eq!(evaluate(&obj, &seq).unwrap(), 1.0, epsilon = 1e-12);
        let orth = StateVector::basis(2, 0).unwrap();
        let target = StateVector::basis(2, 3).unwrap();
        let obj = state_prep_objective(&target, &orth).unwrap();
        assert_abs_diff_eq!(evaluate(&obj, &seq).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(43);
        let h = 1e-5;
        for trial in 0..6 {
            let n = 2 + trial % 2;
            let seq = random_sequence(n, 8, &mut rng);
            let target = random_state(n, &mut rng);
            let init = random_state(n, &mut rng);
            let obj = state_prep_objective(&target, &init).unwrap();
            let mut ctx = EvalContext::new(obj.clone(), &seq).unwrap();
            let grad = ctx.gradient().unwrap();
            for k in 0..seq.pulses.len() {
                let mut up = seq.clone();
                up.pulses[k].theta += h;
                let mut dn = seq.clone();
                dn.pulses[k].theta -= h;
                let fd = (evaluate(&obj, &up).unwrap() - evaluate(&obj, &dn).unwrap()) / (2.0 * h);
                let scale = grad[k].abs().max(fd.abs()).max(1e-3);
                assert!(
                    (grad[k] - fd).abs() / scale < 1e-6,
                    "k={k} grad={} fd={fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn fixed_unitary_re_closed_form() {
        // Single pulse u = exp(−iθσx/2) against target I on one qubit:
        // Φ = 2cos(θ/2), dΦ/dθ = −sin(θ/2), d²Φ/dθ² = −cos(θ/2)/2.
        let target = ComplexOperator::identity(1).unwrap();
        let obj = fixed_unitary_re(&target).unwrap();
        let theta = 0.7;
        let seq =
            PulseSequence::new(1, vec![Pulse::unitary(PulseKind::GlobalX, theta).unwrap()])
                .unwrap();
        let mut ctx = EvalContext::new(obj, &seq).unwrap();
        let (v, d1, d2) = ctx.local_quadratic(0).unwrap();
        assert_abs_diff_eq!(v, 2.0 * (theta / 2.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(d1, -(theta / 2.0).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(d2, -(theta / 2.0).cos() / 2.0, epsilon = 1e-12);
        let grad = ctx.gradient().unwrap();
        assert_abs_diff_eq!(grad[0], -(theta / 2.0).sin(), epsilon = 1e-12);
    }

    #[test]
    fn abs_invariant_under_global_phase() {
        let mut rng = StdRng::seed_from_u64(44);
        let seq = random_sequence(2, 5, &mut rng);
        let target = pulse_unitary_in(&seq.pulses[0], 2, 2).unwrap();
        let obj = fixed_unitary_abs(&target).unwrap();
        let rotated = fixed_unitary_abs(&target.scaled(C64::from_polar(1.0, 1.234))).unwrap();
        let a = evaluate(&obj, &seq).unwrap();
        let b = evaluate(&rotated, &seq).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn importance_zero_for_zero_angle() {
        let mut rng = StdRng::seed_from_u64(45);
        let mut seq = random_sequence(2, 6, &mut rng);
        seq.pulses[3] = Pulse::unitary(PulseKind::GlobalY, 0.0).unwrap();
        let target = random_state(2, &mut rng);
        let init = random_state(2, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj, &seq).unwrap();
        assert_abs_diff_eq!(ctx.importance(3).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn importance_invariant_under_splitting_neighbor() {
        let mut rng = StdRng::seed_from_u64(46);
        let seq = random_sequence(2, 5, &mut rng);
        let target = random_state(2, &mut rng);
        let init = random_state(2, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj.clone(), &seq).unwrap();
        let imp = ctx.importance(2).unwrap();

        let mut split = seq.clone();
        let half = Pulse {
            kind: split.pulses[3].kind.clone(),
            theta: split.pulses[3].theta / 2.0,
        };
        split.pulses[3] = half.clone();
        split.pulses.insert(4, half);
        let mut ctx2 = EvalContext::new(obj, &split).unwrap();
        let imp2 = ctx2.importance(2).unwrap();
        assert_abs_diff_eq!(imp, imp2, epsilon = 1e-10);
    }

    #[test]
    fn stale_cache_detected() {
        let mut rng = StdRng::seed_from_u64(47);
        let seq = random_sequence(2, 4, &mut rng);
        let target = random_state(2, &mut rng);
        let init = random_state(2, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj, &seq).unwrap();
        ctx.set_angle_stale(1, 0.3).unwrap();
        assert!(matches!(ctx.gradient(), Err(Error::StaleCache)));
        ctx.refresh().unwrap();
        assert!(ctx.gradient().is_ok());
    }

    #[test]
    fn commit_angle_keeps_caches_consistent() {
        let mut rng = StdRng::seed_from_u64(48);
        let seq = random_sequence(3, 7, &mut rng);
        let target = random_state(3, &mut rng);
        let init = random_state(3, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj.clone(), &seq).unwrap();
        for k in 0..seq.pulses.len() {
            let new_theta = seq.pulses[k].theta * 0.5 + 0.1;
            ctx.commit_angle(k, new_theta).unwrap();
        }
        let phi_inc = ctx.phi();
        let final_seq = ctx.sequence();
        let phi_direct = evaluate(&obj, &final_seq).unwrap();
        assert_abs_diff_eq!(phi_inc, phi_direct, epsilon = 1e-10);
        assert_abs_diff_eq!(phi_inc, naive_phi(&obj, &final_seq), epsilon = 1e-10);
    }

    #[test]
    fn delete_pulse_keeps_caches_consistent() {
        let mut rng = StdRng::seed_from_u64(49);
        let seq = random_sequence(2, 6, &mut rng);
        let target = random_state(2, &mut rng);
        let init = random_state(2, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj.clone(), &seq).unwrap();
        ctx.advance_past(0).unwrap();
        ctx.advance_past(1).unwrap();
        ctx.delete_pulse(2).unwrap();
        let phi = ctx.phi();
        let mut removed = seq.clone();
        removed.pulses.remove(2);
        assert_abs_diff_eq!(phi, evaluate(&obj, &removed).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn gradient_cost_is_linear_in_length() {
        // Counted operator applications for the cached gradient stay well
        // below a naive quadratic scheme's count at T = 32.
        let mut rng = StdRng::seed_from_u64(50);
        let t_len = 32usize;
        let seq = random_sequence(2, t_len, &mut rng);
        let target = random_state(2, &mut rng);
        let init = random_state(2, &mut rng);
        let obj = state_prep_objective(&target, &init).unwrap();
        let mut ctx = EvalContext::new(obj.clone(), &seq).unwrap();
        let _ = ctx.gradient().unwrap();
        let cached_total = ctx.matvec_ops(); // includes the refresh in new()

        // Naive quadratic reference: for each of the T derivatives, rebuild
        // the bracket with a full left-to-right product (T applications per
        // bracket side; one init and one final vector here).
        let naive_total = (t_len * t_len * 2) as u64;
        assert!(
            (cached_total as f64) < 0.2 * naive_total as f64,
            "cached {cached_total} naive {naive_total}"
        );
    }
}
