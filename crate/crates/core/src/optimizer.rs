//! Sequence optimization: sequential parabola updates with zero-displacement
//! pruning, quantization pressure, annealing displacements, a coupling
//! schedule, padding, and the disturb-and-reoptimize protocol.
//!
//! Each sweep updates the angles one at a time. The split-product caches
//! give the restricted function φ_k, its derivatives and the pulse
//! importance cheaply; the new angle is the parabola vertex pushed back
//! toward zero by a displacement whose tolerated loss grows inversely with
//! the pulse importance. A pulse whose displacement reaches past the vertex
//! is erased, which is how long random initial sequences shrink to short
//! solutions. Quantization pressure pulls surviving angles onto the
//! `m/2^n·π` grid late in the run, and the final sweeps run with all
//! couplings at zero to polish an undisturbed maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gateset::{Pulse, PulseKind, PulseSequence, MAX_PULSE_ANGLE};
use crate::objective::{evaluate, EvalContext, Objective};

/// One immutable slot of the initial sequence (Mølmer–Sørensen pulses with
/// pinned angle, or swap-out wiring).
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSlotSpec {
    pub kind: PulseKind,
    pub theta: f64,
}

/// Optimizer configuration. The defaults reproduce the qualitative coupling
/// arc: γ⁰ starts tiny, grows geometrically once the value is within reach
/// of the maximum, and is zeroed for the final polish.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Initial sequence length T₀, fixed slots included.
    pub initial_length: usize,
    /// Immutable slots placed evenly (in order) in the initial sequence.
    pub fixed_slots: Vec<FixedSlotSpec>,
    /// Active window; elementary pulses act on qubits `1..=n_active`.
    pub n_active: Option<usize>,
    pub gamma0_start: f64,
    pub gamma0_growth: f64,
    pub gamma0_cap: f64,
    /// γ⁰ starts growing once Φ first exceeds this fraction of the maximum.
    pub gamma0_trigger: f64,
    pub gamma_quant: f64,
    /// Fraction of the sweep budget after which quantization pressure is on.
    pub quant_start_fraction: f64,
    /// Fraction of the sweep budget reserved for the zero-coupling polish.
    pub polish_fraction: f64,
    /// Annealing temperature (0 disables the annealing displacement).
    pub temperature: f64,
    pub temperature_decay: f64,
    /// Quantization grid `m/2^n·π` with `n ≤ quant_grid_max_level`.
    pub quant_grid_max_level: u32,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub epsilon_conv: f64,
    pub seed: u64,
    /// Trial angles for the bounded line-search fallback.
    pub line_search_trials: usize,
    /// Sweeps without improvement before γ⁰ starts growing even when the
    /// value trigger has not fired.
    pub stall_window: usize,
    /// Fresh near-identity pulses injected on a deep stall (the strongest
    /// escape from a local trap), and how often that is allowed per run.
    pub pad_on_stall: usize,
    pub max_pads_per_run: usize,
    /// Disturb-and-reoptimize: number of fresh disturbance rounds.
    pub disturb_rounds: usize,
    /// Sweep budget per repair attempt.
    pub disturb_repair_sweeps: usize,
    /// Near-identity pulses added when a repair fails, and the sweep budget
    /// for re-optimizing the padded sequence.
    pub disturb_fill_count: usize,
    pub disturb_fill_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            initial_length: 24,
            fixed_slots: Vec::new(),
            n_active: None,
            gamma0_start: 1e-8,
            gamma0_growth: 1.15,
            gamma0_cap: 1e-2,
            gamma0_trigger: 0.8,
            gamma_quant: 1e-3,
            quant_start_fraction: 0.7,
            polish_fraction: 0.1,
            temperature: 0.0,
            temperature_decay: 0.95,
            quant_grid_max_level: 3,
            restarts: 8,
            max_sweeps: 200,
            epsilon_conv: 1e-9,
            seed: 1,
            line_search_trials: 8,
            disturb_rounds: 4,
            disturb_repair_sweeps: 30,
            disturb_fill_count: 20,
            disturb_fill_sweeps: 40,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_length < self.fixed_slots.len() {
            return Err(Error::ConfigInvalid(format!(
                "initial length {} smaller than {} fixed slots",
                self.initial_length,
                self.fixed_slots.len()
            )));
        }
        if self.epsilon_conv <= 0.0 {
            return Err(Error::ConfigInvalid("epsilon_conv must be positive".into()));
        }
        if self.quant_grid_max_level > 6 {
            return Err(Error::ConfigInvalid(
                "quantization grid level capped at 6".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.polish_fraction)
            || !(0.0..=1.0).contains(&self.quant_start_fraction)
        {
            return Err(Error::ConfigInvalid("phase fractions out of range".into()));
        }
        for slot in &self.fixed_slots {
            if !slot.kind.is_unitary() {
                return Err(Error::ConfigInvalid(format!(
                    "fixed slot kind {} is not unitary",
                    slot.kind
                )));
            }
        }
        Ok(())
    }
}

/// One line of the optimization trace.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub restart: usize,
    pub sweep: usize,
    pub phi: f64,
    pub pulses: usize,
    pub gamma0: f64,
    pub gamma_quant: f64,
    pub temperature: f64,
    pub phase: char,
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub converged: bool,
    pub best_phi: f64,
    pub best_sequence: PulseSequence,
    pub max_value: f64,
    pub restarts_run: usize,
    pub best_restart: usize,
    pub trace: Vec<TraceRecord>,
}

impl OptimizationReport {
    pub fn gap(&self) -> f64 {
        self.max_value - self.best_phi
    }
}

/// A sequence with its value, ordered by (Φ, then fewer pulses, then
/// smaller total non-MS angle, then pulse kind labels).
#[derive(Debug, Clone)]
pub struct Scored {
    pub phi: f64,
    pub seq: PulseSequence,
}

impl Scored {
    fn non_ms_total_angle(&self) -> f64 {
        self.seq
            .pulses
            .iter()
            .filter(|p| p.kind.is_angle_kind() && !p.kind.is_ms())
            .map(|p| p.theta.abs())
            .sum()
    }

    fn kind_key(&self) -> String {
        self.seq
            .pulses
            .iter()
            .map(|p| p.kind.label())
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Total order used for best-so-far tracking and restart reduction.
    pub fn better_than(&self, other: &Scored) -> bool {
        if (self.phi - other.phi).abs() > 1e-12 {
            return self.phi > other.phi;
        }
        let (a, b) = (self.seq.unitary_count(), other.seq.unitary_count());
        if a != b {
            return a < b;
        }
        let (sa, sb) = (self.non_ms_total_angle(), other.non_ms_total_angle());
        if (sa - sb).abs() > 1e-12 {
            return sa < sb;
        }
        self.kind_key() < other.kind_key()
    }
}

/// Mutable optimizer state: the cached evaluation context plus the fixed
/// mask, the current coupling factors and the best sequence seen so far.
pub struct OptimizerState {
    pub ctx: EvalContext,
    pub fixed: Vec<bool>,
    pub gamma0: f64,
    pub gamma_quant: f64,
    pub temperature: f64,
    pub sweep_count: usize,
    pub best: Scored,
    rng: ChaCha8Rng,
    quant_grid_step: f64,
    line_search_trials: usize,
}

fn random_pulse(n_active: usize, rng: &mut ChaCha8Rng, max_angle: f64) -> Pulse {
    let kind = match rng.gen_range(0..3) {
        0 => PulseKind::GlobalX,
        1 => PulseKind::GlobalY,
        _ => PulseKind::LocalZ(rng.gen_range(1..=n_active)),
    };
    let theta = if max_angle > 0.0 {
        rng.gen_range(-max_angle..=max_angle)
    } else {
        0.0
    };
    Pulse::unitary(kind, theta).unwrap()
}

/// Build the initial sequence: fixed slots at evenly spaced positions, the
/// remaining slots filled with random collective rotations and local z
/// pulses with angles uniform in [−π, π].
pub fn init_sequence(
    cfg: &OptimizerConfig,
    n_qubits: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PulseSequence> {
    cfg.validate()?;
    let n_active = cfg.n_active.unwrap_or(n_qubits);
    let t0 = cfg.initial_length;
    let f = cfg.fixed_slots.len();
    let mut fixed_positions: Vec<usize> = (0..f).map(|i| ((i + 1) * t0) / (f + 1)).collect();
    for i in 0..fixed_positions.len() {
        let min_pos = if i == 0 { 0 } else { fixed_positions[i - 1] + 1 };
        fixed_positions[i] = fixed_positions[i].max(min_pos).min(t0 - (f - i));
    }
    let mut pulses = Vec::with_capacity(t0);
    let mut next_fixed = 0;
    for pos in 0..t0 {
        if next_fixed < f && fixed_positions[next_fixed] == pos {
            let slot = &cfg.fixed_slots[next_fixed];
            let pulse = if slot.kind.is_angle_kind() {
                Pulse::unitary(slot.kind.clone(), slot.theta)?
            } else {
                Pulse {
                    kind: slot.kind.clone(),
                    theta: 0.0,
                }
            };
            pulses.push(pulse);
            next_fixed += 1;
        } else {
            pulses.push(random_pulse(n_active, rng, std::f64::consts::PI));
        }
    }
    PulseSequence::with_active(n_qubits, n_active, pulses)
}

/// Fixed mask matching [`init_sequence`] output: the configured fixed slots
/// (MS pulses and swap wiring) are immutable.
pub fn fixed_mask(cfg: &OptimizerConfig, seq: &PulseSequence) -> Vec<bool> {
    let mut remaining = cfg.fixed_slots.len();
    seq.pulses
        .iter()
        .map(|p| {
            if remaining > 0 && (p.kind.is_ms() || matches!(p.kind, PulseKind::SwapOut(_, _))) {
                remaining -= 1;
                true
            } else {
                matches!(p.kind, PulseKind::SwapOut(_, _))
            }
        })
        .collect()
}

impl OptimizerState {
    pub fn new(
        cfg: &OptimizerConfig,
        objective: Objective,
        seq: PulseSequence,
        fixed: Vec<bool>,
        seed: u64,
    ) -> Result<Self> {
        if fixed.len() != seq.pulses.len() {
            return Err(Error::ConfigInvalid(
                "fixed mask length differs from sequence length".into(),
            ));
        }
        let ctx = EvalContext::new(objective, &seq)?;
        let phi = ctx.phi();
        Ok(Self {
            ctx,
            fixed,
            gamma0: cfg.gamma0_start,
            gamma_quant: 0.0,
            temperature: cfg.temperature,
            sweep_count: 0,
            best: Scored { phi, seq },
            rng: ChaCha8Rng::seed_from_u64(seed),
            quant_grid_step: std::f64::consts::PI / (1u64 << cfg.quant_grid_max_level) as f64,
            line_search_trials: cfg.line_search_trials,
        })
    }

    pub fn phi(&self) -> f64 {
        self.ctx.phi()
    }

    fn record_best(&mut self) {
        let candidate = Scored {
            phi: self.ctx.phi(),
            seq: self.ctx.sequence(),
        };
        if candidate.better_than(&self.best) {
            self.best = candidate;
        }
    }
}

/// Outcome of one displaced update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Updated,
    Deleted,
}

fn wrap_angle(kind: &PulseKind, theta: f64) -> f64 {
    if theta.abs() <= MAX_PULSE_ANGLE {
        return theta;
    }
    Pulse {
        kind: kind.clone(),
        theta,
    }
    .canonical_angle()
}

/// One displaced update of pulse `k`: parabola ascent with the
/// zero-pressure, quantization and annealing displacements, deleting the
/// pulse when the zero displacement reaches past the vertex.
pub fn displaced_update(state: &mut OptimizerState, k: usize) -> Result<UpdateOutcome> {
    if state.fixed.get(k).copied().unwrap_or(false) {
        return Err(Error::FixedSlot(k));
    }
    let theta = state.ctx.pulses()[k].theta;
    let (phi_cur, d1, d2) = state.ctx.local_quadratic(k)?;

    // Parabola vertex with validation; bounded line search as the fallback.
    let mut alpha_max = None;
    if d2 < -1e-12 {
        let vertex = theta - d1 / d2;
        let predicted = phi_cur + d1 * (vertex - theta) + 0.5 * d2 * (vertex - theta).powi(2);
        let actual = state.ctx.phi_with_angle(k, vertex)?;
        let gain = predicted - phi_cur;
        if gain >= -1e-15 && (actual - predicted).abs() <= 0.1 * gain.abs() + 1e-13 {
            alpha_max = Some(vertex);
        }
    }
    let alpha_max = match alpha_max {
        Some(v) => v,
        None => {
            // Line search over ≤ `line_search_trials` angles in ±π/2 around
            // the current angle; the current angle always competes, so the
            // accepted value never drops.
            let mut best_angle = theta;
            let mut best_val = phi_cur;
            let trials = state.line_search_trials.clamp(2, 8);
            for i in 0..trials {
                let frac = i as f64 / (trials - 1) as f64 - 0.5;
                let trial = theta + frac * std::f64::consts::PI;
                let val = state.ctx.phi_with_angle(k, trial)?;
                if val > best_val + 1e-12 {
                    best_val = val;
                    best_angle = trial;
                }
            }
            best_angle
        }
    };

    // Zero displacement from the tolerated loss Δ⁰Φ = γ⁰·[(0.25/I)⁵ + 1],
    // inverted through the parabola: δ⁰ = sqrt(2Δ⁰/|φ″|). A vanishing
    // curvature sends δ⁰ past the vertex, so flat directions are pruned
    // whenever γ⁰ is on.
    let curvature = d2.abs();
    let mut delete = false;
    let mut delta0 = 0.0;
    if state.gamma0 > 0.0 {
        let importance = state.ctx.importance_at(k, alpha_max)?;
        if importance <= 0.0 {
            delete = true;
        } else {
            let tolerated = state.gamma0 * ((0.25 / importance).powi(5) + 1.0);
            delta0 = (2.0 * tolerated / curvature).sqrt();
            if !delta0.is_finite() || delta0 >= alpha_max.abs() {
                delete = true;
            }
        }
    }
    if delete {
        state.ctx.delete_pulse(k)?;
        state.fixed.remove(k);
        return Ok(UpdateOutcome::Deleted);
    }
    let mut new_angle = alpha_max - alpha_max.signum() * delta0;

    // Quantization displacement toward the grid point nearest the vertex,
    // zero at midpoints, capped so it lands exactly on the grid.
    if state.gamma_quant > 0.0 {
        let step = state.quant_grid_step;
        let grid = (alpha_max / step).round() * step;
        let dist = (alpha_max - grid).abs();
        let strength = (1.0 - 2.0 * dist / step).max(0.0);
        if strength > 0.0 {
            let tolerated = state.gamma_quant * strength;
            let raw = (2.0 * tolerated / curvature).sqrt();
            let toward = grid - new_angle;
            let magnitude = raw.min(toward.abs());
            new_angle += toward.signum() * magnitude;
        }
    }

    // Annealing displacement drawn from an exponential (Boltzmann) law,
    // bounded to half a period so flat directions cannot blow up.
    if state.temperature > 0.0 {
        let u: f64 = state.rng.gen_range(f64::MIN_POSITIVE..1.0);
        let tolerated = -state.temperature * u.ln();
        let raw = (2.0 * tolerated / curvature).sqrt().min(std::f64::consts::PI);
        let sign = if state.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        new_angle += sign * raw;
    }

    let committed = wrap_angle(&state.ctx.pulses()[k].kind, new_angle);
    state.ctx.commit_angle(k, committed)?;
    Ok(UpdateOutcome::Updated)
}

/// One pass of displaced updates over all non-fixed pulses. Suffix caches
/// are rebuilt at the start; prefixes advance incrementally as angles are
/// committed.
pub fn sweep(state: &mut OptimizerState) -> Result<()> {
    state.ctx.refresh_for_sweep()?;
    let mut k = 0;
    while k < state.ctx.len() {
        if state.fixed[k] {
            state.ctx.advance_past(k)?;
            k += 1;
            continue;
        }
        match displaced_update(state, k)? {
            UpdateOutcome::Updated => k += 1,
            UpdateOutcome::Deleted => {}
        }
    }
    state.sweep_count += 1;
    state.record_best();
    Ok(())
}

/// Insert `count` near-identity pulses (|angle| ≤ `scale`) at random
/// positions.
pub fn pad_with_scale(state: &mut OptimizerState, count: usize, scale: f64) -> Result<()> {
    let mut seq = state.ctx.sequence();
    let n_active = seq.n_active;
    for _ in 0..count {
        let pos = state.rng.gen_range(0..=seq.pulses.len());
        let pulse = random_pulse(n_active, &mut state.rng, scale);
        seq.pulses.insert(pos, pulse);
        state.fixed.insert(pos, false);
    }
    let objective = state.ctx.objective().clone();
    let mut rebuilt = EvalContext::new(objective, &seq)?;
    std::mem::swap(&mut state.ctx, &mut rebuilt);
    Ok(())
}

/// Escape-helper padding with the default near-identity scale.
pub fn pad(state: &mut OptimizerState, count: usize) -> Result<()> {
    pad_with_scale(state, count, 1e-4)
}

struct Schedule {
    max_sweeps: usize,
    quant_start: f64,
    polish_start: f64,
}

/// Drive one state through the coupling schedule. Returns true when the
/// value converged to within `epsilon_conv` of the maximum.
fn run_schedule(
    state: &mut OptimizerState,
    cfg: &OptimizerConfig,
    schedule: &Schedule,
    restart: usize,
    trace: &mut Vec<TraceRecord>,
) -> Result<bool> {
    let max_value = state.ctx.objective().max_value;
    let mut triggered = false;
    let mut converged = false;
    for sweep_idx in 0..schedule.max_sweeps {
        let frac = sweep_idx as f64 / schedule.max_sweeps as f64;
        let phase = if frac >= schedule.polish_start {
            state.gamma0 = 0.0;
            state.gamma_quant = 0.0;
            state.temperature = 0.0;
            'D'
        } else if frac >= schedule.quant_start {
            state.gamma0 = 0.0;
            state.gamma_quant = cfg.gamma_quant;
            'C'
        } else if triggered {
            state.gamma0 = (state.gamma0 * cfg.gamma0_growth).min(cfg.gamma0_cap);
            state.gamma_quant = 0.0;
            'B'
        } else {
            state.gamma0 = cfg.gamma0_start;
            state.gamma_quant = 0.0;
            'A'
        };
        if cfg.temperature > 0.0 && phase != 'D' {
            state.temperature = cfg.temperature * cfg.temperature_decay.powi(sweep_idx as i32);
        }
        sweep(state)?;
        let phi = state.phi();
        trace.push(TraceRecord {
            restart,
            sweep: state.sweep_count,
            phi,
            pulses: state.ctx.sequence().unitary_count(),
            gamma0: state.gamma0,
            gamma_quant: state.gamma_quant,
            temperature: state.temperature,
            phase,
        });
        if !triggered && phi >= cfg.gamma0_trigger * max_value {
            triggered = true;
        }
        if max_value - phi < cfg.epsilon_conv {
            converged = true;
            break;
        }
    }
    Ok(converged)
}

fn restart_seed(base: u64, restart: usize) -> u64 {
    base.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let threads = std::env::var("QECOPT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .ok()
}

/// Run the full multi-restart optimization for an objective.
pub fn optimize(cfg: &OptimizerConfig, objective: &Objective) -> Result<OptimizationReport> {
    cfg.validate()?;
    let n_qubits = objective.n_qubits;
    let n_active = cfg.n_active.unwrap_or(n_qubits);
    // Already satisfied by the empty sequence: return it immediately.
    let empty = PulseSequence::with_active(n_qubits, n_active, vec![])?;
    let phi_empty = evaluate(objective, &empty)?;
    if objective.max_value - phi_empty < cfg.epsilon_conv {
        return Ok(OptimizationReport {
            converged: true,
            best_phi: phi_empty,
            best_sequence: empty,
            max_value: objective.max_value,
            restarts_run: 0,
            best_restart: 0,
            trace: Vec::new(),
        });
    }

    let run_one = |restart: usize| -> Result<(Scored, bool, Vec<TraceRecord>)> {
        let seed = restart_seed(cfg.seed, restart);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = init_sequence(cfg, n_qubits, &mut rng)?;
        let fixed = fixed_mask(cfg, &seq);
        let mut state = OptimizerState::new(cfg, objective.clone(), seq, fixed, seed ^ 0xA5A5)?;
        let schedule = Schedule {
            max_sweeps: cfg.max_sweeps,
            quant_start: cfg.quant_start_fraction,
            polish_start: 1.0 - cfg.polish_fraction,
        };
        let mut trace = Vec::new();
        let converged = run_schedule(&mut state, cfg, &schedule, restart, &mut trace)?;
        let mut best = state.best.clone();
        // Drop exact zero-angle leftovers; they are identities.
        best.seq
            .pulses
            .retain(|p| !(p.kind.is_angle_kind() && p.theta == 0.0));
        best.phi = evaluate(objective, &best.seq)?;
        Ok((best, converged, trace))
    };

    let outcomes: Vec<Result<(Scored, bool, Vec<TraceRecord>)>> = {
        use rayon::prelude::*;
        match thread_pool() {
            Some(pool) => {
                pool.install(|| (0..cfg.restarts).into_par_iter().map(run_one).collect())
            }
            None => (0..cfg.restarts).into_par_iter().map(run_one).collect(),
        }
    };

    let mut best: Option<(usize, Scored)> = None;
    let mut trace = Vec::new();
    for (restart, outcome) in outcomes.into_iter().enumerate() {
        let (scored, _converged, mut t) = outcome?;
        trace.append(&mut t);
        let replace = match &best {
            None => true,
            Some((_, incumbent)) => scored.better_than(incumbent),
        };
        if replace {
            best = Some((restart, scored));
        }
    }
    let (best_restart, best) =
        best.ok_or_else(|| Error::ConfigInvalid("restart count must be positive".into()))?;
    let converged = objective.max_value - best.phi < cfg.epsilon_conv;
    Ok(OptimizationReport {
        converged,
        best_phi: best.phi,
        best_sequence: best.seq,
        max_value: objective.max_value,
        restarts_run: cfg.restarts,
        best_restart,
        trace,
    })
}

/// The disturb-and-reoptimize protocol: starting from a sequence that
/// attains the maximum, repeatedly flip or zero a randomly chosen pulse and
/// let the optimizer repair the damage, escalating the number of
/// disturbances until repair fails; then pad with fresh near-identity
/// pulses and try once more. The best restored sequence (by the shortness
/// order) wins; the input is returned when nothing better is found.
pub fn disturb_and_reoptimize(
    perfect: &PulseSequence,
    objective: &Objective,
    cfg: &OptimizerConfig,
) -> Result<OptimizationReport> {
    cfg.validate()?;
    let phi_input = evaluate(objective, perfect)?;
    let gap = objective.max_value - phi_input;
    if gap >= cfg.epsilon_conv {
        return Err(Error::InputNotOptimal { gap });
    }
    let mut best = Scored {
        phi: phi_input,
        seq: perfect.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xD157);
    let mut trace: Vec<TraceRecord> = Vec::new();
    let repair_schedule = Schedule {
        max_sweeps: cfg.disturb_repair_sweeps,
        quant_start: 0.6,
        polish_start: 0.8,
    };
    let fill_schedule = Schedule {
        max_sweeps: cfg.disturb_fill_sweeps,
        quant_start: 0.6,
        polish_start: 0.8,
    };

    for round in 0..cfg.disturb_rounds {
        // Disturbances accumulate within a round: the same ones plus one
        // more after every successful repair.
        let mut disturbances: Vec<(usize, bool)> = Vec::new();
        loop {
            let base = best.seq.clone();
            let fixed: Vec<bool> = base
                .pulses
                .iter()
                .map(|p| p.kind.is_ms() || matches!(p.kind, PulseKind::SwapOut(_, _)))
                .collect();
            let free: Vec<usize> = (0..base.pulses.len())
                .filter(|&i| !fixed[i] && base.pulses[i].kind.is_angle_kind())
                .collect();
            if free.is_empty() || disturbances.len() >= free.len() {
                break;
            }
            disturbances.push((free[rng.gen_range(0..free.len())], rng.gen_bool(0.5)));
            let mut damaged = base.clone();
            for &(idx, flip) in &disturbances {
                if idx >= damaged.pulses.len() || !damaged.pulses[idx].kind.is_angle_kind() {
                    continue;
                }
                damaged.pulses[idx].theta = if flip { -damaged.pulses[idx].theta } else { 0.0 };
            }
            let state_seed = cfg.seed ^ ((round as u64) << 16) ^ disturbances.len() as u64;
            let mut state =
                OptimizerState::new(cfg, objective.clone(), damaged, fixed.clone(), state_seed)?;
            let repaired = run_schedule(&mut state, cfg, &repair_schedule, round, &mut trace)?;
            if repaired {
                if objective.max_value - state.best.phi < cfg.epsilon_conv
                    && state.best.better_than(&best)
                {
                    best = state.best.clone();
                }
                continue;
            }
            // Repair failed: fill up with fresh near-identity pulses and
            // optimize once more, then start a new round.
            pad(&mut state, cfg.disturb_fill_count)?;
            let restored = run_schedule(&mut state, cfg, &fill_schedule, round, &mut trace)?;
            if restored
                && objective.max_value - state.best.phi < cfg.epsilon_conv
                && state.best.better_than(&best)
            {
                best = state.best.clone();
            }
            break;
        }
    }

    let mut final_best = best.clone();
    final_best
        .seq
        .pulses
        .retain(|p| !(p.kind.is_angle_kind() && p.theta == 0.0));
    final_best.phi = evaluate(objective, &final_best.seq)?;
    if objective.max_value - final_best.phi >= cfg.epsilon_conv {
        final_best = best;
    }
    Ok(OptimizationReport {
        converged: true,
        best_phi: final_best.phi,
        best_sequence: final_best.seq,
        max_value: objective.max_value,
        restarts_run: cfg.disturb_rounds,
        best_restart: 0,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{builtin_code, identity_gate, logical_gate_objective, CodeName};
    use crate::objective::state_prep_objective;
    use crate::tensor::StateVector;
    use approx::assert_abs_diff_eq;

    fn prep_objective_three_zero() -> Objective {
        // |111⟩ → |000⟩ on three qubits; X(π) solves it with one pulse.
        let target = StateVector::basis(3, 0).unwrap();
        let init = StateVector::all_ones(3).unwrap();
        state_prep_objective(&target, &init).unwrap()
    }

    #[test]
    fn init_sequence_places_fixed_slots() {
        let cfg = OptimizerConfig {
            initial_length: 20,
            fixed_slots: vec![
                FixedSlotSpec {
                    kind: PulseKind::MsXX,
                    theta: std::f64::consts::FRAC_PI_4,
                },
                FixedSlotSpec {
                    kind: PulseKind::MsXX,
                    theta: std::f64::consts::FRAC_PI_4,
                },
            ],
            ..OptimizerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seq = init_sequence(&cfg, 3, &mut rng).unwrap();
        assert_eq!(seq.pulses.len(), 20);
        let ms: Vec<&Pulse> = seq.pulses.iter().filter(|p| p.kind.is_ms()).collect();
        assert_eq!(ms.len(), 2);
        for p in ms {
            assert_abs_diff_eq!(p.theta, std::f64::consts::FRAC_PI_4);
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let seq2 = init_sequence(&cfg, 3, &mut rng2).unwrap();
        assert_eq!(seq, seq2);
    }

    #[test]
    fn init_sequence_all_fixed_boundary() {
        let cfg = OptimizerConfig {
            initial_length: 2,
            fixed_slots: vec![
                FixedSlotSpec {
                    kind: PulseKind::MsXX,
                    theta: 0.3,
                },
                FixedSlotSpec {
                    kind: PulseKind::MsYY,
                    theta: 0.4,
                },
            ],
            ..OptimizerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = init_sequence(&cfg, 2, &mut rng).unwrap();
        assert_eq!(seq.pulses.len(), 2);
        assert!(seq.pulses.iter().all(|p| p.kind.is_ms()));
    }

    #[test]
    fn sweeps_are_monotone_with_zero_couplings() {
        let obj = prep_objective_three_zero();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = OptimizerConfig {
            initial_length: 10,
            ..OptimizerConfig::default()
        };
        let seq = init_sequence(&cfg, 3, &mut rng).unwrap();
        let fixed = vec![false; seq.pulses.len()];
        let mut state = OptimizerState::new(&cfg, obj, seq, fixed, 5).unwrap();
        state.gamma0 = 0.0;
        state.temperature = 0.0;
        let mut last = state.phi();
        for _ in 0..12 {
            sweep(&mut state).unwrap();
            let phi = state.phi();
            assert!(phi >= last - 1e-12, "phi {phi} < {last}");
            last = phi;
        }
    }

    #[test]
    fn sweep_on_empty_sequence_is_noop() {
        let obj = prep_objective_three_zero();
        let seq = PulseSequence::new(3, vec![]).unwrap();
        let mut state =
            OptimizerState::new(&OptimizerConfig::default(), obj, seq, vec![], 1).unwrap();
        sweep(&mut state).unwrap();
        assert_eq!(state.ctx.len(), 0);
    }

    #[test]
    fn fixed_slots_never_change() {
        let obj = prep_objective_three_zero();
        let cfg = OptimizerConfig {
            initial_length: 8,
            fixed_slots: vec![FixedSlotSpec {
                kind: PulseKind::MsXX,
                theta: std::f64::consts::FRAC_PI_4,
            }],
            ..OptimizerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seq = init_sequence(&cfg, 3, &mut rng).unwrap();
        let fixed = fixed_mask(&cfg, &seq);
        let mut state = OptimizerState::new(&cfg, obj, seq, fixed, 9).unwrap();
        state.gamma0 = 1e-3;
        for _ in 0..6 {
            sweep(&mut state).unwrap();
        }
        let ms: Vec<&Pulse> = state
            .ctx
            .pulses()
            .iter()
            .filter(|p| p.kind.is_ms())
            .collect();
        assert_eq!(ms.len(), 1);
        assert_abs_diff_eq!(ms[0].theta, std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn fixed_slot_update_is_rejected() {
        let obj = prep_objective_three_zero();
        let seq = PulseSequence::new(
            3,
            vec![Pulse::unitary(PulseKind::MsXX, 0.5).unwrap()],
        )
        .unwrap();
        let mut state =
            OptimizerState::new(&OptimizerConfig::default(), obj, seq, vec![true], 4).unwrap();
        assert!(matches!(
            displaced_update(&mut state, 0),
            Err(Error::FixedSlot(0))
        ));
    }

    #[test]
    fn negligible_pulse_is_deleted_under_pressure() {
        let obj = prep_objective_three_zero();
        let seq = PulseSequence::new(
            3,
            vec![
                Pulse::unitary(PulseKind::GlobalX, std::f64::consts::PI).unwrap(),
                Pulse::unitary(PulseKind::LocalZ(1), 1e-6).unwrap(),
            ],
        )
        .unwrap();
        let mut state = OptimizerState::new(
            &OptimizerConfig::default(),
            obj,
            seq,
            vec![false, false],
            4,
        )
        .unwrap();
        state.gamma0 = 1e-4;
        sweep(&mut state).unwrap();
        assert_eq!(state.ctx.len(), 1, "{:?}", state.ctx.pulses());
    }

    #[test]
    fn trivial_prep_converges_and_is_deterministic() {
        let obj = prep_objective_three_zero();
        let cfg = OptimizerConfig {
            initial_length: 12,
            restarts: 4,
            max_sweeps: 200,
            seed: 17,
            ..OptimizerConfig::default()
        };
        let report = optimize(&cfg, &obj).unwrap();
        assert!(report.converged, "gap {}", report.gap());
        assert!(report.best_phi > 1.0 - 1e-9);
        let report2 = optimize(&cfg, &obj).unwrap();
        assert_eq!(report.best_sequence, report2.best_sequence);
        assert_abs_diff_eq!(report.best_phi, report2.best_phi);
        // Best-so-far trace is non-decreasing per restart.
        for restart in 0..cfg.restarts {
            let mut best_seen = f64::NEG_INFINITY;
            for rec in report.trace.iter().filter(|r| r.restart == restart) {
                let tracked = rec.phi.max(best_seen);
                assert!(tracked >= best_seen - 1e-12);
                best_seen = tracked;
            }
        }
    }

    #[test]
    fn already_satisfied_objective_returns_empty() {
        let five = builtin_code(CodeName::FiveQubit);
        let obj = logical_gate_objective(&five, &identity_gate()).unwrap();
        let cfg = OptimizerConfig::default();
        let report = optimize(&cfg, &obj).unwrap();
        assert!(report.converged);
        assert_eq!(report.best_sequence.pulses.len(), 0);
    }

    #[test]
    fn pad_behaviour() {
        let make_state = || {
            let obj = prep_objective_three_zero();
            let seq = PulseSequence::new(
                3,
                vec![Pulse::unitary(PulseKind::GlobalX, std::f64::consts::PI).unwrap()],
            )
            .unwrap();
            OptimizerState::new(&OptimizerConfig::default(), obj, seq, vec![false], 21).unwrap()
        };
        let mut state = make_state();
        let before = state.phi();
        pad(&mut state, 10).unwrap();
        assert_eq!(state.ctx.len(), 11);
        assert!((state.phi() - before).abs() < 1e-2);

        let mut state = make_state();
        let before = state.phi();
        pad_with_scale(&mut state, 10, 0.0).unwrap();
        assert_abs_diff_eq!(state.phi(), before, epsilon = 1e-12);

        let mut state2 = make_state();
        pad_with_scale(&mut state2, 10, 0.0).unwrap();
        let kinds: Vec<_> = state.ctx.pulses().iter().map(|p| p.kind.clone()).collect();
        let kinds2: Vec<_> = state2.ctx.pulses().iter().map(|p| p.kind.clone()).collect();
        assert_eq!(kinds, kinds2);
    }

    #[test]
    fn disturb_requires_optimal_input() {
        let obj = prep_objective_three_zero();
        let seq = PulseSequence::new(
            3,
            vec![Pulse::unitary(PulseKind::GlobalX, 1.0).unwrap()],
        )
        .unwrap();
        let cfg = OptimizerConfig::default();
        assert!(matches!(
            disturb_and_reoptimize(&seq, &obj, &cfg),
            Err(Error::InputNotOptimal { .. })
        ));
    }

    #[test]
    fn disturb_keeps_minimal_input() {
        let obj = prep_objective_three_zero();
        let seq = PulseSequence::new(
            3,
            vec![Pulse::unitary(PulseKind::GlobalX, std::f64::consts::PI).unwrap()],
        )
        .unwrap();
        let cfg = OptimizerConfig {
            disturb_rounds: 2,
            disturb_repair_sweeps: 12,
            disturb_fill_count: 4,
            disturb_fill_sweeps: 15,
            seed: 5,
            ..OptimizerConfig::default()
        };
        let report = disturb_and_reoptimize(&seq, &obj, &cfg).unwrap();
        assert!(report.best_phi > 1.0 - 1e-9);
        assert!(report.best_sequence.unitary_count() <= 1);
    }
}
