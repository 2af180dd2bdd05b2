//! Scratch experiment: rediscovery of the three-qubit bit-flip syndrome
//! sequence through the swap-trick objective.

use qecopt::codes::{builtin_code, syndrome_objective, CodeName};
use qecopt::gateset::PulseKind;
use qecopt::optimizer::{optimize, FixedSlotSpec, OptimizerConfig};

fn main() {
    let code = builtin_code(CodeName::ThreeBitFlip)
        .with_aux_qubits(2)
        .unwrap();
    let obj = syndrome_objective(&code, &[3, 1, 2, 0]).unwrap();
    let ms = FixedSlotSpec {
        kind: PulseKind::MsXX,
        theta: std::f64::consts::FRAC_PI_4,
    };
    let args: Vec<String> = std::env::args().collect();
    let restarts: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let sweeps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(300);
    let t0: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(28);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = OptimizerConfig {
        initial_length: t0,
        fixed_slots: vec![
            ms.clone(),
            ms.clone(),
            FixedSlotSpec {
                kind: PulseKind::SwapOut(4, 5),
                theta: 0.0,
            },
            ms.clone(),
            ms,
        ],
        n_active: Some(4),
        restarts,
        max_sweeps: sweeps,
        seed,
        epsilon_conv: 1e-9,
        ..OptimizerConfig::default()
    };
    let started = std::time::Instant::now();
    let report = optimize(&cfg, &obj).unwrap();
    println!(
        "converged={} best_phi={:.12} of {} pulses={} restart={} elapsed={:?}",
        report.converged,
        report.best_phi,
        report.max_value,
        report.best_sequence.unitary_count(),
        report.best_restart,
        started.elapsed()
    );
    // How many restarts individually reached the maximum?
    let mut per_restart_best = vec![f64::NEG_INFINITY; cfg.restarts];
    for rec in &report.trace {
        if rec.phi > per_restart_best[rec.restart] {
            per_restart_best[rec.restart] = rec.phi;
        }
    }
    let hits = per_restart_best
        .iter()
        .filter(|&&phi| phi > 4.0 - 1e-6)
        .count();
    println!("restarts reaching 4-1e-6: {hits}/{}", cfg.restarts);
    for p in &report.best_sequence.pulses {
        println!("  {} {:.6}", p.kind, p.theta);
    }
}
