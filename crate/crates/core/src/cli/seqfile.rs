//! The pulse-sequence file format.
//!
//! One pulse per line, `#` starts a comment, and the header line gives the
//! register size:
//!
//! ```text
//! qubits 4
//! Y -1/2 pi
//! z 4 -1/2 pi
//! X2 1/4 pi
//! MSY2 1,3,5,7 1/2 pi
//! M 4
//! R 4
//! ```
//!
//! Angles are exact rationals `[-]m/n pi` (also accepted: `pi`, `-pi`,
//! `m pi`) or decimal radian literals. Serialization emits `m/n pi`
//! whenever the stored angle is within 1e-12 of such a value with n ≤ 64,
//! else a decimal with 17 significant digits, so grid-quantized fixtures
//! stay diff-stable.

use crate::error::{Error, Result};
use crate::gateset::{Pulse, PulseKind, PulseSequence};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        msg: msg.into(),
    }
}

fn parse_angle(tokens: &[&str], line: usize) -> Result<f64> {
    match tokens {
        [] => Err(parse_err(line, "missing angle")),
        [one] => {
            if let Some(rest) = one.strip_suffix("pi") {
                // "pi", "-pi" or glued forms like "3/4pi".
                let rest = rest.trim();
                if rest.is_empty() {
                    return Ok(std::f64::consts::PI);
                }
                if rest == "-" {
                    return Ok(-std::f64::consts::PI);
                }
                parse_rational(rest, line).map(|r| r * std::f64::consts::PI)
            } else {
                one.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad angle `{one}`")))
            }
        }
        [frac, "pi"] => parse_rational(frac, line).map(|r| r * std::f64::consts::PI),
        other => Err(parse_err(line, format!("bad angle `{}`", other.join(" ")))),
    }
}

fn parse_rational(s: &str, line: usize) -> Result<f64> {
    if let Some((num, den)) = s.split_once('/') {
        let m: i64 = num
            .parse()
            .map_err(|_| parse_err(line, format!("bad numerator `{num}`")))?;
        let n: i64 = den
            .parse()
            .map_err(|_| parse_err(line, format!("bad denominator `{den}`")))?;
        if n == 0 {
            return Err(parse_err(line, "zero denominator"));
        }
        Ok(m as f64 / n as f64)
    } else {
        s.parse::<i64>()
            .map(|m| m as f64)
            .map_err(|_| parse_err(line, format!("bad rational `{s}`")))
    }
}

fn parse_qubit(token: &str, line: usize, n_qubits: usize) -> Result<usize> {
    let q: usize = token
        .parse()
        .map_err(|_| parse_err(line, format!("bad qubit index `{token}`")))?;
    if q == 0 || q > n_qubits {
        return Err(parse_err(
            line,
            format!("qubit {q} outside register 1..={n_qubits}"),
        ));
    }
    Ok(q)
}

/// Parse a sequence file.
pub fn parse_sequence(text: &str) -> Result<PulseSequence> {
    let mut n_qubits: Option<usize> = None;
    let mut n_active: Option<usize> = None;
    let mut pulses: Vec<Pulse> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let n = match n_qubits {
            None => {
                if tokens.len() == 2 && tokens[0] == "qubits" {
                    let q: usize = tokens[1]
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad qubit count"))?;
                    n_qubits = Some(q);
                    continue;
                }
                return Err(parse_err(line_no, "expected header `qubits <N>`"));
            }
            Some(n) => n,
        };
        if tokens[0] == "active" && tokens.len() == 2 {
            if !pulses.is_empty() {
                return Err(parse_err(line_no, "`active` must precede pulses"));
            }
            n_active = Some(
                tokens[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad active count"))?,
            );
            continue;
        }
        let pulse = match tokens[0] {
            "X" => Pulse::unitary(PulseKind::GlobalX, parse_angle(&tokens[1..], line_no)?),
            "Y" => Pulse::unitary(PulseKind::GlobalY, parse_angle(&tokens[1..], line_no)?),
            "X2" => Pulse::unitary(PulseKind::MsXX, parse_angle(&tokens[1..], line_no)?),
            "Y2" => Pulse::unitary(PulseKind::MsYY, parse_angle(&tokens[1..], line_no)?),
            "z" => {
                if tokens.len() < 3 {
                    return Err(parse_err(line_no, "z needs `z <qubit> <angle>`"));
                }
                let q = parse_qubit(tokens[1], line_no, n)?;
                Pulse::unitary(PulseKind::LocalZ(q), parse_angle(&tokens[2..], line_no)?)
            }
            "MSY2" => {
                if tokens.len() < 3 {
                    return Err(parse_err(line_no, "MSY2 needs `MSY2 <q1,q2,..> <angle>`"));
                }
                let subset: Vec<usize> = tokens[1]
                    .split(',')
                    .map(|t| parse_qubit(t, line_no, n))
                    .collect::<Result<_>>()?;
                Pulse::unitary(
                    PulseKind::SubsetMsYY(subset),
                    parse_angle(&tokens[2..], line_no)?,
                )
            }
            "M" => {
                if tokens.len() != 2 {
                    return Err(parse_err(line_no, "M needs `M <qubit>`"));
                }
                Ok(Pulse::measure(parse_qubit(tokens[1], line_no, n)?))
            }
            "R" => {
                if tokens.len() != 2 {
                    return Err(parse_err(line_no, "R needs `R <qubit>`"));
                }
                Ok(Pulse::reset(parse_qubit(tokens[1], line_no, n)?))
            }
            other => Err(parse_err(line_no, format!("unknown operation `{other}`"))),
        }
        .map_err(|e| match e {
            Error::ParseError { .. } => e,
            other => parse_err(line_no, other.to_string()),
        })?;
        pulses.push(pulse);
    }
    let n = n_qubits.ok_or_else(|| parse_err(0, "empty file: missing `qubits <N>` header"))?;
    let seq = match n_active {
        Some(a) => PulseSequence::with_active(n, a, pulses),
        None => PulseSequence::new(n, pulses),
    };
    seq.map_err(|e| parse_err(0, e.to_string()))
}

/// Render an angle as `m/n pi` when it is within 1e-12 of a rational
/// multiple of π with denominator ≤ 64, else as a decimal literal.
pub fn format_angle(theta: f64) -> String {
    let ratio = theta / std::f64::consts::PI;
    for den in 1..=64i64 {
        let num = (ratio * den as f64).round();
        if num.abs() > 1e6 {
            continue;
        }
        if (theta - num / den as f64 * std::f64::consts::PI).abs() < 1e-12 {
            let (mut m, mut n) = (num as i64, den);
            let g = gcd(m.unsigned_abs(), n.unsigned_abs()).max(1);
            m /= g as i64;
            n /= g as i64;
            return format!("{m}/{n} pi");
        }
    }
    format!("{theta:.17e}")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Serialize a sequence to the file format. Swap slots have no file
/// representation; convert to measured form first.
pub fn serialize_sequence(seq: &PulseSequence) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("qubits {}\n", seq.n_qubits));
    if seq.n_active != seq.n_qubits {
        out.push_str(&format!("active {}\n", seq.n_active));
    }
    for p in &seq.pulses {
        let line = match &p.kind {
            PulseKind::GlobalX => format!("X {}", format_angle(p.theta)),
            PulseKind::GlobalY => format!("Y {}", format_angle(p.theta)),
            PulseKind::MsXX => format!("X2 {}", format_angle(p.theta)),
            PulseKind::MsYY => format!("Y2 {}", format_angle(p.theta)),
            PulseKind::LocalZ(j) => format!("z {j} {}", format_angle(p.theta)),
            PulseKind::SubsetMsYY(subset) => {
                let list: Vec<String> = subset.iter().map(|q| q.to_string()).collect();
                format!("MSY2 {} {}", list.join(","), format_angle(p.theta))
            }
            PulseKind::Measure(j) => format!("M {j}"),
            PulseKind::Reset(j) => format!("R {j}"),
            PulseKind::SwapOut(_, _) => {
                return Err(Error::ContractMismatch(
                    "swap slots are not serializable; convert to measured form first".into(),
                ))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
