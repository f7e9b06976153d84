//! Syndrome-extraction schedules and memory-experiment circuits.
//!
//! A circuit is a flat instruction list split into timesteps by `Tick`.
//! Each timestep holds, in order, measurements, resets, then one layer of
//! CX gates (noise channels sit next to the operation they follow or
//! precede). Measure/reset pairs at a timestep boundary therefore do not
//! cost a timestep of their own, and one syndrome cycle is exactly `2r`
//! CX layers.
//!
//! Qubit layout: data qubits `0..n`, then one ancilla per Z stabiliser,
//! then one per X stabiliser.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Basis, RadialCssCode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    ResetZ(usize),
    ResetX(usize),
    Cx(usize, usize),
    MeasureZ(usize),
    MeasureX(usize),
    Tick,
    Depolarize1(f64, usize),
    Depolarize2(f64, usize, usize),
    XError(f64, usize),
    ZError(f64, usize),
}

impl Instruction {
    pub fn is_noise(&self) -> bool {
        matches!(
            self,
            Instruction::Depolarize1(..)
                | Instruction::Depolarize2(..)
                | Instruction::XError(..)
                | Instruction::ZError(..)
        )
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Instruction::MeasureZ(_) | Instruction::MeasureX(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_data: usize,
    pub instructions: Vec<Instruction>,
    /// Each detector is the parity of these measurement indices.
    pub detectors: Vec<Vec<usize>>,
    pub observables: Vec<Vec<usize>>,
    /// `round_starts[k]..round_starts[k + 1]` are the detectors of round `k`.
    pub round_starts: Vec<usize>,
}

impl Circuit {
    pub fn n_measurements(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_measurement()).count()
    }

    pub fn n_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn n_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn rounds(&self) -> usize {
        self.round_starts.len().saturating_sub(1)
    }

    pub fn round_range(&self, round: usize) -> Range<usize> {
        self.round_starts[round]..self.round_starts[round + 1]
    }

    /// Number of timesteps (`Tick`-separated segments).
    pub fn timesteps(&self) -> usize {
        1 + self
            .instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Tick))
            .count()
    }

    /// Instructions grouped by timestep.
    pub fn moments(&self) -> impl Iterator<Item = &[Instruction]> {
        self.instructions.split(|i| matches!(i, Instruction::Tick))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {} {}\n", self.n_qubits, self.n_data);
        for ins in &self.instructions {
            let _ = match *ins {
                Instruction::ResetZ(q) => writeln!(out, "R {q}"),
                Instruction::ResetX(q) => writeln!(out, "RX {q}"),
                Instruction::Cx(c, t) => writeln!(out, "CX {c} {t}"),
                Instruction::MeasureZ(q) => writeln!(out, "M {q}"),
                Instruction::MeasureX(q) => writeln!(out, "MX {q}"),
                Instruction::Tick => writeln!(out, "TICK"),
                Instruction::Depolarize1(p, q) => writeln!(out, "DEPOLARIZE1({p}) {q}"),
                Instruction::Depolarize2(p, a, b) => writeln!(out, "DEPOLARIZE2({p}) {a} {b}"),
                Instruction::XError(p, q) => writeln!(out, "X_ERROR({p}) {q}"),
                Instruction::ZError(p, q) => writeln!(out, "Z_ERROR({p}) {q}"),
            };
        }
        for round in 0..self.rounds() {
            out.push_str("ROUND\n");
            for d in self.round_range(round) {
                out.push_str("DETECTOR");
                for m in &self.detectors[d] {
                    let _ = write!(out, " {m}");
                }
                out.push('\n');
            }
        }
        for (k, obs) in self.observables.iter().enumerate() {
            let _ = write!(out, "OBSERVABLE {k}");
            for m in obs {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Circuit {
            n_qubits: 0,
            n_data: 0,
            instructions: Vec::new(),
            detectors: Vec::new(),
            observables: Vec::new(),
            round_starts: Vec::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse(format!("line {}: {msg}: {raw:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let args: Vec<usize> = parts
                .map(|t| t.parse::<usize>().map_err(|_| err("bad integer")))
                .collect::<Result<_>>()?;
            let (name, prob) = match head.find('(') {
                Some(i) => {
                    let p = head[i + 1..]
                        .strip_suffix(')')
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| err("bad probability"))?;
                    (&head[..i], Some(p))
                }
                None => (head, None),
            };
            let one = |args: &[usize]| -> Result<usize> {
                match args {
                    [q] => Ok(*q),
                    _ => Err(err("expected one qubit")),
                }
            };
            let p = || prob.ok_or_else(|| err("missing probability"));
            match name {
                "QUBITS" => match args[..] {
                    [n, d] => (c.n_qubits, c.n_data) = (n, d),
                    _ => return Err(err("expected `QUBITS total data`")),
                },
                "R" => c.instructions.push(Instruction::ResetZ(one(&args)?)),
                "RX" => c.instructions.push(Instruction::ResetX(one(&args)?)),
                "M" => c.instructions.push(Instruction::MeasureZ(one(&args)?)),
                "MX" => c.instructions.push(Instruction::MeasureX(one(&args)?)),
                "TICK" => c.instructions.push(Instruction::Tick),
                "CX" => match args[..] {
                    [a, b] => c.instructions.push(Instruction::Cx(a, b)),
                    _ => return Err(err("expected two qubits")),
                },
                "DEPOLARIZE1" => c.instructions.push(Instruction::Depolarize1(p()?, one(&args)?)),
                "DEPOLARIZE2" => match args[..] {
                    [a, b] => c.instructions.push(Instruction::Depolarize2(p()?, a, b)),
                    _ => return Err(err("expected two qubits")),
                },
                "X_ERROR" => c.instructions.push(Instruction::XError(p()?, one(&args)?)),
                "Z_ERROR" => c.instructions.push(Instruction::ZError(p()?, one(&args)?)),
                "ROUND" => c.round_starts.push(c.detectors.len()),
                "DETECTOR" => {
                    if c.round_starts.is_empty() {
                        c.round_starts.push(0);
                    }
                    c.detectors.push(args);
                }
                "OBSERVABLE" => match args.split_first() {
                    Some((&k, rest)) if k == c.observables.len() => c.observables.push(rest.to_vec()),
                    _ => return Err(err("observables must be numbered in order")),
                },
                _ => return Err(err("unknown instruction")),
            }
        }
        c.round_starts.push(c.detectors.len());
        check_references(&c)?;
        Ok(c)
    }
}

fn check_references(c: &Circuit) -> Result<()> {
    let n_meas = c.n_measurements();
    for ins in &c.instructions {
        let qubits = match *ins {
            Instruction::ResetZ(q)
            | Instruction::ResetX(q)
            | Instruction::MeasureZ(q)
            | Instruction::MeasureX(q)
            | Instruction::Depolarize1(_, q)
            | Instruction::XError(_, q)
            | Instruction::ZError(_, q) => vec![q],
            Instruction::Cx(a, b) | Instruction::Depolarize2(_, a, b) => {
                if a == b {
                    return Err(Error::InvalidCircuit(format!("two-qubit op on {a} twice")));
                }
                vec![a, b]
            }
            Instruction::Tick => vec![],
        };
        if let Some(&q) = qubits.iter().find(|&&q| q >= c.n_qubits) {
            return Err(Error::InvalidCircuit(format!("qubit {q} out of range")));
        }
    }
    for m in c.detectors.iter().chain(&c.observables).flatten() {
        if *m >= n_meas {
            return Err(Error::InvalidCircuit(format!("measurement {m} does not exist")));
        }
    }
    if c.round_starts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidCircuit("round boundaries out of order".into()));
    }
    Ok(())
}

/// Per-ancilla CX schedule: `(offset, data qubit)` pairs where the offset
/// counts CX layers from the start of the ancilla's syndrome cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleAssignment {
    pub r: usize,
    /// Indexed by Z-stabiliser row; offsets `0..2r`.
    pub z_ancillas: Vec<Vec<(usize, usize)>>,
    /// Indexed by X-stabiliser row; offsets `r..3r`.
    pub x_ancillas: Vec<Vec<(usize, usize)>>,
}

impl ScheduleAssignment {
    pub fn period(&self) -> usize {
        2 * self.r
    }
}

/// Builds the interleaved schedule.
///
/// A Z ancilla for Z code `z`, ring `u` spends its first `r` layers on its
/// own code (ring `(u + t) mod r` at step `t`), then `r` layers on the ring-`u`
/// qubit of X code `(z + t) mod r`. An X ancilla for X code `x`, ring `u` starts
/// half a cycle later and visits the Z codes first, then its own code.
pub fn schedule(code: &RadialCssCode) -> ScheduleAssignment {
    let r = code.r();
    let m = code.stabilisers_per_sector();
    let mut z_ancillas = Vec::with_capacity(m);
    let mut x_ancillas = Vec::with_capacity(m);
    for row in 0..m {
        let coord = code.stabiliser_coordinate(Basis::Z, row);
        let sup = code.stabiliser_support(Basis::Z, row);
        let mut steps = Vec::with_capacity(2 * r);
        for t in 0..r {
            steps.push((t, sup.own[(coord.u + t) % r]));
        }
        for t in r..2 * r {
            steps.push((t, sup.cross[(coord.c + t) % r]));
        }
        z_ancillas.push(steps);

        let coord = code.stabiliser_coordinate(Basis::X, row);
        let sup = code.stabiliser_support(Basis::X, row);
        let mut steps = Vec::with_capacity(2 * r);
        for t in r..2 * r {
            steps.push((t, sup.cross[(coord.c + t) % r]));
        }
        for t in 2 * r..3 * r {
            steps.push((t, sup.own[(coord.u + t) % r]));
        }
        x_ancillas.push(steps);
    }
    ScheduleAssignment {
        r,
        z_ancillas,
        x_ancillas,
    }
}

/// One steady-state period of `2r` timesteps: Z ancillas of the current
/// cycle overlap X ancillas of the previous one for the first `r` layers.
/// The fragment carries no detectors.
pub fn syndrome_cycle(code: &RadialCssCode) -> Result<(Circuit, ScheduleAssignment)> {
    let sched = schedule(code);
    let (n, m, r) = (code.n(), code.stabilisers_per_sector(), code.r());
    let za = |i: usize| n + i;
    let xa = |i: usize| n + m + i;
    let mut ins = Vec::new();
    for step in 0..2 * r {
        if step > 0 {
            ins.push(Instruction::Tick);
        }
        if step == 0 {
            ins.extend((0..m).map(|i| Instruction::MeasureZ(za(i))));
            ins.extend((0..m).map(|i| Instruction::ResetZ(za(i))));
        }
        if step == r {
            ins.extend((0..m).map(|i| Instruction::MeasureX(xa(i))));
            ins.extend((0..m).map(|i| Instruction::ResetX(xa(i))));
        }
        for (i, steps) in sched.z_ancillas.iter().enumerate() {
            ins.push(Instruction::Cx(steps[step].1, za(i)));
        }
        // X ancillas sit at offset step + 2r (previous cycle) or step
        for (i, steps) in sched.x_ancillas.iter().enumerate() {
            let offset = if step < r { step + 2 * r } else { step };
            ins.push(Instruction::Cx(xa(i), steps[offset - r].1));
        }
    }
    let circuit = Circuit {
        n_qubits: n + 2 * m,
        n_data: n,
        instructions: ins,
        detectors: Vec::new(),
        observables: Vec::new(),
        round_starts: vec![0],
    };
    validate_circuit(&circuit)?;
    Ok((circuit, sched))
}

/// Memory experiment: prepare data in `basis`, run `cycles` syndrome cycles,
/// measure data in `basis`.
///
/// Round `k` holds the detectors comparing cycle `k` with cycle `k - 1`
/// (Z sector, then X sector). Stabilisers of the preparation basis are
/// deterministic from cycle 0; those of the other basis only from the
/// second comparison on. The data-measurement comparisons join the last
/// round. Observables are the logicals of `basis`.
pub fn memory_experiment(code: &RadialCssCode, basis: Basis, cycles: usize) -> Result<Circuit> {
    if cycles == 0 {
        return Err(Error::InvalidInput("cycles must be at least 1".into()));
    }
    let sched = schedule(code);
    let (n, m, r) = (code.n(), code.stabilisers_per_sector(), code.r());
    let za = |i: usize| n + i;
    let xa = |i: usize| n + m + i;
    let total_layers = 2 * r * cycles + r;

    let mut ins = Vec::new();
    let mut n_meas = 0usize;
    // measurement index per (cycle, stabiliser)
    let mut z_meas = vec![vec![0usize; m]; cycles];
    let mut x_meas = vec![vec![0usize; m]; cycles];
    for step in 0..=total_layers {
        if step > 0 {
            ins.push(Instruction::Tick);
        }
        if step == 0 {
            ins.extend((0..n).map(|q| match basis {
                Basis::Z => Instruction::ResetZ(q),
                Basis::X => Instruction::ResetX(q),
            }));
        }
        // boundary: measurements first, then resets
        if step % (2 * r) == 0 && step > 0 && step / (2 * r) <= cycles {
            let k = step / (2 * r) - 1;
            for (i, slot) in z_meas[k].iter_mut().enumerate() {
                ins.push(Instruction::MeasureZ(za(i)));
                *slot = n_meas;
                n_meas += 1;
            }
        }
        if step >= 3 * r && (step - 3 * r) % (2 * r) == 0 {
            let k = (step - 3 * r) / (2 * r);
            for (i, slot) in x_meas[k].iter_mut().enumerate() {
                ins.push(Instruction::MeasureX(xa(i)));
                *slot = n_meas;
                n_meas += 1;
            }
        }
        if step == total_layers {
            break;
        }
        if step % (2 * r) == 0 && step / (2 * r) < cycles {
            ins.extend((0..m).map(|i| Instruction::ResetZ(za(i))));
        }
        if step >= r && (step - r) % (2 * r) == 0 && (step - r) / (2 * r) < cycles {
            ins.extend((0..m).map(|i| Instruction::ResetX(xa(i))));
        }
        // CX layer
        let zk = step / (2 * r);
        if zk < cycles {
            let t = step % (2 * r);
            for (i, steps) in sched.z_ancillas.iter().enumerate() {
                ins.push(Instruction::Cx(steps[t].1, za(i)));
            }
        }
        if step >= r {
            let xk = (step - r) / (2 * r);
            if xk < cycles {
                let t = (step - r) % (2 * r);
                for (i, steps) in sched.x_ancillas.iter().enumerate() {
                    ins.push(Instruction::Cx(xa(i), steps[t].1));
                }
            }
        }
    }
    // final transversal data measurement
    let data_meas: Vec<usize> = (0..n).map(|q| n_meas + q).collect();
    ins.extend((0..n).map(|q| match basis {
        Basis::Z => Instruction::MeasureZ(q),
        Basis::X => Instruction::MeasureX(q),
    }));

    let mut detectors = Vec::new();
    let mut round_starts = Vec::with_capacity(cycles + 1);
    for k in 0..cycles {
        round_starts.push(detectors.len());
        for (sector, meas) in [(Basis::Z, &z_meas), (Basis::X, &x_meas)] {
            if k == 0 {
                if sector == basis {
                    detectors.extend(meas[0].iter().map(|&a| vec![a]));
                }
            } else {
                detectors.extend(meas[k].iter().zip(&meas[k - 1]).map(|(&a, &b)| vec![b, a]));
            }
        }
        if k == cycles - 1 {
            let (last, h) = match basis {
                Basis::Z => (&z_meas[k], code.hz()),
                Basis::X => (&x_meas[k], code.hx()),
            };
            for (i, &a) in last.iter().enumerate() {
                let mut det = vec![a];
                det.extend(h.row_support(i).into_iter().map(|q| data_meas[q]));
                detectors.push(det);
            }
        }
    }
    round_starts.push(detectors.len());
    let observables = code
        .logicals(basis)
        .iter()
        .map(|l| l.iter_ones().map(|q| data_meas[q]).collect())
        .collect();

    let circuit = Circuit {
        n_qubits: n + 2 * m,
        n_data: n,
        instructions: ins,
        detectors,
        observables,
        round_starts,
    };
    validate_circuit(&circuit)?;
    Ok(circuit)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub timesteps: usize,
    pub cx_layers: usize,
    pub cx_gates: usize,
    /// Timesteps in which a live ancilla takes part in no gate.
    pub ancilla_idle_steps: usize,
}

/// Checks that every qubit is used by at most one measurement, one reset
/// and one CX per timestep, in that order, and counts idle ancilla steps.
pub fn validate_circuit(c: &Circuit) -> Result<CircuitStats> {
    #[derive(Clone, Copy, PartialEq, PartialOrd)]
    enum Stage {
        None,
        Measured,
        Reset,
        Gated,
    }
    let mut stats = CircuitStats::default();
    let mut live = vec![false; c.n_qubits];
    for (t, moment) in c.moments().enumerate() {
        stats.timesteps += 1;
        let mut stage = vec![Stage::None; c.n_qubits];
        let mut gated = vec![false; c.n_qubits];
        let mut had_cx = false;
        for ins in moment {
            let (qubits, next): (Vec<usize>, Stage) = match *ins {
                Instruction::MeasureZ(q) | Instruction::MeasureX(q) => (vec![q], Stage::Measured),
                Instruction::ResetZ(q) | Instruction::ResetX(q) => (vec![q], Stage::Reset),
                Instruction::Cx(a, b) => (vec![a, b], Stage::Gated),
                _ => continue,
            };
            for q in qubits {
                if q >= c.n_qubits {
                    return Err(Error::InvalidCircuit(format!("qubit {q} out of range")));
                }
                if stage[q] >= next {
                    return Err(Error::Collision { timestep: t, qubit: q });
                }
                stage[q] = next;
                match next {
                    Stage::Measured => live[q] = false,
                    Stage::Reset => live[q] = true,
                    Stage::Gated => {
                        gated[q] = true;
                        had_cx = true;
                    }
                    Stage::None => {}
                }
            }
        }
        if had_cx {
            stats.cx_layers += 1;
        }
        stats.cx_gates += gated.iter().filter(|&&g| g).count() / 2;
        stats.ancilla_idle_steps += (c.n_data..c.n_qubits)
            .filter(|&q| live[q] && !gated[q])
            .count();
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::preset;

    #[test]
    fn schedule_covers_stabiliser_supports() {
        let code = preset("qr_90_8_10").unwrap();
        let sched = schedule(&code);
        for (basis, lists) in [(Basis::Z, &sched.z_ancillas), (Basis::X, &sched.x_ancillas)] {
            for (row, steps) in lists.iter().enumerate() {
                assert_eq!(steps.len(), 2 * code.r());
                let mut qs: Vec<usize> = steps.iter().map(|s| s.1).collect();
                qs.sort_unstable();
                assert_eq!(qs, code.stabilisers(basis).row_support(row));
            }
        }
    }

    #[test]
    fn toy_fragment_matches_two_stabiliser_example() {
        let code = preset("toy_2_3").unwrap();
        let sched = schedule(&code);
        // ring-0 spoke-0 Z stabiliser: own code first, then the X codes
        let z: Vec<usize> = sched.z_ancillas[0].iter().map(|s| s.1).collect();
        assert_eq!(z, vec![0, 5, 12, 20]);
        let x: Vec<(usize, usize)> = sched.x_ancillas[0].clone();
        assert_eq!(x.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert_eq!(x.iter().map(|s| s.1).collect::<Vec<_>>(), vec![0, 6, 12, 15]);
    }

    #[test]
    fn steady_state_period_is_two_r() {
        for name in ["toy_2_3", "qr_90_8_10"] {
            let code = preset(name).unwrap();
            let (frag, _) = syndrome_cycle(&code).unwrap();
            let stats = validate_circuit(&frag).unwrap();
            assert_eq!(stats.timesteps, 2 * code.r());
            assert_eq!(stats.cx_gates, 2 * code.stabilisers_per_sector() * 2 * code.r());
            assert_eq!(stats.ancilla_idle_steps, 0);
        }
    }

    #[test]
    fn one_cycle_toy_counts() {
        let code = preset("toy_2_3").unwrap();
        let c = memory_experiment(&code, Basis::Z, 1).unwrap();
        // r^2 s = 12 Z stabilisers, each with a first-round and a final detector
        assert_eq!(c.n_detectors(), 24);
        assert_eq!(c.n_observables(), 2);
        assert_eq!(c.rounds(), 1);
    }

    #[test]
    fn collisions_are_reported() {
        let c = Circuit {
            n_qubits: 3,
            n_data: 3,
            instructions: vec![Instruction::Cx(0, 1), Instruction::Cx(1, 2)],
            detectors: vec![],
            observables: vec![],
            round_starts: vec![0, 0],
        };
        assert!(matches!(
            validate_circuit(&c),
            Err(Error::Collision { timestep: 0, qubit: 1 })
        ));
    }

    #[test]
    fn text_round_trip() {
        let code = preset("toy_2_3").unwrap();
        let c = memory_experiment(&code, Basis::X, 3).unwrap();
        assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
    }
}
