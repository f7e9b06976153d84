//! Circuit-level noise, Pauli-frame sampling and detector error models.
//!
//! The sampler tracks X and Z Pauli frames for 64 shots at once (one bit
//! lane per shot). The detector error model is built separately by
//! propagating detector sensitivities backwards through the circuit, so the
//! two can be checked against each other fault by fault.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::gf2::{xor_words, BinaryVector};
use crate::seeds;

/// Independent error rates of the four noise locations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Single-qubit depolarising noise on live qubits outside any CX.
    pub p_idle: f64,
    /// Two-qubit depolarising noise after each CX.
    pub p_cx: f64,
    /// Flip after each reset.
    pub p_reset: f64,
    /// Flip before each measurement.
    pub p_meas: f64,
}

impl NoiseModel {
    pub fn uniform(p: f64) -> Self {
        Self {
            p_idle: p,
            p_cx: p,
            p_reset: p,
            p_meas: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_idle", self.p_idle),
            ("p_cx", self.p_cx),
            ("p_reset", self.p_reset),
            ("p_meas", self.p_meas),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("{name} = {p} is outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Inserts noise channels. Zero-probability channels are omitted, so a
/// noiseless model returns the circuit unchanged.
pub fn apply_noise(circuit: &Circuit, model: &NoiseModel) -> Result<Circuit> {
    model.validate()?;
    let mut out = Vec::with_capacity(circuit.instructions.len() * 2);
    let mut live = vec![false; circuit.n_qubits];
    let mut first = true;
    for moment in circuit.moments() {
        if !first {
            out.push(Instruction::Tick);
        }
        first = false;
        let mut gated = vec![false; circuit.n_qubits];
        for &ins in moment {
            match ins {
                Instruction::MeasureZ(q) | Instruction::MeasureX(q) => {
                    if model.p_meas > 0.0 {
                        out.push(if matches!(ins, Instruction::MeasureZ(_)) {
                            Instruction::XError(model.p_meas, q)
                        } else {
                            Instruction::ZError(model.p_meas, q)
                        });
                    }
                    out.push(ins);
                    live[q] = false;
                }
                Instruction::ResetZ(q) | Instruction::ResetX(q) => {
                    out.push(ins);
                    if model.p_reset > 0.0 {
                        out.push(if matches!(ins, Instruction::ResetZ(_)) {
                            Instruction::XError(model.p_reset, q)
                        } else {
                            Instruction::ZError(model.p_reset, q)
                        });
                    }
                    live[q] = true;
                }
                Instruction::Cx(c, t) => {
                    out.push(ins);
                    if model.p_cx > 0.0 {
                        out.push(Instruction::Depolarize2(model.p_cx, c, t));
                    }
                    gated[c] = true;
                    gated[t] = true;
                }
                other => out.push(other),
            }
        }
        if model.p_idle > 0.0 {
            for q in 0..circuit.n_qubits {
                if live[q] && !gated[q] {
                    out.push(Instruction::Depolarize1(model.p_idle, q));
                }
            }
        }
    }
    Ok(Circuit {
        instructions: out,
        ..circuit.clone()
    })
}

#[derive(Clone, Copy, Debug)]
enum Op {
    ResetZ(usize),
    ResetX(usize),
    Cx(usize, usize),
    MeasZ(usize),
    MeasX(usize),
    Dep1(f64, usize),
    Dep2(f64, usize, usize),
    XErr(f64, usize),
    ZErr(f64, usize),
}

impl Op {
    fn is_noise(&self) -> bool {
        matches!(self, Op::Dep1(..) | Op::Dep2(..) | Op::XErr(..) | Op::ZErr(..))
    }

    /// Number of distinct non-identity outcomes of a noise channel.
    fn outcomes(&self) -> usize {
        match self {
            Op::Dep1(..) => 3,
            Op::Dep2(..) => 15,
            Op::XErr(..) | Op::ZErr(..) => 1,
            _ => 0,
        }
    }
}

/// A circuit lowered for simulation.
#[derive(Clone, Debug)]
pub struct Program {
    n_qubits: usize,
    n_meas: usize,
    ops: Vec<Op>,
    detectors: Vec<Vec<usize>>,
    observables: Vec<Vec<usize>>,
}

/// Where a noise channel fires and with which Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaultLocation {
    /// Index among the circuit's noise channels, in program order.
    pub channel: usize,
    /// `1..=3` for single-qubit channels (bit 0 = X, bit 1 = Z), `1..=15`
    /// for two-qubit channels (low two bits on the first qubit), `1` for
    /// flip channels.
    pub outcome: usize,
}

enum Mode<'a> {
    Random,
    Forced(&'a FaultLocation),
}

impl Program {
    pub fn new(circuit: &Circuit) -> Result<Self> {
        let ops = circuit
            .instructions
            .iter()
            .filter_map(|ins| match *ins {
                Instruction::ResetZ(q) => Some(Op::ResetZ(q)),
                Instruction::ResetX(q) => Some(Op::ResetX(q)),
                Instruction::Cx(c, t) => Some(Op::Cx(c, t)),
                Instruction::MeasureZ(q) => Some(Op::MeasZ(q)),
                Instruction::MeasureX(q) => Some(Op::MeasX(q)),
                Instruction::Depolarize1(p, q) => Some(Op::Dep1(p, q)),
                Instruction::Depolarize2(p, a, b) => Some(Op::Dep2(p, a, b)),
                Instruction::XError(p, q) => Some(Op::XErr(p, q)),
                Instruction::ZError(p, q) => Some(Op::ZErr(p, q)),
                Instruction::Tick => None,
            })
            .collect();
        let n_meas = circuit.n_measurements();
        if let Some(m) = circuit
            .detectors
            .iter()
            .chain(&circuit.observables)
            .flatten()
            .find(|&&m| m >= n_meas)
        {
            return Err(Error::InvalidCircuit(format!("measurement {m} does not exist")));
        }
        Ok(Self {
            n_qubits: circuit.n_qubits,
            n_meas,
            ops,
            detectors: circuit.detectors.clone(),
            observables: circuit.observables.clone(),
        })
    }

    pub fn n_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn n_observables(&self) -> usize {
        self.observables.len()
    }

    /// Every elementary fault of every noise channel.
    pub fn fault_locations(&self) -> Vec<FaultLocation> {
        self.ops
            .iter()
            .filter(|op| op.is_noise())
            .enumerate()
            .flat_map(|(channel, op)| {
                (1..=op.outcomes()).map(move |outcome| FaultLocation { channel, outcome })
            })
            .collect()
    }

    /// Simulates 64 shots; returns one lane word per detector and per
    /// observable.
    fn run(&self, rng: &mut ChaCha8Rng, mode: Mode<'_>) -> (Vec<u64>, Vec<u64>) {
        let n = self.n_qubits;
        let mut x = vec![0u64; n];
        let mut z = vec![0u64; n];
        let mut record = Vec::with_capacity(self.n_meas);
        let mut channel = 0usize;
        for op in &self.ops {
            match *op {
                // random gauge: the frame component that the operation
                // leaves undetermined is randomised
                Op::ResetZ(q) => {
                    x[q] = 0;
                    z[q] = rng.gen();
                }
                Op::ResetX(q) => {
                    z[q] = 0;
                    x[q] = rng.gen();
                }
                Op::MeasZ(q) => {
                    record.push(x[q]);
                    z[q] = rng.gen();
                }
                Op::MeasX(q) => {
                    record.push(z[q]);
                    x[q] = rng.gen();
                }
                Op::Cx(c, t) => {
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                }
                noise => {
                    match mode {
                        Mode::Random => apply_random(noise, &mut x, &mut z, rng),
                        Mode::Forced(f) if f.channel == channel => {
                            apply_outcome(noise, f.outcome, !0, &mut x, &mut z)
                        }
                        Mode::Forced(_) => {}
                    }
                    channel += 1;
                }
            }
        }
        let parity = |sets: &[Vec<usize>]| -> Vec<u64> {
            sets.iter()
                .map(|ms| ms.iter().fold(0u64, |acc, &m| acc ^ record[m]))
                .collect()
        };
        (parity(&self.detectors), parity(&self.observables))
    }
}

/// Lane mask with each bit set independently with probability `p`, by
/// geometric skipping.
fn bernoulli_mask(p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return !0;
    }
    let log_q = (1.0 - p).ln();
    let mut mask = 0u64;
    let mut i = 0usize;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (64 - i) as f64 {
            return mask;
        }
        i += gap as usize;
        mask |= 1 << i;
        i += 1;
        if i >= 64 {
            return mask;
        }
    }
}

fn apply_outcome(op: Op, outcome: usize, lanes: u64, x: &mut [u64], z: &mut [u64]) {
    let mut flip = |q: usize, pauli: usize| {
        if pauli & 1 == 1 {
            x[q] ^= lanes;
        }
        if pauli & 2 == 2 {
            z[q] ^= lanes;
        }
    };
    match op {
        Op::Dep1(_, q) => flip(q, outcome),
        Op::Dep2(_, a, b) => {
            flip(a, outcome & 3);
            flip(b, outcome >> 2);
        }
        Op::XErr(_, q) => flip(q, 1),
        Op::ZErr(_, q) => flip(q, 2),
        _ => unreachable!("not a noise channel"),
    }
}

fn apply_random(op: Op, x: &mut [u64], z: &mut [u64], rng: &mut ChaCha8Rng) {
    let p = match op {
        Op::Dep1(p, _) | Op::Dep2(p, ..) | Op::XErr(p, _) | Op::ZErr(p, _) => p,
        _ => return,
    };
    let mut hits = bernoulli_mask(p, rng);
    let outcomes = op.outcomes();
    if outcomes == 1 {
        apply_outcome(op, 1, hits, x, z);
        return;
    }
    while hits != 0 {
        let lane = hits & hits.wrapping_neg();
        hits ^= lane;
        let outcome = rng.gen_range(1..=outcomes);
        apply_outcome(op, outcome, lane, x, z);
    }
}

/// Detector and observable outcomes, one packed row per shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotTable {
    shots: usize,
    bits: usize,
    words_per_shot: usize,
    data: Vec<u64>,
}

impl ShotTable {
    pub fn zeros(shots: usize, bits: usize) -> Self {
        let words_per_shot = bits.div_ceil(64);
        Self {
            shots,
            bits,
            words_per_shot,
            data: vec![0; shots * words_per_shot],
        }
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn get(&self, shot: usize, bit: usize) -> bool {
        self.data[shot * self.words_per_shot + bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn row(&self, shot: usize) -> BinaryVector {
        let start = shot * self.words_per_shot;
        BinaryVector::from_words(self.bits, self.data[start..start + self.words_per_shot].to_vec())
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Fraction of shots in which each bit is set.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.bits)
            .map(|b| (0..self.shots).filter(|&s| self.get(s, b)).count() as f64 / self.shots as f64)
            .collect()
    }

    /// Copies lane-major words (one per bit, bit `i` of word = shot
    /// `first + i`) into rows.
    fn fill_from_lanes(&mut self, first: usize, count: usize, lanes: &[u64]) {
        for (bit, &word) in lanes.iter().enumerate() {
            let mut w = word;
            if count < 64 {
                w &= (1u64 << count) - 1;
            }
            while w != 0 {
                let lane = w.trailing_zeros() as usize;
                w &= w - 1;
                self.data[(first + lane) * self.words_per_shot + bit / 64] |= 1 << (bit % 64);
            }
        }
    }

    /// Binary form: `shots` and `bits` as little-endian u32, then each shot
    /// as `ceil(bits / 8)` bytes, least significant bit first.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let shots = u32::try_from(self.shots).map_err(|_| Error::InvalidInput("too many shots".into()))?;
        let bits = u32::try_from(self.bits).map_err(|_| Error::InvalidInput("too many bits".into()))?;
        w.write_all(&shots.to_le_bytes())?;
        w.write_all(&bits.to_le_bytes())?;
        let bytes = self.bits.div_ceil(8);
        for s in 0..self.shots {
            let row = &self.data[s * self.words_per_shot..(s + 1) * self.words_per_shot];
            let packed: Vec<u8> = (0..bytes).map(|i| (row[i / 8] >> (8 * (i % 8))) as u8).collect();
            w.write_all(&packed)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let shots = u32::from_le_bytes(header[..4].try_into().expect("4 bytes")) as usize;
        let bits = u32::from_le_bytes(header[4..].try_into().expect("4 bytes")) as usize;
        let bytes = bits.div_ceil(8);
        let mut table = Self::zeros(shots, bits);
        let mut buf = vec![0u8; bytes];
        for s in 0..shots {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Parse(format!("shot {s} truncated: {e}")))?;
            for (i, &b) in buf.iter().enumerate() {
                table.data[s * table.words_per_shot + i / 8] |= (b as u64) << (8 * (i % 8));
            }
        }
        if bits % 64 != 0 && table.data.chunks(table.words_per_shot).any(|row| {
            row.last().is_some_and(|&w| w >> (bits % 64) != 0)
        }) {
            return Err(Error::Parse("padding bits set".into()));
        }
        Ok(table)
    }
}

/// Detector and observable samples of a batch of shots.
#[derive(Clone, Debug)]
pub struct Samples {
    pub detectors: ShotTable,
    pub observables: ShotTable,
}

/// Simulates shots `first..first + count`. Shots are grouped in blocks of
/// 64 aligned to multiples of 64, each block seeded from `(seed, block)`,
/// so any partition of the shot range gives the same outcomes.
pub fn sample_range(program: &Program, first: usize, count: usize, seed: u64) -> Samples {
    let mut det = ShotTable::zeros(count, program.n_detectors());
    let mut obs = ShotTable::zeros(count, program.n_observables());
    let end = first + count;
    let mut block = first / 64;
    while block * 64 < end {
        let mut rng = seeds::stream(seed, block as u64);
        let (d, o) = program.run(&mut rng, Mode::Random);
        let lo = (block * 64).max(first);
        let hi = ((block + 1) * 64).min(end);
        let skip = lo - block * 64;
        let shift = |lanes: Vec<u64>| -> Vec<u64> { lanes.into_iter().map(|w| w >> skip).collect() };
        det.fill_from_lanes(lo - first, hi - lo, &shift(d));
        obs.fill_from_lanes(lo - first, hi - lo, &shift(o));
        block += 1;
    }
    Samples {
        detectors: det,
        observables: obs,
    }
}

pub fn sample(circuit: &Circuit, shots: usize, seed: u64) -> Result<Samples> {
    Ok(sample_range(&Program::new(circuit)?, 0, shots, seed))
}

/// Runs the circuit with every channel silent except one forced fault.
/// Returns the detector and observable flips, checking that all 64 lanes
/// agree (they differ only in gauge randomness).
pub fn simulate_fault(program: &Program, fault: &FaultLocation, seed: u64) -> Result<(BinaryVector, BinaryVector)> {
    let mut rng = seeds::stream(seed, 0);
    let (d, o) = program.run(&mut rng, Mode::Forced(fault));
    let to_vec = |lanes: &[u64]| -> Result<BinaryVector> {
        let mut v = BinaryVector::zeros(lanes.len());
        for (i, &w) in lanes.iter().enumerate() {
            match w {
                0 => {}
                u64::MAX => v.set(i, true),
                _ => {
                    return Err(Error::InvalidCircuit(format!(
                        "outcome {i} is not deterministic under fault {fault:?}"
                    )))
                }
            }
        }
        Ok(v)
    };
    Ok((to_vec(&d)?, to_vec(&o)?))
}

/// One merged fault mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub p: f64,
    pub dets: Vec<usize>,
    pub obs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorErrorModel {
    pub n_detectors: usize,
    pub n_observables: usize,
    /// Largest number of detectors in one round.
    pub detectors_per_round: usize,
    pub rounds: usize,
    /// `round_starts[k]..round_starts[k + 1]` are the detectors of round `k`.
    pub round_starts: Vec<usize>,
    /// Sorted by first detector; mechanisms without detectors come last.
    pub mechanisms: Vec<Mechanism>,
}

/// XOR-convolution of two independent flip probabilities.
pub fn merge_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Calls `f(fault, probability, signature)` for every elementary fault;
/// the signature has detector bits `0..D` then observable bits.
fn for_each_fault(program: &Program, mut f: impl FnMut(FaultLocation, f64, &[u64])) {
    let d = program.n_detectors();
    let bits = d + program.n_observables();
    let words = bits.div_ceil(64).max(1);
    let mut meas_sig = vec![0u64; program.n_meas * words];
    let mut set = |m: usize, bit: usize| meas_sig[m * words + bit / 64] |= 1 << (bit % 64);
    for (i, ms) in program.detectors.iter().enumerate() {
        for &m in ms {
            set(m, i);
        }
    }
    for (k, ms) in program.observables.iter().enumerate() {
        for &m in ms {
            set(m, d + k);
        }
    }
    // flat per-qubit sensitivity of an X or Z error at the current point
    let n = program.n_qubits;
    let mut sx = vec![0u64; n * words];
    let mut sz = vec![0u64; n * words];
    let at = |q: usize| q * words..(q + 1) * words;
    let mut m = program.n_meas;
    let mut channel = program.ops.iter().filter(|op| op.is_noise()).count();
    let mut sig = vec![0u64; words];
    for op in program.ops.iter().rev() {
        match *op {
            Op::ResetZ(q) | Op::ResetX(q) => {
                sx[at(q)].fill(0);
                sz[at(q)].fill(0);
            }
            Op::MeasZ(q) => {
                m -= 1;
                xor_words(&mut sx[at(q)], &meas_sig[m * words..(m + 1) * words]);
                sz[at(q)].fill(0);
            }
            Op::MeasX(q) => {
                m -= 1;
                xor_words(&mut sz[at(q)], &meas_sig[m * words..(m + 1) * words]);
                sx[at(q)].fill(0);
            }
            Op::Cx(c, t) => {
                let tx = sx[at(t)].to_vec();
                xor_words(&mut sx[at(c)], &tx);
                let cz = sz[at(c)].to_vec();
                xor_words(&mut sz[at(t)], &cz);
            }
            noise => {
                channel -= 1;
                let component = |q: usize, pauli: usize, sig: &mut [u64]| {
                    if pauli & 1 == 1 {
                        xor_words(sig, &sx[at(q)]);
                    }
                    if pauli & 2 == 2 {
                        xor_words(sig, &sz[at(q)]);
                    }
                };
                let (p, outcomes) = match noise {
                    Op::Dep1(p, _) => (p / 3.0, 3),
                    Op::Dep2(p, ..) => (p / 15.0, 15),
                    Op::XErr(p, _) | Op::ZErr(p, _) => (p, 1),
                    _ => unreachable!("not a noise channel"),
                };
                for outcome in 1..=outcomes {
                    sig.fill(0);
                    match noise {
                        Op::Dep1(_, q) => component(q, outcome, &mut sig),
                        Op::Dep2(_, a, b) => {
                            component(a, outcome & 3, &mut sig);
                            component(b, outcome >> 2, &mut sig);
                        }
                        Op::XErr(_, q) => component(q, 1, &mut sig),
                        Op::ZErr(_, q) => component(q, 2, &mut sig),
                        _ => unreachable!(),
                    }
                    f(FaultLocation { channel, outcome }, p, &sig);
                }
            }
        }
    }
}

fn split_signature(sig: &[u64], d: usize) -> (Vec<usize>, Vec<usize>) {
    let v = BinaryVector::from_words(sig.len() * 64, sig.to_vec());
    let (dets, obs): (Vec<usize>, Vec<usize>) = v.iter_ones().partition(|&b| b < d);
    (dets, obs.into_iter().map(|b| b - d).collect())
}

/// Signature of every elementary fault, unmerged, in program order.
pub fn elementary_faults(program: &Program) -> Vec<(FaultLocation, Mechanism)> {
    let d = program.n_detectors();
    let mut out = Vec::new();
    for_each_fault(program, |loc, p, sig| {
        let (dets, obs) = split_signature(sig, d);
        out.push((loc, Mechanism { p, dets, obs }));
    });
    out.sort_by_key(|(loc, _)| (loc.channel, loc.outcome));
    out
}

pub fn build_dem(circuit: &Circuit) -> Result<DetectorErrorModel> {
    let program = Program::new(circuit)?;
    let d = program.n_detectors();
    let mut merged: HashMap<Vec<u64>, f64> = HashMap::new();
    for_each_fault(&program, |_, p, sig| {
        if p > 0.0 && sig.iter().any(|&w| w != 0) {
            let entry = merged.entry(sig.to_vec()).or_insert(0.0);
            *entry = merge_probability(*entry, p);
        }
    });
    let mut mechanisms: Vec<Mechanism> = merged
        .into_iter()
        .map(|(sig, p)| {
            let (dets, obs) = split_signature(&sig, d);
            Mechanism { p, dets, obs }
        })
        .collect();
    mechanisms.sort_by(|a, b| {
        let key = |m: &Mechanism| (m.dets.first().copied().unwrap_or(usize::MAX), m.dets.clone(), m.obs.clone());
        key(a).cmp(&key(b))
    });
    let round_starts = if circuit.round_starts.len() >= 2 {
        circuit.round_starts.clone()
    } else {
        vec![0, d]
    };
    let rounds = round_starts.len() - 1;
    Ok(DetectorErrorModel {
        n_detectors: d,
        n_observables: program.n_observables(),
        detectors_per_round: round_starts.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0),
        rounds,
        round_starts,
        mechanisms,
    })
}

/// Row and column selections for one decoding window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowIndices {
    /// Detector rows decoded in this window.
    pub s_w_inds: Range<usize>,
    /// Detector rows whose correction is committed.
    pub s_c_inds: Range<usize>,
    /// Mechanisms touching the window rows.
    pub w_inds: Vec<usize>,
    /// Mechanisms committed by this window.
    pub c_inds: Vec<usize>,
    /// Mechanisms of `w_inds` already committed by an earlier window.
    pub frozen: Vec<usize>,
    pub is_final: bool,
}

impl DetectorErrorModel {
    pub fn round_of(&self, detector: usize) -> usize {
        self.round_starts.partition_point(|&s| s <= detector) - 1
    }

    pub fn round_range(&self, round: usize) -> Range<usize> {
        self.round_starts[round]..self.round_starts[round + 1]
    }

    /// Largest number of rounds spanned by one mechanism.
    pub fn max_round_span(&self) -> usize {
        self.mechanisms
            .iter()
            .filter(|m| !m.dets.is_empty())
            .map(|m| self.round_of(*m.dets.last().unwrap()) - self.round_of(m.dets[0]) + 1)
            .max()
            .unwrap_or(0)
    }

    /// Number of windows of commit size `c`.
    pub fn decoding_rounds(&self, c: usize) -> usize {
        self.rounds.div_ceil(c.max(1))
    }

    pub fn check_matrix(&self) -> crate::gf2::SparseMatrix {
        crate::gf2::SparseMatrix::from_col_support(
            self.n_detectors,
            self.mechanisms.iter().map(|m| m.dets.clone()).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parse(msg));
        if self.round_starts.len() != self.rounds + 1
            || self.round_starts.first() != Some(&0)
            || self.round_starts.last() != Some(&self.n_detectors)
            || self.round_starts.windows(2).any(|w| w[0] > w[1])
        {
            return bad("inconsistent round boundaries".into());
        }
        for (i, m) in self.mechanisms.iter().enumerate() {
            if !(m.p > 0.0 && m.p <= 0.5) {
                return bad(format!("mechanism {i} has probability {}", m.p));
            }
            if m.dets.windows(2).any(|w| w[0] >= w[1]) || m.dets.last().is_some_and(|&d| d >= self.n_detectors) {
                return bad(format!("mechanism {i} has invalid detectors"));
            }
            if m.obs.windows(2).any(|w| w[0] >= w[1]) || m.obs.last().is_some_and(|&o| o >= self.n_observables) {
                return bad(format!("mechanism {i} has invalid observables"));
            }
        }
        if self
            .mechanisms
            .windows(2)
            .any(|w| w[0].dets.first().unwrap_or(&usize::MAX) > w[1].dets.first().unwrap_or(&usize::MAX))
        {
            return bad("mechanisms are not sorted by first detector".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dem: Self = serde_json::from_str(text)?;
        dem.validate()?;
        Ok(dem)
    }

    /// Window `t` covers rounds `[t c, t c + w)` clipped to the last round
    /// and commits rounds `[t c, t c + c)`; the last window commits all of
    /// its not yet committed mechanisms.
    ///
    /// Relies on every mechanism spanning at most two consecutive rounds.
    pub fn window_indices(&self, t: usize, w: usize, c: usize) -> Result<WindowIndices> {
        if c == 0 || w < c {
            return Err(Error::InvalidInput(format!("need 1 <= c <= w, got w={w}, c={c}")));
        }
        let total = self.decoding_rounds(c);
        if t >= total {
            return Err(Error::InvalidInput(format!("window {t} out of range (0..{total})")));
        }
        let start = t * c;
        let end = (start + w).min(self.rounds);
        let commit_end = (start + c).min(self.rounds);
        let rows = self.round_starts[start]..self.round_starts[end];
        let commit_rows = self.round_starts[start]..self.round_starts[commit_end];
        let is_final = t + 1 == total;

        // candidates: first detector in the previous round or inside the window
        let lo_row = self.round_starts[start.saturating_sub(1)];
        let first = |m: &Mechanism| m.dets.first().copied().unwrap_or(usize::MAX);
        let lo = self.mechanisms.partition_point(|m| first(m) < lo_row);
        let hi = self.mechanisms.partition_point(|m| first(m) < rows.end);
        let mut out = WindowIndices {
            s_w_inds: rows.clone(),
            s_c_inds: commit_rows.clone(),
            w_inds: Vec::new(),
            c_inds: Vec::new(),
            frozen: Vec::new(),
            is_final,
        };
        for j in lo..hi {
            let m = &self.mechanisms[j];
            if *m.dets.last().expect("nonempty") < rows.start {
                continue;
            }
            out.w_inds.push(j);
            let f = m.dets[0];
            if f < rows.start {
                out.frozen.push(j);
            } else if is_final || commit_rows.contains(&f) {
                out.c_inds.push(j);
            }
        }
        Ok(out)
    }

    /// Reference implementation of `window_indices` by scanning every column.
    pub fn window_indices_by_scan(&self, t: usize, w: usize, c: usize) -> Result<WindowIndices> {
        let fast = self.window_indices(t, w, c)?;
        let rows = fast.s_w_inds.clone();
        let commit_rows = fast.s_c_inds.clone();
        let mut out = WindowIndices {
            w_inds: Vec::new(),
            c_inds: Vec::new(),
            frozen: Vec::new(),
            ..fast
        };
        for (j, m) in self.mechanisms.iter().enumerate() {
            if !m.dets.iter().any(|d| rows.contains(d)) {
                continue;
            }
            out.w_inds.push(j);
            let f = *m.dets.iter().min().unwrap();
            if f < rows.start {
                out.frozen.push(j);
            } else if out.is_final || commit_rows.contains(&f) {
                out.c_inds.push(j);
            }
        }
        Ok(out)
    }
}
