//! Normalised min-sum belief propagation, ordered-statistics reprocessing and
//! the overlapping-window driver that decodes a memory experiment round by
//! round.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gf2::{BinaryVector, SparseMatrix};
use crate::noise::DetectorErrorModel;
use crate::{Error, Result};

/// Prior given to mechanisms that an earlier window already committed.
pub const PERF_PRIOR: f64 = 1e-12;

/// Bound on every message and posterior log-likelihood ratio.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Every check, then every variable, updated from the previous iteration.
    #[default]
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpConfig {
    pub max_iter: usize,
    /// Normalisation applied to check-to-variable messages.
    pub scaling: f64,
    pub schedule: Schedule,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self { max_iter: 1000, scaling: 0.625, schedule: Schedule::Parallel }
    }
}

impl BpConfig {
    pub fn with_max_iter(max_iter: usize) -> Self {
        Self { max_iter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.scaling > 0.0 && self.scaling <= 1.0) {
            return Err(Error::InvalidInput(format!("scaling {} is outside (0, 1]", self.scaling)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OsdStrategy {
    Order0,
    CombinationSweep,
}

/// Ordered-statistics settings. Parses from `osd0` or `csN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OsdConfig {
    order: usize,
    strategy: OsdStrategy,
}

impl OsdConfig {
    pub fn new(order: usize, strategy: OsdStrategy) -> Self {
        let strategy = if order == 0 { OsdStrategy::Order0 } else { strategy };
        let order = if strategy == OsdStrategy::Order0 { 0 } else { order };
        Self { order, strategy }
    }

    pub fn order0() -> Self {
        Self::new(0, OsdStrategy::Order0)
    }

    pub fn combination_sweep(order: usize) -> Self {
        Self::new(order, OsdStrategy::CombinationSweep)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn strategy(&self) -> OsdStrategy {
        self.strategy
    }
}

impl Default for OsdConfig {
    fn default() -> Self {
        Self::order0()
    }
}

impl fmt::Display for OsdConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy {
            OsdStrategy::Order0 => write!(f, "osd0"),
            OsdStrategy::CombinationSweep => write!(f, "cs{}", self.order),
        }
    }
}

impl FromStr for OsdConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Parse(format!("unknown OSD setting `{s}` (expected osd0 or csN)"));
        if s == "osd0" || s == "0" {
            return Ok(Self::order0());
        }
        let order = s.strip_prefix("cs").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        Ok(Self::combination_sweep(order))
    }
}

impl TryFrom<String> for OsdConfig {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OsdConfig> for String {
    fn from(c: OsdConfig) -> Self {
        c.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    /// Rounds decoded together.
    pub w: usize,
    /// Rounds committed per window.
    pub c: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { w: 3, c: 1 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.c > self.w {
            return Err(Error::InvalidInput(format!(
                "window needs 1 <= c <= w, got w={}, c={}",
                self.w, self.c
            )));
        }
        Ok(())
    }
}

/// Check matrix as column-major edge lists, the layout message passing uses.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    edge_row: Vec<u32>,
    row_ptr: Vec<usize>,
    /// Row-major position of each column-major edge; rows list columns in order.
    row_slot: Vec<u32>,
    /// Columns bucketed by degree, so the variable pass runs fixed-length loops.
    groups: Vec<DegreeGroup>,
}

#[derive(Clone, Debug)]
struct DegreeGroup {
    degree: usize,
    cols: Vec<u32>,
    rows: Vec<u32>,
    slots: Vec<u32>,
}

impl TannerGraph {
    pub fn new(h: &SparseMatrix) -> Self {
        let mut col_ptr = Vec::with_capacity(h.cols() + 1);
        let mut edge_row = Vec::with_capacity(h.nnz());
        col_ptr.push(0);
        for j in 0..h.cols() {
            edge_row.extend(h.col(j).iter().map(|&i| i as u32));
            col_ptr.push(edge_row.len());
        }
        let mut row_ptr = vec![0usize; h.rows() + 1];
        for &i in &edge_row {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..h.rows() {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut fill = row_ptr.clone();
        let row_slot = edge_row
            .iter()
            .map(|&i| {
                let slot = fill[i as usize];
                fill[i as usize] += 1;
                slot as u32
            })
            .collect::<Vec<u32>>();
        let mut groups: Vec<DegreeGroup> = Vec::new();
        for j in 0..h.cols() {
            let (a, b) = (col_ptr[j], col_ptr[j + 1]);
            let g = match groups.iter().position(|g| g.degree == b - a) {
                Some(g) => g,
                None => {
                    groups.push(DegreeGroup { degree: b - a, cols: vec![], rows: vec![], slots: vec![] });
                    groups.len() - 1
                }
            };
            let g = &mut groups[g];
            g.cols.push(j as u32);
            g.rows.extend_from_slice(&edge_row[a..b]);
            g.slots.extend_from_slice(&row_slot[a..b]);
        }
        Self { rows: h.rows(), cols: h.cols(), col_ptr, edge_row, row_ptr, row_slot, groups }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn col_rows(&self, j: usize) -> &[u32] {
        &self.edge_row[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    fn satisfies(&self, hard: &[bool], syndrome: &[bool]) -> bool {
        let mut parity = syndrome.to_vec();
        for j in (0..self.cols).filter(|&j| hard[j]) {
            for &i in self.col_rows(j) {
                parity[i as usize] ^= true;
            }
        }
        !parity.contains(&true)
    }

    /// Columns as bit-packed row sets, for elimination.
    fn packed_columns(&self) -> Vec<Vec<u64>> {
        let words = self.rows.div_ceil(64);
        (0..self.cols)
            .map(|j| {
                let mut v = vec![0u64; words];
                for &i in self.col_rows(j) {
                    v[i as usize / 64] ^= 1 << (i % 64);
                }
                v
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutput {
    pub hard: BinaryVector,
    /// Posterior log-likelihood ratios, log(P(no flip) / P(flip)).
    pub llrs: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn prior_llr(p: f64) -> f64 {
    ((1.0 - p) / p).ln().clamp(-LLR_CLIP, LLR_CLIP)
}

fn to_bools(v: &BinaryVector) -> Vec<bool> {
    (0..v.len()).map(|i| v.get(i)).collect()
}

fn check_dims(graph: &TannerGraph, priors: &[f64], syndrome_len: usize) -> Result<()> {
    if priors.len() != graph.cols || syndrome_len != graph.rows {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, got {} priors and syndrome length {}",
            graph.rows,
            graph.cols,
            priors.len(),
            syndrome_len
        )));
    }
    if let Some(p) = priors.iter().find(|p| !(**p > 0.0 && **p <= 0.5)) {
        return Err(Error::InvalidInput(format!("prior {p} is outside (0, 0.5]")));
    }
    Ok(())
}

/// Normalised min-sum BP. Non-convergence is reported in the output, not as
/// an error.
pub fn bp_min_sum(h: &SparseMatrix, priors: &[f64], syndrome: &BinaryVector, config: &BpConfig) -> Result<BpOutput> {
    config.validate()?;
    let graph = TannerGraph::new(h);
    check_dims(&graph, priors, syndrome.len())?;
    Ok(run_bp(&graph, priors, &to_bools(syndrome), config))
}

/// What a check needs to send every neighbour its min-sum message: the two
/// smallest incoming magnitudes, the edge holding the smallest, and the sign
/// parity of all incoming messages and the syndrome bit.
#[derive(Clone, Copy)]
struct CheckState {
    min1: f64,
    min2: f64,
    argmin: u32,
    /// Sign bit (as in `f64::to_bits`) of the product of signs.
    sign: u64,
}

const SIGN_BIT: u64 = 1 << 63;
const LANES: usize = 4;

// `f64::min` and friends pay for NaN handling; messages are never NaN
#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b { a } else { b }
}

#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b { a } else { b }
}

#[inline(always)]
fn clip(x: f64) -> f64 {
    fmax(fmin(x, LLR_CLIP), -LLR_CLIP)
}

impl CheckState {
    /// Summarises the incoming messages of one check, stored contiguously
    /// from row-major slot `base`.
    /// Magnitudes come out already scaled and clipped.
    fn gather(q: &[f64], base: usize, syndrome: bool, scaling: f64) -> Self {
        // independent lanes break the min dependency chain and vectorise
        let mut m1 = [f64::INFINITY; LANES];
        let mut m2 = [f64::INFINITY; LANES];
        let mut sign = [0u64; LANES];
        let mut chunks = q.chunks_exact(LANES);
        for c in &mut chunks {
            for l in 0..LANES {
                let a = c[l].abs();
                sign[l] ^= c[l].to_bits();
                m2[l] = fmin(m2[l], fmax(a, m1[l]));
                m1[l] = fmin(m1[l], a);
            }
        }
        for (l, &x) in chunks.remainder().iter().enumerate() {
            let a = x.abs();
            sign[l] ^= x.to_bits();
            m2[l] = fmin(m2[l], fmax(a, m1[l]));
            m1[l] = fmin(m1[l], a);
        }
        let (mut min1, mut min2) = (m1[0], m2[0]);
        for l in 1..LANES {
            min2 = fmin(fmin(min2, m2[l]), fmax(min1, m1[l]));
            min1 = fmin(min1, m1[l]);
        }
        let argmin = q.iter().position(|x| x.abs() == min1).map_or(u32::MAX, |k| (base + k) as u32);
        let sign = (sign.iter().fold(0, |acc, &s| acc ^ s) & SIGN_BIT) ^ if syndrome { SIGN_BIT } else { 0 };
        Self { min1: fmin(scaling * min1, LLR_CLIP), min2: fmin(scaling * min2, LLR_CLIP), argmin, sign }
    }

    /// Message to the edge in row-major slot `slot`, whose incoming message was `q`.
    #[inline]
    fn message(&self, slot: u32, q: f64) -> f64 {
        let mag = if slot == self.argmin { self.min2 } else { self.min1 };
        f64::from_bits(mag.to_bits() | ((self.sign ^ q.to_bits()) & SIGN_BIT))
    }
}

struct VariablePass<'a> {
    checks: &'a [CheckState],
    prior: &'a [f64],
    q: &'a mut [f64],
    parity: &'a mut [bool],
    llrs: &'a mut [f64],
    hard: &'a mut [bool],
}

impl VariablePass<'_> {
    #[inline(always)]
    fn column(&mut self, j: usize, rows: &[u32], slots: &[u32]) {
        let mut total = self.prior[j];
        for (&i, &r) in rows.iter().zip(slots) {
            total += self.checks[i as usize].message(r, self.q[r as usize]);
        }
        let h = total < 0.0;
        for (&i, &r) in rows.iter().zip(slots) {
            // recomputing the incoming message is cheaper than storing it
            let m = self.checks[i as usize].message(r, self.q[r as usize]);
            self.q[r as usize] = clip(total - m);
            self.parity[i as usize] ^= h;
        }
        self.llrs[j] = clip(total);
        self.hard[j] = h;
    }

    /// Fixed-degree loops unroll once `column` is inlined.
    fn run<const D: usize>(&mut self, g: &DegreeGroup) {
        for ((&j, rows), slots) in g.cols.iter().zip(g.rows.chunks_exact(D)).zip(g.slots.chunks_exact(D)) {
            let rows: &[u32; D] = rows.try_into().unwrap();
            let slots: &[u32; D] = slots.try_into().unwrap();
            self.column(j as usize, rows, slots);
        }
    }

    fn run_any(&mut self, g: &DegreeGroup) {
        if g.degree == 0 {
            for &j in &g.cols {
                self.column(j as usize, &[], &[]);
            }
            return;
        }
        for ((&j, rows), slots) in g.cols.iter().zip(g.rows.chunks_exact(g.degree)).zip(g.slots.chunks_exact(g.degree)) {
            self.column(j as usize, rows, slots);
        }
    }
}

/// Flooding schedule. Variable-to-check messages live in row-major order so
/// the check pass streams through memory; the variable pass walks columns.
fn run_bp(graph: &TannerGraph, priors: &[f64], syndrome: &[bool], config: &BpConfig) -> BpOutput {
    let n = graph.cols;
    let prior: Vec<f64> = priors.iter().map(|&p| prior_llr(p)).collect();
    let mut llrs = prior.clone();
    let mut hard: Vec<bool> = llrs.iter().map(|&l| l < 0.0).collect();
    let finish = |hard: &[bool], llrs: Vec<f64>, converged, iterations| BpOutput {
        hard: BinaryVector::from_bools(hard),
        llrs,
        converged,
        iterations,
    };
    if graph.satisfies(&hard, syndrome) {
        return finish(&hard, llrs, true, 0);
    }

    let mut q = vec![0.0f64; graph.edge_row.len()];
    for j in 0..n {
        for e in graph.col_ptr[j]..graph.col_ptr[j + 1] {
            q[graph.row_slot[e] as usize] = prior[j];
        }
    }
    let mut checks = vec![CheckState::gather(&[], 0, false, 1.0); graph.rows];
    let mut parity = vec![false; graph.rows];
    for it in 1..=config.max_iter {
        for (i, st) in checks.iter_mut().enumerate() {
            let (a, b) = (graph.row_ptr[i], graph.row_ptr[i + 1]);
            *st = CheckState::gather(&q[a..b], a, syndrome[i], config.scaling);
        }
        parity.fill(false);
        let mut pass = VariablePass { checks: &checks, prior: &prior, q: &mut q, parity: &mut parity, llrs: &mut llrs, hard: &mut hard };
        for g in &graph.groups {
            match g.degree {
                1 => pass.run::<1>(g),
                2 => pass.run::<2>(g),
                3 => pass.run::<3>(g),
                4 => pass.run::<4>(g),
                5 => pass.run::<5>(g),
                6 => pass.run::<6>(g),
                7 => pass.run::<7>(g),
                8 => pass.run::<8>(g),
                9 => pass.run::<9>(g),
                10 => pass.run::<10>(g),
                11 => pass.run::<11>(g),
                12 => pass.run::<12>(g),
                _ => pass.run_any(g),
            }
        }
        if parity == syndrome {
            return finish(&hard, llrs, true, it);
        }
    }
    finish(&hard, llrs, false, config.max_iter)
}

/// Incremental elimination over column vectors, each basis vector remembering
/// which selected columns it is the sum of.
struct Eliminator {
    words: usize,
    comb_words: usize,
    basis: Vec<u64>,
    comb: Vec<u64>,
    slot_of_row: Vec<u32>,
    rank: usize,
}

const NO_SLOT: u32 = u32::MAX;

impl Eliminator {
    fn new(rows: usize, max_rank: usize) -> Self {
        let comb_words = max_rank.div_ceil(64).max(1);
        Self {
            words: rows.div_ceil(64),
            comb_words,
            basis: Vec::new(),
            comb: Vec::new(),
            slot_of_row: vec![NO_SLOT; rows],
            rank: 0,
        }
    }

    /// Reduces `v` in place; returns the combination of basis slots used.
    fn reduce(&self, v: &mut [u64]) -> Vec<u64> {
        let mut c = vec![0u64; self.comb_words];
        let mut w = 0;
        while w < self.words {
            if v[w] == 0 {
                w += 1;
                continue;
            }
            let row = w * 64 + v[w].trailing_zeros() as usize;
            let slot = self.slot_of_row[row];
            if slot == NO_SLOT {
                return c;
            }
            let slot = slot as usize;
            let b = &self.basis[slot * self.words..(slot + 1) * self.words];
            for k in w..self.words {
                v[k] ^= b[k];
            }
            let bc = &self.comb[slot * self.comb_words..(slot + 1) * self.comb_words];
            for (x, y) in c.iter_mut().zip(bc) {
                *x ^= y;
            }
        }
        c
    }

    /// Adds a reduced nonzero vector as a new basis element.
    fn push(&mut self, v: &[u64], mut c: Vec<u64>) {
        let w = v.iter().position(|&x| x != 0).expect("nonzero");
        let row = w * 64 + v[w].trailing_zeros() as usize;
        let slot = self.rank;
        c[slot / 64] ^= 1 << (slot % 64);
        self.basis.extend_from_slice(v);
        self.comb.extend_from_slice(&c);
        self.slot_of_row[row] = slot as u32;
        self.rank += 1;
    }
}

fn ones(c: &[u64]) -> impl Iterator<Item = usize> + '_ {
    c.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            (x != 0).then(|| {
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                w * 64 + b
            })
        })
    })
}

fn osd_graph(
    graph: &TannerGraph,
    columns: &[Vec<u64>],
    rank_hint: Option<usize>,
    llrs: &[f64],
    weights: &[f64],
    syndrome: &[bool],
    config: &OsdConfig,
) -> Result<Vec<bool>> {
    let n = graph.cols;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| llrs[a].total_cmp(&llrs[b]).then(a.cmp(&b)));

    let full_rank = rank_hint.unwrap_or(graph.rows.min(n));
    let sweep = match config.strategy {
        OsdStrategy::Order0 => 0,
        OsdStrategy::CombinationSweep => usize::MAX,
    };
    let mut elim = Eliminator::new(graph.rows, graph.rows.min(n));
    let mut pivots = Vec::new();
    // non-pivot columns in reliability order, with their pivot expansions
    let mut spare: Vec<(usize, Vec<u64>)> = Vec::new();
    for &j in &order {
        if elim.rank >= full_rank && spare.len() >= sweep {
            break;
        }
        let mut v = columns[j].clone();
        let c = elim.reduce(&mut v);
        if v.iter().any(|&x| x != 0) {
            elim.push(&v, c);
            pivots.push(j);
        } else if spare.len() < sweep {
            spare.push((j, c));
        }
    }

    let mut s = vec![0u64; elim.words];
    for (i, _) in syndrome.iter().enumerate().filter(|(_, &b)| b) {
        s[i / 64] ^= 1 << (i % 64);
    }
    let base = elim.reduce(&mut s);
    if s.iter().any(|&x| x != 0) {
        return Err(Error::Unsatisfiable);
    }

    let cost = |c: &[u64], extra: &[usize]| -> f64 {
        ones(c).map(|k| weights[pivots[k]]).sum::<f64>() + extra.iter().map(|&j| weights[j]).sum::<f64>()
    };
    let mut best = (base.clone(), Vec::new());
    let mut best_cost = cost(&base, &[]);
    if config.strategy == OsdStrategy::CombinationSweep {
        let pairs = spare.len().min(2 * config.order);
        let mut candidates: Vec<Vec<usize>> = (0..spare.len()).map(|a| vec![a]).collect();
        for a in 0..pairs {
            for b in a + 1..pairs {
                candidates.push(vec![a, b]);
            }
        }
        for flips in candidates {
            let mut c = base.clone();
            for &a in &flips {
                for (x, y) in c.iter_mut().zip(&spare[a].1) {
                    *x ^= y;
                }
            }
            let extra: Vec<usize> = flips.iter().map(|&a| spare[a].0).collect();
            let value = cost(&c, &extra);
            if value < best_cost {
                best_cost = value;
                best = (c, extra);
            }
        }
    }
    let mut e = vec![false; n];
    for k in ones(&best.0) {
        e[pivots[k]] = true;
    }
    for j in best.1 {
        e[j] = true;
    }
    Ok(e)
}

/// Ordered-statistics decoding: columns are ranked by `llrs` (most likely
/// flip first), the first independent ones form the pivot set, and the
/// syndrome is solved on it. Combination sweep of order `λ` also tries every
/// single non-pivot flip and every pair among the first `2λ` non-pivot
/// columns, keeping the candidate of least total `llrs`.
pub fn osd(h: &SparseMatrix, llrs: &[f64], syndrome: &BinaryVector, config: &OsdConfig) -> Result<BinaryVector> {
    osd_weighted(h, llrs, llrs, syndrome, config)
}

/// As [`osd`], but candidates are scored by `weights` (typically prior
/// log-odds) instead of by the ordering `llrs`.
pub fn osd_weighted(
    h: &SparseMatrix,
    llrs: &[f64],
    weights: &[f64],
    syndrome: &BinaryVector,
    config: &OsdConfig,
) -> Result<BinaryVector> {
    let graph = TannerGraph::new(h);
    if llrs.len() != h.cols() || weights.len() != h.cols() || syndrome.len() != h.rows() {
        return Err(Error::DimensionMismatch("llrs, weights or syndrome do not match the matrix".into()));
    }
    let columns = graph.packed_columns();
    let e = osd_graph(&graph, &columns, None, llrs, weights, &to_bools(syndrome), config)?;
    Ok(BinaryVector::from_bools(&e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub correction: BinaryVector,
    pub bp_converged: bool,
    pub bp_iterations: usize,
}

/// A check matrix prepared for repeated BP+OSD decoding. OSD candidates are
/// scored by prior likelihood.
#[derive(Clone, Debug)]
pub struct BpOsd {
    graph: TannerGraph,
    columns: Vec<Vec<u64>>,
    rank: usize,
    priors: Vec<f64>,
    weights: Vec<f64>,
    bp: BpConfig,
    osd: OsdConfig,
}

impl BpOsd {
    pub fn new(h: &SparseMatrix, priors: Vec<f64>, bp: BpConfig, osd: OsdConfig) -> Result<Self> {
        bp.validate()?;
        let graph = TannerGraph::new(h);
        check_dims(&graph, &priors, h.rows())?;
        let columns = graph.packed_columns();
        let mut elim = Eliminator::new(graph.rows, graph.rows.min(graph.cols));
        for col in &columns {
            if elim.rank == graph.rows {
                break;
            }
            let mut v = col.clone();
            let c = elim.reduce(&mut v);
            if v.iter().any(|&x| x != 0) {
                elim.push(&v, c);
            }
        }
        let weights = priors.iter().map(|&p| prior_llr(p)).collect();
        Ok(Self { rank: elim.rank, graph, columns, priors, weights, bp, osd })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn decode_bools(&self, syndrome: &[bool]) -> Result<(Vec<bool>, bool, usize)> {
        if !syndrome.iter().any(|&b| b) {
            return Ok((vec![false; self.graph.cols], true, 0));
        }
        let out = run_bp(&self.graph, &self.priors, syndrome, &self.bp);
        if out.converged {
            return Ok((to_bools(&out.hard), true, out.iterations));
        }
        let e = osd_graph(&self.graph, &self.columns, Some(self.rank), &out.llrs, &self.weights, syndrome, &self.osd)?;
        Ok((e, false, out.iterations))
    }

    /// BP, falling back to OSD on the soft output when BP does not converge.
    pub fn decode(&self, syndrome: &BinaryVector) -> Result<Decoded> {
        if syndrome.len() != self.graph.rows {
            return Err(Error::DimensionMismatch("syndrome length".into()));
        }
        let (e, bp_converged, bp_iterations) = self.decode_bools(&to_bools(syndrome))?;
        Ok(Decoded { correction: BinaryVector::from_bools(&e), bp_converged, bp_iterations })
    }
}

struct Window {
    rows: Range<usize>,
    cols: Vec<usize>,
    /// Local indices of the columns this window commits.
    commit: Vec<usize>,
    decoder: BpOsd,
}

/// Overlapping-window decoder for one detector error model. Window shapes
/// and priors are fixed by the model, so they are prepared once and reused
/// for every shot.
pub struct WindowDecoder<'a> {
    dem: &'a DetectorErrorModel,
    windows: Vec<Window>,
}

impl<'a> WindowDecoder<'a> {
    pub fn new(dem: &'a DetectorErrorModel, window: WindowConfig, bp: BpConfig, osd: OsdConfig) -> Result<Self> {
        window.validate()?;
        bp.validate()?;
        let mut windows = Vec::new();
        for t in 0..dem.decoding_rounds(window.c) {
            let idx = dem.window_indices(t, window.w, window.c)?;
            let rows = idx.s_w_inds.clone();
            let cols = idx.w_inds.clone();
            let support: Vec<Vec<usize>> = cols
                .iter()
                .map(|&j| {
                    let dets = &dem.mechanisms[j].dets;
                    dets.iter().filter(|d| rows.contains(d)).map(|d| d - rows.start).collect()
                })
                .collect();
            let h = SparseMatrix::from_col_support(rows.len(), support);
            let priors = cols
                .iter()
                .map(|j| if idx.frozen.binary_search(j).is_ok() { PERF_PRIOR } else { dem.mechanisms[*j].p })
                .collect();
            let commit = idx.c_inds.iter().map(|j| cols.binary_search(j).expect("committed column is in window")).collect();
            windows.push(Window { decoder: BpOsd::new(&h, priors, bp, osd)?, rows, cols, commit });
        }
        Ok(Self { dem, windows })
    }

    pub fn windows(&self) -> usize {
        self.windows.len()
    }

    /// Decodes a full detector record into a correction over mechanisms.
    pub fn decode(&self, syndrome: &BinaryVector) -> Result<BinaryVector> {
        Ok(self.decode_with_stats(syndrome)?.0)
    }

    pub fn decode_with_stats(&self, syndrome: &BinaryVector) -> Result<(BinaryVector, WindowStats)> {
        if syndrome.len() != self.dem.n_detectors {
            return Err(Error::DimensionMismatch(format!(
                "syndrome has {} bits, model has {} detectors",
                syndrome.len(),
                self.dem.n_detectors
            )));
        }
        let mut s = to_bools(syndrome);
        let mut total = BinaryVector::zeros(self.dem.mechanisms.len());
        let mut stats = WindowStats::default();
        for window in &self.windows {
            let (e, converged, iterations) = window.decoder.decode_bools(&s[window.rows.clone()])?;
            stats.bp_iterations += iterations as u64;
            stats.osd_calls += !converged as u64;
            for &k in &window.commit {
                if e[k] {
                    let j = window.cols[k];
                    total.flip(j);
                    for &d in &self.dem.mechanisms[j].dets {
                        s[d] ^= true;
                    }
                }
            }
        }
        Ok((total, stats))
    }
}

/// Work done while decoding one shot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindowStats {
    pub bp_iterations: u64,
    /// Windows where BP did not converge and OSD ran.
    pub osd_calls: u64,
}

/// One-off overlapping-window decode. Prefer [`WindowDecoder`] for many shots.
pub fn overlapping_window_decode(
    dem: &DetectorErrorModel,
    syndrome: &BinaryVector,
    window: WindowConfig,
    bp: BpConfig,
    osd: OsdConfig,
) -> Result<BinaryVector> {
    WindowDecoder::new(dem, window, bp, osd)?.decode(syndrome)
}

/// Per-observable failures: predicted flips from the correction XOR the
/// observed flips.
pub fn evaluate_shot(dem: &DetectorErrorModel, correction: &BinaryVector, actual: &BinaryVector) -> BinaryVector {
    let mut fail = actual.clone();
    for j in correction.iter_ones() {
        for &o in &dem.mechanisms[j].obs {
            fail.flip(o);
        }
    }
    fail
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook two-pass flooding min-sum, for cross-checking `run_bp`.
    fn reference_bp(h: &SparseMatrix, priors: &[f64], syndrome: &[bool], config: &BpConfig) -> (Vec<bool>, Vec<f64>, usize) {
        let edges: Vec<(usize, usize)> = (0..h.rows()).flat_map(|i| h.row(i).iter().map(move |&j| (i, j))).collect();
        let prior: Vec<f64> = priors.iter().map(|&p| prior_llr(p)).collect();
        let mut q: Vec<f64> = edges.iter().map(|&(_, j)| prior[j]).collect();
        let mut r = vec![0.0; edges.len()];
        let mut llrs = prior.clone();
        let mut hard: Vec<bool> = prior.iter().map(|&l| l < 0.0).collect();
        let ok = |hard: &[bool]| (0..h.rows()).all(|i| h.row(i).iter().fold(false, |a, &j| a ^ hard[j]) == syndrome[i]);
        if ok(&hard) {
            return (hard, llrs, 0);
        }
        for it in 1..=config.max_iter {
            for i in 0..h.rows() {
                let ids: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].0 == i).collect();
                for &e in &ids {
                    let others = ids.iter().filter(|&&f| f != e);
                    let neg = others.clone().fold(syndrome[i], |a, &f| a ^ (q[f] < 0.0));
                    let mag = others.map(|&f| q[f].abs()).fold(f64::INFINITY, f64::min);
                    let mag = (config.scaling * mag).min(LLR_CLIP);
                    r[e] = if neg { -mag } else { mag };
                }
            }
            for j in 0..h.cols() {
                let ids: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].1 == j).collect();
                let total = prior[j] + ids.iter().map(|&e| r[e]).sum::<f64>();
                for &e in &ids {
                    q[e] = (total - r[e]).clamp(-LLR_CLIP, LLR_CLIP);
                }
                llrs[j] = total.clamp(-LLR_CLIP, LLR_CLIP);
                hard[j] = total < 0.0;
            }
            if ok(&hard) {
                return (hard, llrs, it);
            }
        }
        (hard, llrs, config.max_iter)
    }

    proptest! {
        #[test]
        fn single_sweep_bp_matches_reference(
            rows in 1usize..7,
            cols in 1usize..10,
            bits in proptest::collection::vec(any::<bool>(), 70),
            flips in proptest::collection::vec(any::<bool>(), 10),
            p in 0.01f64..0.3,
        ) {
            let support: Vec<Vec<usize>> = (0..rows).map(|i| (0..cols).filter(|&j| bits[i * cols + j]).collect()).collect();
            let h = SparseMatrix::from_row_support(cols, support);
            let e = BinaryVector::from_bools(&flips[..cols]);
            let s = h.syndrome_of(&e);
            let priors: Vec<f64> = (0..cols).map(|j| p * (1.0 + j as f64) / cols as f64).collect();
            let config = BpConfig { max_iter: 15, ..BpConfig::default() };
            let fast = bp_min_sum(&h, &priors, &s, &config).unwrap();
            let (hard, llrs, it) = reference_bp(&h, &priors, &to_bools(&s), &config);
            prop_assert_eq!(to_bools(&fast.hard), hard);
            prop_assert_eq!(fast.iterations, it);
            for (a, b) in fast.llrs.iter().zip(&llrs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    fn repetition(n: usize) -> SparseMatrix {
        SparseMatrix::from_row_support(n, (0..n - 1).map(|i| vec![i, i + 1]).collect())
    }

    #[test]
    fn zero_syndrome_converges_immediately() {
        let h = repetition(3);
        let out = bp_min_sum(&h, &[0.1; 3], &BinaryVector::zeros(2), &BpConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.hard.is_zero());
    }

    #[test]
    fn repetition_single_flip() {
        let h = repetition(3);
        for bit in 0..3 {
            let e = BinaryVector::from_support(3, [bit]);
            let s = h.syndrome_of(&e);
            let out = bp_min_sum(&h, &[0.1; 3], &s, &BpConfig::default()).unwrap();
            assert!(out.converged);
            assert_eq!(out.hard, e);
        }
    }

    #[test]
    fn osd_solves_and_prefers_likely_columns() {
        // columns 0 and 2 both explain the syndrome
        let h = SparseMatrix::from_row_support(3, vec![vec![0, 1, 2], vec![1]]);
        let s = BinaryVector::from_support(2, [0]);
        for cfg in [OsdConfig::order0(), OsdConfig::combination_sweep(2)] {
            let e = osd(&h, &[3.0, 1.0, -1.0], &s, &cfg).unwrap();
            assert_eq!(e.support(), vec![2]);
            let e = osd(&h, &[-1.0, 1.0, 3.0], &s, &cfg).unwrap();
            assert_eq!(e.support(), vec![0]);
        }
    }

    #[test]
    fn combination_sweep_improves_on_order_zero() {
        // order-0 picks columns 0 and 1; one flip of column 2 is cheaper
        let h = SparseMatrix::from_row_support(3, vec![vec![0, 2], vec![1, 2]]);
        let s = BinaryVector::from_support(2, [0, 1]);
        let llrs = [0.5, 0.6, 0.8];
        assert_eq!(osd(&h, &llrs, &s, &OsdConfig::order0()).unwrap().support(), vec![0, 1]);
        assert_eq!(osd(&h, &llrs, &s, &OsdConfig::combination_sweep(1)).unwrap().support(), vec![2]);
    }

    #[test]
    fn unsatisfiable_syndrome_is_an_error() {
        let h = SparseMatrix::from_row_support(2, vec![vec![0, 1], vec![0, 1]]);
        let s = BinaryVector::from_support(2, [0]);
        assert!(matches!(osd(&h, &[1.0, 1.0], &s, &OsdConfig::order0()), Err(Error::Unsatisfiable)));
    }

    #[test]
    fn osd_config_parsing() {
        assert_eq!("cs4".parse::<OsdConfig>().unwrap(), OsdConfig::combination_sweep(4));
        assert_eq!("osd0".parse::<OsdConfig>().unwrap(), OsdConfig::order0());
        assert_eq!("cs0".parse::<OsdConfig>().unwrap(), OsdConfig::order0());
        assert!("lsd".parse::<OsdConfig>().is_err());
        assert_eq!(OsdConfig::combination_sweep(4).to_string(), "cs4");
    }

    #[test]
    fn config_validation() {
        assert!(BpConfig::with_max_iter(0).validate().is_err());
        assert!(BpConfig { scaling: 1.5, ..BpConfig::default() }.validate().is_err());
        assert!(WindowConfig { w: 1, c: 2 }.validate().is_err());
    }
}
