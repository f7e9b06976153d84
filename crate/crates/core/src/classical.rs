//! Classical radial codes.
//!
//! A code is described by an `r x r` exponent matrix over `Z_s`; entry
//! `(i, j)` is the shift of the `s x s` circulant in block `(i, j)` of the
//! parity-check matrix. Bits and checks are laid out on `r` rings of `s`
//! spokes, with linear index `u * s + v`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};

/// Default number of rejection-sampling attempts in [`random_a_matrix`].
pub const DEFAULT_SAMPLING_BUDGET: usize = 100_000;

/// Exponent matrix of a classical radial code.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AMatrixJson", into = "AMatrixJson")]
pub struct AMatrix {
    r: usize,
    s: usize,
    a: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct AMatrixJson {
    r: usize,
    s: usize,
    a: Vec<Vec<usize>>,
}

impl TryFrom<AMatrixJson> for AMatrix {
    type Error = Error;

    fn try_from(j: AMatrixJson) -> Result<Self> {
        let m = AMatrix::new(j.s, j.a)?;
        if m.r != j.r {
            return Err(Error::InvalidInput(format!(
                "declared r = {} but matrix has {} rows",
                j.r, m.r
            )));
        }
        Ok(m)
    }
}

impl From<AMatrix> for AMatrixJson {
    fn from(m: AMatrix) -> Self {
        Self {
            r: m.r,
            s: m.s,
            a: m.a,
        }
    }
}

impl AMatrix {
    /// Checks shape and entry ranges. Does not check any code conditions;
    /// see [`validate`] for those.
    pub fn new(s: usize, a: Vec<Vec<usize>>) -> Result<Self> {
        let r = a.len();
        if r == 0 {
            return Err(Error::InvalidInput("A must have at least one row".into()));
        }
        if s < 2 {
            return Err(Error::InvalidInput(format!("s = {s} must be at least 2")));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidInput(format!(
                    "A must be square: row {i} has {} entries, expected {r}",
                    row.len()
                )));
            }
            if let Some(&x) = row.iter().find(|&&x| x >= s) {
                return Err(Error::InvalidInput(format!(
                    "entry {x} in row {i} is outside [0, {s})"
                )));
            }
        }
        Ok(Self { r, s, a })
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.a[i][j]
    }

    pub fn entries(&self) -> &[Vec<usize>] {
        &self.a
    }

    /// Transpose with every exponent negated mod `s`.
    pub fn conjugate_transpose(&self) -> Self {
        let a = (0..self.r)
            .map(|i| (0..self.r).map(|j| (self.s - self.a[j][i]) % self.s).collect())
            .collect();
        Self {
            r: self.r,
            s: self.s,
            a,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Position of a bit or check in the radial layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RadialCoordinate {
    /// Ring, in `[0, r)`.
    pub u: usize,
    /// Spoke, in `[0, s)`.
    pub v: usize,
}

impl RadialCoordinate {
    pub fn from_index(i: usize, s: usize) -> Self {
        Self { u: i / s, v: i % s }
    }

    pub fn index(self, s: usize) -> usize {
        self.u * s + self.v
    }
}

/// The `s x s` identity with each row shifted right by `shift` places.
pub fn circulant_block(s: usize, shift: usize) -> Result<BinaryMatrix> {
    if shift >= s {
        return Err(Error::InvalidInput(format!(
            "circulant shift {shift} outside [0, {s})"
        )));
    }
    let mut m = BinaryMatrix::zeros(s, s);
    for i in 0..s {
        m.set(i, (i + shift) % s, true);
    }
    Ok(m)
}

/// Binary parity-check matrix: block `(i, j)` is `circulant_block(s, a[i][j])`.
pub fn binary_pcm(a: &AMatrix) -> BinaryMatrix {
    let (r, s) = (a.r, a.s);
    let mut h = BinaryMatrix::zeros(r * s, r * s);
    for i in 0..r {
        for j in 0..r {
            let shift = a.a[i][j];
            for v in 0..s {
                h.set(i * s + v, j * s + (v + shift) % s, true);
            }
        }
    }
    h
}

/// No length-4 cycles: every alternating sum over a pair of rows and a pair
/// of columns is nonzero mod `s`.
pub fn square_condition(a: &AMatrix) -> bool {
    let (r, s) = (a.r, a.s);
    for u1 in 0..r {
        for u2 in (u1 + 1)..r {
            for w1 in 0..r {
                for w2 in (w1 + 1)..r {
                    let sum = a.a[u1][w1] + a.a[u2][w2] + 2 * s - a.a[u1][w2] - a.a[u2][w1];
                    if sum % s == 0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut base: usize, mut exp: usize, m: usize) -> usize {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Rank of the rows of `A` over the field with `s` elements. Only
/// meaningful for prime `s`; returns `None` otherwise.
pub fn rank_mod_prime(a: &AMatrix) -> Option<usize> {
    let s = a.s;
    if !is_prime(s) {
        return None;
    }
    let mut m = a.a.clone();
    let (rows, cols) = (a.r, a.r);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(p, rank);
        let inv = pow_mod(m[rank][c], s - 2, s);
        for x in m[rank].iter_mut() {
            *x = *x * inv % s;
        }
        for i in 0..rows {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c];
                for k in 0..cols {
                    m[i][k] = (m[i][k] + s * s - f * m[rank][k]) % s;
                }
            }
        }
        rank += 1;
    }
    Some(rank)
}

/// Outcome of each code condition, reported individually.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub square_condition: bool,
    pub s_prime: bool,
    pub r_le_s: bool,
    /// Rows of `A` independent over GF(s).
    pub rows_independent: bool,
    /// `rank(H) = rs - (r - 1)`, i.e. no dependencies beyond the expected ones.
    pub dependency_count: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.square_condition
            && self.s_prime
            && self.r_le_s
            && self.rows_independent
            && self.dependency_count
    }
}

pub fn validate(a: &AMatrix) -> ValidityReport {
    let (r, s) = (a.r, a.s);
    ValidityReport {
        square_condition: square_condition(a),
        s_prime: is_prime(s),
        r_le_s: r <= s,
        rows_independent: rank_mod_prime(a) == Some(r),
        dependency_count: binary_pcm(a).rank() == r * s - (r - 1),
    }
}

/// A classical radial code with its expanded parity-check matrix.
#[derive(Clone, Debug)]
pub struct ClassicalRadialCode {
    a: AMatrix,
    h: BinaryMatrix,
    report: ValidityReport,
}

impl ClassicalRadialCode {
    /// Builds the code without rejecting invalid exponent matrices; the
    /// report is available through [`Self::report`].
    pub fn new(a: AMatrix) -> Self {
        let h = binary_pcm(&a);
        let report = validate(&a);
        Self { a, h, report }
    }

    /// Builds the code and rejects it unless every condition holds.
    pub fn new_valid(a: AMatrix) -> Result<Self> {
        let code = Self::new(a);
        if !code.report.is_valid() {
            return Err(Error::Construction(format!(
                "exponent matrix fails validation: {:?}",
                code.report
            )));
        }
        Ok(code)
    }

    pub fn a(&self) -> &AMatrix {
        &self.a
    }

    pub fn pcm(&self) -> &BinaryMatrix {
        &self.h
    }

    pub fn report(&self) -> ValidityReport {
        self.report
    }

    pub fn r(&self) -> usize {
        self.a.r
    }

    pub fn s(&self) -> usize {
        self.a.s
    }

    pub fn len(&self) -> usize {
        self.a.r * self.a.s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Codeword `i` sets every bit of ring `i` and of ring `r - 1`.
    pub fn codeword_basis(&self) -> Vec<BinaryVector> {
        let (r, s) = (self.a.r, self.a.s);
        (0..r.saturating_sub(1))
            .map(|i| {
                BinaryVector::from_support(r * s, (0..s).flat_map(|v| [i * s + v, (r - 1) * s + v]))
            })
            .collect()
    }
}

/// Rejection-samples an exponent matrix passing [`validate`], with entries
/// i.i.d. uniform on `[0, s)`.
pub fn random_a_matrix<R: Rng + ?Sized>(r: usize, s: usize, rng: &mut R) -> Result<AMatrix> {
    random_a_matrix_with_budget(r, s, DEFAULT_SAMPLING_BUDGET, rng)
}

pub fn random_a_matrix_with_budget<R: Rng + ?Sized>(
    r: usize,
    s: usize,
    budget: usize,
    rng: &mut R,
) -> Result<AMatrix> {
    if r == 0 || !is_prime(s) || r > s {
        return Err(Error::InvalidInput(format!(
            "random radial codes need s prime and 1 <= r <= s, got (r, s) = ({r}, {s})"
        )));
    }
    for _ in 0..budget {
        let a = (0..r)
            .map(|_| (0..r).map(|_| rng.gen_range(0..s)).collect())
            .collect();
        let a = AMatrix::new(s, a)?;
        // cheap checks first
        if square_condition(&a) && validate(&a).is_valid() {
            return Ok(a);
        }
    }
    Err(Error::SamplingBudget {
        r,
        s,
        attempts: budget,
    })
}
