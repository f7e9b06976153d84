//! Quantum radial codes from the lifted product of two classical radial codes.
//!
//! The code is assembled from `r` copies of the second classical code (the
//! *X codes*, whose checks are X stabilisers) and `r` copies of the conjugate
//! transpose of the first (the *Z codes*, whose checks are Z stabilisers).
//! Every qubit and stabiliser carries a `(c, u, v)` coordinate: code index,
//! ring and spoke.
//!
//! Column order: all Z-code qubits first (by code, then ring, then spoke),
//! followed by all X-code qubits in the same order.

use serde::{Deserialize, Serialize};

use crate::classical::{AMatrix, ClassicalRadialCode};
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector, RowSpace};

/// Pauli type of an operator, error, stabiliser or memory basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn opposite(self) -> Self {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Basis::X),
            "z" => Ok(Basis::Z),
            other => Err(Error::InvalidInput(format!("unknown basis {other:?}"))),
        }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Basis::X => "x",
            Basis::Z => "z",
        })
    }
}

/// Which family of classical codes a qubit or stabiliser belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeKind {
    /// Copies of the conjugate-transposed first code; their checks are Z stabilisers.
    ZCode,
    /// Copies of the second code; their checks are X stabilisers.
    XCode,
}

impl CodeKind {
    pub fn label(self) -> &'static str {
        match self {
            CodeKind::ZCode => "z",
            CodeKind::XCode => "x",
        }
    }
}

/// `(kind, c, u, v)` coordinate of a qubit or stabiliser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coordinate {
    pub kind: CodeKind,
    pub c: usize,
    pub u: usize,
    pub v: usize,
}

/// Support of one stabiliser, split into the part inside its own classical
/// code (indexed by ring) and the part across the other family (indexed by
/// code).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabiliserSupport {
    /// `own[u']` = qubit of ring `u'` of the stabiliser's own code.
    pub own: Vec<usize>,
    /// `cross[c]` = ring-`u` qubit of code `c` of the other family.
    pub cross: Vec<usize>,
}

impl StabiliserSupport {
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.own.iter().chain(&self.cross).copied()
    }
}

/// A quantum radial CSS code.
#[derive(Clone, Debug)]
pub struct RadialCssCode {
    r: usize,
    s: usize,
    a1: AMatrix,
    a2: AMatrix,
    hx: BinaryMatrix,
    hz: BinaryMatrix,
    x_supports: Vec<StabiliserSupport>,
    z_supports: Vec<StabiliserSupport>,
    logical_x: Vec<BinaryVector>,
    logical_z: Vec<BinaryVector>,
}

impl RadialCssCode {
    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn a1(&self) -> &AMatrix {
        &self.a1
    }

    pub fn a2(&self) -> &AMatrix {
        &self.a2
    }

    /// Number of physical qubits, `2 r^2 s`.
    pub fn n(&self) -> usize {
        2 * self.r * self.r * self.s
    }

    /// Number of logical qubits, `2 (r-1)^2`.
    pub fn k(&self) -> usize {
        2 * (self.r - 1) * (self.r - 1)
    }

    /// Weight of the canonical logicals, an upper bound on the distance.
    pub fn d_upper(&self) -> usize {
        2 * self.s
    }

    /// Stabilisers per sector, `r^2 s`.
    pub fn stabilisers_per_sector(&self) -> usize {
        self.r * self.r * self.s
    }

    pub fn hx(&self) -> &BinaryMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &BinaryMatrix {
        &self.hz
    }

    /// Stabiliser generators of the given Pauli type.
    pub fn stabilisers(&self, basis: Basis) -> &BinaryMatrix {
        match basis {
            Basis::X => &self.hx,
            Basis::Z => &self.hz,
        }
    }

    /// Checks that detect errors of the given type.
    pub fn detecting_checks(&self, error: Basis) -> &BinaryMatrix {
        self.stabilisers(error.opposite())
    }

    pub fn logical_x(&self) -> &[BinaryVector] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[BinaryVector] {
        &self.logical_z
    }

    pub fn logicals(&self, basis: Basis) -> &[BinaryVector] {
        match basis {
            Basis::X => &self.logical_x,
            Basis::Z => &self.logical_z,
        }
    }

    pub fn stabiliser_support(&self, basis: Basis, row: usize) -> &StabiliserSupport {
        match basis {
            Basis::X => &self.x_supports[row],
            Basis::Z => &self.z_supports[row],
        }
    }

    pub fn qubit_index(&self, kind: CodeKind, c: usize, u: usize, v: usize) -> usize {
        debug_assert!(c < self.r && u < self.r && v < self.s);
        let block = self.r * self.s;
        let offset = match kind {
            CodeKind::ZCode => 0,
            CodeKind::XCode => self.r * block,
        };
        offset + c * block + u * self.s + v
    }

    pub fn qubit_coordinate(&self, q: usize) -> Coordinate {
        let block = self.r * self.s;
        let half = self.r * block;
        let (kind, rest) = if q < half {
            (CodeKind::ZCode, q)
        } else {
            (CodeKind::XCode, q - half)
        };
        Coordinate {
            kind,
            c: rest / block,
            u: (rest % block) / self.s,
            v: rest % self.s,
        }
    }

    /// Row index of the stabiliser from code `c`, ring `u`, spoke `v`.
    /// X stabilisers come from X codes and Z stabilisers from Z codes.
    pub fn stabiliser_index(&self, c: usize, u: usize, v: usize) -> usize {
        c * self.r * self.s + u * self.s + v
    }

    pub fn stabiliser_coordinate(&self, basis: Basis, row: usize) -> Coordinate {
        let block = self.r * self.s;
        Coordinate {
            kind: match basis {
                Basis::X => CodeKind::XCode,
                Basis::Z => CodeKind::ZCode,
            },
            c: row / block,
            u: (row % block) / self.s,
            v: row % self.s,
        }
    }

    pub fn qubit_coordinates(&self) -> Vec<Coordinate> {
        (0..self.n()).map(|q| self.qubit_coordinate(q)).collect()
    }
}

/// Lifted product of two classical radial codes with the same `(r, s)`.
///
/// Both inputs must be well formed and have exactly `r - 1` dependencies
/// among their checks. The result is rejected if the CSS condition, the
/// logical count `2 (r-1)^2`, or the canonical logical basis fails to check
/// out.
pub fn lifted_product(a1: &AMatrix, a2: &AMatrix) -> Result<RadialCssCode> {
    if (a1.r(), a1.s()) != (a2.r(), a2.s()) {
        return Err(Error::InvalidInput(format!(
            "mismatched parameters: ({}, {}) vs ({}, {})",
            a1.r(),
            a1.s(),
            a2.r(),
            a2.s()
        )));
    }
    for (name, a) in [("A1", a1), ("A2", a2)] {
        let code = ClassicalRadialCode::new(a.clone());
        if !code.report().dependency_count {
            return Err(Error::InvalidInput(format!(
                "{name} has extra linear dependencies: rank {} != {}",
                code.pcm().rank(),
                a.r() * a.s() - (a.r() - 1)
            )));
        }
    }

    let (r, s) = (a1.r(), a1.s());
    let a1c = a1.conjugate_transpose();
    let a2c = a2.conjugate_transpose();
    let m = r * r * s;
    let n = 2 * m;

    let q = |kind: CodeKind, c: usize, u: usize, v: usize| -> usize {
        let block = r * s;
        let offset = if kind == CodeKind::ZCode { 0 } else { r * block };
        offset + c * block + u * s + v
    };

    let mut x_supports = Vec::with_capacity(m);
    let mut z_supports = Vec::with_capacity(m);
    for c in 0..r {
        for u in 0..r {
            for v in 0..s {
                // X stabiliser of X code c: a check of H2 plus one ring-u
                // qubit per Z code, shifted by A1.
                x_supports.push(StabiliserSupport {
                    own: (0..r)
                        .map(|w| q(CodeKind::XCode, c, w, (v + a2.get(u, w)) % s))
                        .collect(),
                    cross: (0..r)
                        .map(|z| q(CodeKind::ZCode, z, u, (v + a1.get(c, z)) % s))
                        .collect(),
                });
                // Z stabiliser of Z code c: a check of H2* plus one ring-u
                // qubit per X code, shifted by A1*.
                z_supports.push(StabiliserSupport {
                    own: (0..r)
                        .map(|w| q(CodeKind::ZCode, c, w, (v + a2c.get(u, w)) % s))
                        .collect(),
                    cross: (0..r)
                        .map(|x| q(CodeKind::XCode, x, u, (v + a1c.get(c, x)) % s))
                        .collect(),
                });
            }
        }
    }

    let build = |supports: &[StabiliserSupport]| {
        let rows: Vec<Vec<usize>> = supports
            .iter()
            .map(|sup| {
                let mut row: Vec<usize> = sup.all().collect();
                row.sort_unstable();
                row
            })
            .collect();
        BinaryMatrix::from_row_support(m, n, &rows)
    };
    let hx = build(&x_supports)?;
    let hz = build(&z_supports)?;

    if !hx.matmul(&hz.transpose())?.is_zero() {
        return Err(Error::Construction("H_X H_Z^T != 0".into()));
    }
    let k = n - hx.rank() - hz.rank();
    let expected_k = 2 * (r - 1) * (r - 1);
    if k != expected_k {
        return Err(Error::Construction(format!(
            "code encodes {k} qubits, expected 2(r-1)^2 = {expected_k}"
        )));
    }

    let mut code = RadialCssCode {
        r,
        s,
        a1: a1.clone(),
        a2: a2.clone(),
        hx,
        hz,
        x_supports,
        z_supports,
        logical_x: Vec::new(),
        logical_z: Vec::new(),
    };
    let (lx, lz) = logical_basis(&code)?;
    code.logical_x = lx;
    code.logical_z = lz;
    Ok(code)
}

/// Canonical logical operators.
///
/// X logicals of type 1 cover rings `u, u+1` of Z code `z`; type 2 cover
/// ring `u` of X codes `x, x+1`; `u, z, x` range over `[0, r-1)`. The Z
/// logicals swap the roles of the two families. Type-1 operators come
/// first in each list.
pub fn logical_basis(code: &RadialCssCode) -> Result<(Vec<BinaryVector>, Vec<BinaryVector>)> {
    let (r, s, n) = (code.r, code.s, code.n());
    let ring_pair = |kind: CodeKind, c: usize, u: usize| {
        BinaryVector::from_support(
            n,
            (0..s).flat_map(|v| [code.qubit_index(kind, c, u, v), code.qubit_index(kind, c, u + 1, v)]),
        )
    };
    let code_pair = |kind: CodeKind, c: usize, u: usize| {
        BinaryVector::from_support(
            n,
            (0..s).flat_map(|v| [code.qubit_index(kind, c, u, v), code.qubit_index(kind, c + 1, u, v)]),
        )
    };
    let mut lx = Vec::new();
    let mut lz = Vec::new();
    for c in 0..r - 1 {
        for u in 0..r - 1 {
            lx.push(ring_pair(CodeKind::ZCode, c, u));
            lz.push(ring_pair(CodeKind::XCode, c, u));
        }
    }
    for u in 0..r - 1 {
        for c in 0..r - 1 {
            lx.push(code_pair(CodeKind::XCode, c, u));
            lz.push(code_pair(CodeKind::ZCode, c, u));
        }
    }
    verify_logicals(code, Basis::X, &lx)?;
    verify_logicals(code, Basis::Z, &lz)?;
    Ok((lx, lz))
}

/// Checks weight, commutation with the opposite checks and independence
/// modulo the same-type stabilisers.
fn verify_logicals(code: &RadialCssCode, basis: Basis, ops: &[BinaryVector]) -> Result<()> {
    let checks = code.stabilisers(basis.opposite());
    for (i, l) in ops.iter().enumerate() {
        if l.weight() != code.d_upper() {
            return Err(Error::Construction(format!(
                "{basis} logical {i} has weight {}",
                l.weight()
            )));
        }
        if !checks.matvec(l)?.is_zero() {
            return Err(Error::Construction(format!(
                "{basis} logical {i} anticommutes with a stabiliser"
            )));
        }
    }
    let mut space = RowSpace::new(code.stabilisers(basis));
    let base = space.dim();
    for l in ops {
        space.insert(l);
    }
    if space.dim() - base != code.k() {
        return Err(Error::Construction(format!(
            "{basis} logicals span {} dimensions modulo stabilisers, expected {}",
            space.dim() - base,
            code.k()
        )));
    }
    Ok(())
}

/// Pairing matrix `P[i][j] = <logical_x[i], logical_z[j]>`.
pub fn pairing_matrix(code: &RadialCssCode) -> BinaryMatrix {
    let k = code.k();
    let mut p = BinaryMatrix::zeros(k, k);
    for (i, lx) in code.logical_x.iter().enumerate() {
        for (j, lz) in code.logical_z.iter().enumerate() {
            p.set(i, j, lx.dot(lz));
        }
    }
    p
}

/// Named codes shipped with the crate.
pub const PRESET_NAMES: [&str; 3] = ["toy_2_3", "qr_90_8_10", "qr_352_18_20"];

/// Exponent matrices of a named preset.
pub fn preset_matrices(name: &str) -> Result<(AMatrix, AMatrix)> {
    let (s, a1, a2): (usize, Vec<Vec<usize>>, Vec<Vec<usize>>) = match name {
        "toy_2_3" => (3, vec![vec![0, 0], vec![1, 0]], vec![vec![0, 0], vec![1, 0]]),
        "qr_90_8_10" => (
            5,
            vec![vec![3, 2, 1], vec![4, 1, 4], vec![1, 2, 3]],
            vec![vec![3, 3, 0], vec![1, 0, 1], vec![4, 2, 0]],
        ),
        "qr_352_18_20" => (
            11,
            vec![
                vec![10, 10, 1, 6],
                vec![4, 7, 5, 2],
                vec![8, 10, 6, 9],
                vec![1, 6, 0, 6],
            ],
            vec![
                vec![9, 5, 8, 3],
                vec![5, 4, 1, 0],
                vec![0, 4, 6, 10],
                vec![2, 8, 4, 2],
            ],
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok((AMatrix::new(s, a1)?, AMatrix::new(s, a2)?))
}

pub fn preset(name: &str) -> Result<RadialCssCode> {
    let (a1, a2) = preset_matrices(name)?;
    lifted_product(&a1, &a2)
}

/// Intermediate operators of the weight-reduction example on `toy_2_3`.
#[derive(Clone, Debug)]
pub struct WeightReduction {
    /// Product of the ring-0 and ring-1 spoke-0 X stabilisers of X code 0.
    pub step1: BinaryVector,
    /// The same product for X code 1.
    pub step2: BinaryVector,
    /// `step1 + step2`.
    pub step3: BinaryVector,
    /// `step3` times the two canonical X logicals; a weight-4 logical.
    pub step4: BinaryVector,
    /// The two canonical logicals combined in `step4`.
    pub logicals: [BinaryVector; 2],
}

pub fn weight_reduction_fixture(code: &RadialCssCode) -> Result<WeightReduction> {
    if (code.r, code.s) != (2, 3) {
        return Err(Error::InvalidInput(
            "the weight-reduction example is defined for (r, s) = (2, 3)".into(),
        ));
    }
    let row = |c, u| code.hx.row(code.stabiliser_index(c, u, 0));
    let step1 = &row(0, 0) ^ &row(0, 1);
    let step2 = &row(1, 0) ^ &row(1, 1);
    let step3 = &step1 ^ &step2;
    let type1 = code.logical_x[0].clone();
    let type2 = code.logical_x[1].clone();
    let step4 = &(&step3 ^ &type1) ^ &type2;
    Ok(WeightReduction {
        step1,
        step2,
        step3,
        step4,
        logicals: [type1, type2],
    })
}
