//! Dense bit-packed linear algebra over GF(2).
//!
//! [`BinaryVector`] and [`BinaryMatrix`] store bits in little-endian `u64`
//! words; elimination works on whole words. [`SparseMatrix`] is the
//! row/column adjacency view handed to the decoder, and [`RowSpace`] keeps a
//! reduced basis around for repeated membership queries.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
pub(crate) fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// A packed vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    /// Builds a vector with the listed positions set. Repeated indices cancel.
    pub fn from_support(len: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in support {
            assert!(i < len, "index {i} out of range for length {len}");
            v.flip(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_support(
            bits.len(),
            bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
        )
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        if len % WORD != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % WORD)) - 1;
            }
        }
        Self { len, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot product");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        xor_words(&mut self.words, &other.words);
    }

    pub fn and_weight(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Indices of the set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn support(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

impl std::ops::BitXor for &BinaryVector {
    type Output = BinaryVector;

    fn bitxor(self, rhs: Self) -> BinaryVector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

impl std::ops::BitXorAssign<&BinaryVector> for BinaryVector {
    fn bitxor_assign(&mut self, rhs: &BinaryVector) {
        self.xor_assign(rhs);
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({})", self.to_bit_string())
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Output of [`BinaryMatrix::rref`].
#[derive(Clone, Debug)]
pub struct Rref {
    /// The reduced matrix, equal to `transform * M`.
    pub reduced: BinaryMatrix,
    /// Pivot column of each nonzero row of `reduced`, strictly increasing.
    pub pivot_cols: Vec<usize>,
    /// Invertible row transform with `reduced = transform * M`.
    pub transform: BinaryMatrix,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from per-row lists of set columns.
    pub fn from_row_support(rows: usize, cols: usize, support: &[Vec<usize>]) -> Result<Self> {
        if support.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows} rows of support, got {}",
                support.len()
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for (i, row) in support.iter().enumerate() {
            for &j in row {
                if j >= cols {
                    return Err(Error::DimensionMismatch(format!(
                        "column {j} out of range in row {i} (cols = {cols})"
                    )));
                }
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    /// Stacks vectors as rows. All vectors must share one length.
    pub fn from_rows(cols: usize, rows: &[BinaryVector]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has the wrong length");
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        m
    }

    /// Parses rows of `0`/`1` characters, one row per non-empty line.
    pub fn parse_rows(text: &str) -> Result<Self> {
        let rows: Vec<BinaryVector> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(BinaryVector::parse_bits)
            .collect::<Result<_>>()?;
        let cols = rows.first().map_or(0, BinaryVector::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("ragged rows".into()));
        }
        Ok(Self::from_rows(cols, &rows))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row(&self, i: usize) -> BinaryVector {
        BinaryVector::from_words(self.cols, self.row_words(i).to_vec())
    }

    pub fn column(&self, j: usize) -> BinaryVector {
        BinaryVector::from_support(self.rows, (0..self.rows).filter(|&i| self.get(i, j)))
    }

    pub fn row_support(&self, i: usize) -> Vec<usize> {
        self.row(i).support()
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut out = vec![0; self.cols];
        for i in 0..self.rows {
            for j in self.row(i).iter_ones() {
                out[j] += 1;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row(i).iter_ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "vstack of {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        })
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in self.row(i).iter_ones() {
                m.set(i, j, true);
            }
            for j in other.row(i).iter_ones() {
                m.set(i, self.cols + j, true);
            }
        }
        Ok(m)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), self.cols);
        for (k, &i) in rows.iter().enumerate() {
            m.row_words_mut(k).copy_from_slice(self.row_words(i));
        }
        m
    }

    /// `self * rhs` over GF(2).
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul of {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let ones: Vec<usize> = self.row(i).iter_ones().collect();
            let dst = &mut out.data[i * out.stride..(i + 1) * out.stride];
            for k in ones {
                xor_words(dst, rhs.row_words(k));
            }
        }
        Ok(out)
    }

    /// `self * v` over GF(2).
    pub fn matvec(&self, v: &BinaryVector) -> Result<BinaryVector> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "matvec of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = BinaryVector::zeros(self.rows);
        for i in 0..self.rows {
            let parity = self
                .row_words(i)
                .iter()
                .zip(v.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones());
            if parity & 1 == 1 {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Eliminates in place, returning the pivot columns of the leading rows.
    /// When `transform` is given, the same row operations are applied to it.
    fn eliminate(&mut self, mut transform: Option<&mut BinaryMatrix>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            if next == self.rows {
                break;
            }
            let (w, bit) = (col / WORD, 1u64 << (col % WORD));
            // leftmost pivot, lowest row index
            let Some(p) = (next..self.rows).find(|&r| self.data[r * self.stride + w] & bit != 0)
            else {
                continue;
            };
            if p != next {
                self.swap_rows(p, next);
                if let Some(t) = transform.as_deref_mut() {
                    t.swap_rows(p, next);
                }
            }
            let pivot_row = self.row_words(next).to_vec();
            let pivot_t = transform.as_deref().map(|t| t.row_words(next).to_vec());
            for r in 0..self.rows {
                if r != next && self.data[r * self.stride + w] & bit != 0 {
                    xor_words(self.row_words_mut(r), &pivot_row);
                    if let (Some(t), Some(pt)) = (transform.as_deref_mut(), pivot_t.as_ref()) {
                        xor_words(t.row_words_mut(r), pt);
                    }
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.data.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    /// Dimension of the row space.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate(None).len()
    }

    /// Reduced row echelon form with the row transform that produces it.
    pub fn rref(&self) -> Rref {
        let mut reduced = self.clone();
        let mut transform = Self::identity(self.rows);
        let pivot_cols = reduced.eliminate(Some(&mut transform));
        Rref {
            reduced,
            pivot_cols,
            transform,
        }
    }

    /// A basis of `{v : M v = 0}`, one vector per free column.
    pub fn nullspace_basis(&self) -> Vec<BinaryVector> {
        let mut reduced = self.clone();
        let pivots = reduced.eliminate(None);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = BinaryVector::zeros(self.cols);
                v.set(f, true);
                for (row, &p) in pivots.iter().enumerate() {
                    if reduced.get(row, f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// True iff `v` is a GF(2) combination of rows of `self`.
    pub fn in_rowspace(&self, v: &BinaryVector) -> Result<bool> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(RowSpace::new(self).contains(v))
    }

    /// Column-adjacency view for message passing.
    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_row_support(
            self.cols,
            (0..self.rows).map(|i| self.row_support(i)).collect(),
        )
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            row_support: (0..self.rows).map(|i| self.row_support(i)).collect(),
        }
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        Self::from_row_support(j.rows, j.cols, &j.row_support)
    }

    /// Writes the plain-text form: `rows cols`, then the set columns of
    /// each row in ascending order, one row per line.
    pub fn write_alist<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter_ones().map(|j| j.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_alist_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_alist(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_alist<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let mut support = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = lines.next().transpose()?.unwrap_or_default();
            let row: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad index {t:?}"))))
                .collect::<Result<_>>()?;
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parse("row indices must be strictly ascending".into()));
            }
            support.push(row);
        }
        Self::from_row_support(rows, cols, &support)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row(i).to_bit_string())?;
        }
        Ok(())
    }
}

/// JSON form of a matrix: `{rows, cols, row_support}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub row_support: Vec<Vec<usize>>,
}

/// Sparse adjacency lists of a check matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_support: Vec<Vec<usize>>,
    col_support: Vec<Vec<usize>>,
}

impl SparseMatrix {
    pub fn from_row_support(cols: usize, row_support: Vec<Vec<usize>>) -> Self {
        let mut col_support = vec![Vec::new(); cols];
        for (i, row) in row_support.iter().enumerate() {
            for &j in row {
                col_support[j].push(i);
            }
        }
        Self {
            rows: row_support.len(),
            cols,
            row_support,
            col_support,
        }
    }

    pub fn from_col_support(rows: usize, col_support: Vec<Vec<usize>>) -> Self {
        let mut row_support = vec![Vec::new(); rows];
        for (j, col) in col_support.iter().enumerate() {
            for &i in col {
                row_support[i].push(j);
            }
        }
        Self {
            rows,
            cols: col_support.len(),
            row_support,
            col_support,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_support[i]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[usize] {
        &self.col_support[j]
    }

    pub fn nnz(&self) -> usize {
        self.row_support.iter().map(Vec::len).sum()
    }

    /// Syndrome of an error given by its set columns.
    pub fn syndrome_of(&self, error: &BinaryVector) -> BinaryVector {
        let mut s = BinaryVector::zeros(self.rows);
        for j in error.iter_ones() {
            for &i in &self.col_support[j] {
                s.flip(i);
            }
        }
        s
    }

    pub fn to_dense(&self) -> BinaryMatrix {
        BinaryMatrix::from_row_support(self.rows, self.cols, &self.row_support)
            .expect("sparse matrix indices are in range")
    }
}

/// A row space in reduced echelon form, for fast membership and reduction.
#[derive(Clone, Debug)]
pub struct RowSpace {
    cols: usize,
    basis: Vec<BinaryVector>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(m: &BinaryMatrix) -> Self {
        let mut reduced = m.clone();
        let pivots = reduced.eliminate(None);
        let basis = (0..pivots.len()).map(|i| reduced.row(i)).collect();
        Self {
            cols: m.cols(),
            basis,
            pivots,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Reduces `v` modulo the row space. The result is zero iff `v` is in it,
    /// and two vectors reduce to the same result iff they differ by an element.
    pub fn reduce(&self, v: &BinaryVector) -> BinaryVector {
        let mut r = v.clone();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(b);
            }
        }
        r
    }

    pub fn contains(&self, v: &BinaryVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the space. Returns false if it was already contained.
    pub fn insert(&mut self, v: &BinaryVector) -> bool {
        let r = self.reduce(v);
        let Some(p) = r.iter_ones().next() else {
            return false;
        };
        for b in &mut self.basis {
            if b.get(p) {
                b.xor_assign(&r);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.basis.insert(at, r);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain Gaussian elimination on `Vec<Vec<u8>>`, kept apart from the
    /// packed implementation.
    pub(crate) fn naive_rank(rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            if let Some(p) = (rank..m.len()).find(|&r| m[r][c] == 1) {
                m.swap(p, rank);
                for r in 0..m.len() {
                    if r != rank && m[r][c] == 1 {
                        for k in 0..cols {
                            m[r][k] ^= m[rank][k];
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    fn to_u8(m: &BinaryMatrix) -> Vec<Vec<u8>> {
        (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m.get(i, j) as u8).collect())
            .collect()
    }

    const EQ4A: &str = "100100\n010010\n001001\n100100\n010010\n001001";
    const EQ4B: &str = "100100\n010010\n001001\n010100\n001010\n100001";

    #[test]
    fn rank_of_printed_classical_matrices() {
        let a = BinaryMatrix::parse_rows(EQ4A).unwrap();
        let b = BinaryMatrix::parse_rows(EQ4B).unwrap();
        assert_eq!(naive_rank(&to_u8(&a)), 3);
        assert_eq!(a.rank(), 3);
        assert_eq!(b.rank(), 5);
        assert_eq!(BinaryMatrix::zeros(4, 4).rank(), 0);
    }

    #[test]
    fn rref_examples() {
        let id = BinaryMatrix::identity(3);
        let r = id.rref();
        assert_eq!(r.reduced, id);
        assert_eq!(r.pivot_cols, vec![0, 1, 2]);

        let a = BinaryMatrix::parse_rows(EQ4A).unwrap();
        assert_eq!(a.rref().pivot_cols.len(), 3);

        let ones = BinaryMatrix::parse_rows("1111\n1111").unwrap();
        let r = ones.rref();
        assert_eq!(r.reduced.row(0).weight(), 4);
        assert!(r.reduced.row(1).is_zero());
    }

    #[test]
    fn nullspace_examples() {
        let b = BinaryMatrix::parse_rows(EQ4B).unwrap();
        let basis = b.nullspace_basis();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0], BinaryVector::ones(6));

        assert!(BinaryMatrix::identity(5).nullspace_basis().is_empty());
        assert_eq!(BinaryMatrix::zeros(2, 3).nullspace_basis().len(), 3);
    }

    #[test]
    fn matmul_and_matvec_examples() {
        let id = BinaryMatrix::identity(4);
        let v = BinaryVector::from_support(4, [1, 3]);
        assert_eq!(id.matvec(&v).unwrap(), v);
        let m = BinaryMatrix::parse_rows("1011\n0110").unwrap();
        assert!(m.matvec(&BinaryVector::zeros(4)).unwrap().is_zero());
        assert!(matches!(
            m.matvec(&BinaryVector::zeros(3)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(m.matmul(&m).is_err());
        assert_eq!(m.matmul(&id).unwrap(), m);
    }

    #[test]
    fn in_rowspace_examples() {
        let m = BinaryMatrix::parse_rows("1100\n0110").unwrap();
        assert!(m.in_rowspace(&m.row(1)).unwrap());
        assert!(m.in_rowspace(&BinaryVector::zeros(4)).unwrap());
        assert!(m.in_rowspace(&BinaryVector::from_support(4, [0, 2])).unwrap());
        assert!(!m.in_rowspace(&BinaryVector::from_support(4, [3])).unwrap());
    }

    #[test]
    fn rowspace_insert_tracks_dimension() {
        let mut space = RowSpace::new(&BinaryMatrix::zeros(0, 5));
        assert!(space.insert(&BinaryVector::from_support(5, [0, 1])));
        assert!(space.insert(&BinaryVector::from_support(5, [1, 2])));
        assert!(!space.insert(&BinaryVector::from_support(5, [0, 2])));
        assert_eq!(space.dim(), 2);
        assert!(space.contains(&BinaryVector::from_support(5, [0, 2])));
    }

    #[test]
    fn alist_and_json_round_trip() {
        let m = BinaryMatrix::parse_rows("10010\n00000\n01101").unwrap();
        let text = m.to_alist_string();
        assert_eq!(text, "3 5\n0 3\n\n1 2 4\n");
        assert_eq!(BinaryMatrix::read_alist(text.as_bytes()).unwrap(), m);
        let json = serde_json::to_string(&m.to_json()).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(BinaryMatrix::from_json(&back).unwrap(), m);
        assert!(BinaryMatrix::read_alist("2 3\n2 1\n".as_bytes()).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = BinaryMatrix> {
        (1usize..12, 1usize..80).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r).prop_map(
                move |bits| {
                    let rows: Vec<BinaryVector> =
                        bits.iter().map(|b| BinaryVector::from_bools(b)).collect();
                    BinaryMatrix::from_rows(c, &rows)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn rank_matches_transpose_and_naive(m in arb_matrix()) {
            let r = m.rank();
            prop_assert_eq!(r, m.transpose().rank());
            prop_assert_eq!(r, naive_rank(&to_u8(&m)));
            prop_assert!(r <= m.rows().min(m.cols()));
            prop_assert_eq!(m.transpose().transpose(), m);
        }

        #[test]
        fn nullspace_is_kernel_and_independent(m in arb_matrix()) {
            let basis = m.nullspace_basis();
            prop_assert_eq!(basis.len(), m.cols() - m.rank());
            for v in &basis {
                prop_assert!(m.matvec(v).unwrap().is_zero());
            }
            if !basis.is_empty() {
                prop_assert_eq!(BinaryMatrix::from_rows(m.cols(), &basis).rank(), basis.len());
            }
        }

        #[test]
        fn rref_is_consistent_and_idempotent(m in arb_matrix()) {
            let r = m.rref();
            prop_assert_eq!(r.transform.matmul(&m).unwrap(), r.reduced.clone());
            prop_assert!(r.pivot_cols.windows(2).all(|w| w[0] < w[1]));
            let again = r.reduced.rref();
            prop_assert_eq!(again.reduced, r.reduced);
        }

        #[test]
        fn vector_laws(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let v = BinaryVector::from_bools(&bits);
            prop_assert_eq!(v.weight(), bits.iter().filter(|&&b| b).count());
            prop_assert!((&v ^ &v).is_zero());
        }
    }
}
