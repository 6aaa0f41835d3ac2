//! Vectors and matrices over F2, and the group GL_n(F2).
//!
//! Everything uses the row-vector convention: a matrix acts on a vector by
//! right multiplication, `a ↦ aA`. A vector of dimension n is identified
//! with its canonical index `Σ a_i·2^(i-1)`, i.e. coordinate 1 is the least
//! significant bit. Enumeration of GL_n follows ascending canonical index
//! row by row, so the identity matrix is always enumerated first.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for structural vector/matrix operations.
pub const MAX_DIM: usize = 20;

/// Default cap on full GL_n enumeration (GL_5 already has 9 999 360 elements).
pub const GL_ENUM_CAP: usize = 5;

/// Largest n for which |GL_n| fits in a u128.
pub const GL_ORDER_MAX_N: usize = 11;

fn check_dim(what: &'static str, n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionRange {
            what,
            value: n,
            min: 1,
            max: MAX_DIM,
        });
    }
    Ok(())
}

/// A row vector in {0,1}^n. Coordinate i (1-based) is bit i-1 of `bits`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    n: usize,
    bits: u32,
}

impl BitVec {
    /// The zero vector of dimension n.
    pub fn zero(n: usize) -> Result<Self> {
        check_dim("BitVec", n)?;
        Ok(Self { n, bits: 0 })
    }

    /// Build from the canonical index `Σ a_i·2^(i-1)`.
    pub fn from_index(n: usize, index: u32) -> Result<Self> {
        check_dim("BitVec", n)?;
        if n < 32 && index >> n != 0 {
            return Err(Error::DimensionRange {
                what: "BitVec index",
                value: index as usize,
                min: 0,
                max: (1usize << n) - 1,
            });
        }
        Ok(Self { n, bits: index })
    }

    /// Standard basis vector e_i (i is 1-based).
    pub fn unit(n: usize, i: usize) -> Result<Self> {
        check_dim("BitVec", n)?;
        if i == 0 || i > n {
            return Err(Error::DimensionRange {
                what: "unit coordinate",
                value: i,
                min: 1,
                max: n,
            });
        }
        Ok(Self { n, bits: 1 << (i - 1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical index of this vector.
    pub fn index(&self) -> u32 {
        self.bits
    }

    /// Coordinate a_i for 1-based i.
    pub fn coord(&self, i: usize) -> bool {
        debug_assert!(i >= 1 && i <= self.n);
        self.bits >> (i - 1) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Parse from a string of '0'/'1' characters, coordinate 1 first.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.len();
        check_dim("BitVec", n)?;
        let mut bits = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => {
                    return Err(Error::MatrixFormat {
                        msg: format!("invalid character {c:?} in vector {s:?}"),
                    })
                }
            }
        }
        Ok(Self { n, bits })
    }

    /// XOR (addition over F2). Both vectors must share a dimension.
    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(BitVec {
            n: self.n,
            bits: self.bits ^ other.bits,
        })
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.bits >> i & 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self)
    }
}

impl Serialize for BitVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitVec::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// An n×n matrix over F2, stored as n packed rows.
///
/// `rows[i]` packs row i+1 with the same bit convention as [`BitVec`], so
/// entry (i, j) of the paper's A (1-based) is `rows[i-1] >> (j-1) & 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    rows: Vec<u32>,
}

impl BitMatrix {
    pub fn identity(n: usize) -> Result<Self> {
        check_dim("BitMatrix", n)?;
        Ok(Self {
            n,
            rows: (0..n).map(|i| 1 << i).collect(),
        })
    }

    /// All-zero n×n matrix. Not an element of GL_n; kept representable so
    /// callers can print it, but `invert` rejects it.
    pub fn zero(n: usize) -> Result<Self> {
        check_dim("BitMatrix", n)?;
        Ok(Self { n, rows: vec![0; n] })
    }

    pub fn from_rows(rows: &[BitVec]) -> Result<Self> {
        let n = rows.len();
        check_dim("BitMatrix", n)?;
        for r in rows {
            if r.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.n(),
                });
            }
        }
        Ok(Self {
            n,
            rows: rows.iter().map(|r| r.index()).collect(),
        })
    }

    pub(crate) fn from_packed_rows(n: usize, rows: Vec<u32>) -> Self {
        debug_assert_eq!(rows.len(), n);
        Self { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec {
            n: self.n,
            bits: self.rows[i],
        }
    }

    pub fn rows(&self) -> Vec<BitVec> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    pub(crate) fn packed_rows(&self) -> &[u32] {
        &self.rows
    }

    /// Parse the row-string format, e.g. `"110;010;001"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(';').collect();
        let n = parts.len();
        check_dim("BitMatrix", n)?;
        let mut rows = Vec::with_capacity(n);
        for (i, part) in parts.iter().enumerate() {
            if part.len() != n {
                return Err(Error::MatrixFormat {
                    msg: format!(
                        "row {} has {} entries, expected {} ({s:?} is not square)",
                        i + 1,
                        part.len(),
                        n
                    ),
                });
            }
            rows.push(BitVec::parse(part)?.index());
        }
        Ok(Self { n, rows })
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Matrix product AB under the row convention: row i of AB is (row i of A)·B.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|&r| mul_packed(r, &other.rows))
            .collect();
        Ok(BitMatrix { n: self.n, rows })
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut rows = vec![0u32; self.n];
        for (i, &r) in self.rows.iter().enumerate() {
            for (j, row) in rows.iter_mut().enumerate() {
                *row |= (r >> j & 1) << i;
            }
        }
        BitMatrix { n: self.n, rows }
    }

    /// Inverse by Gauss–Jordan elimination. Fails with `NotInvertible` for
    /// singular matrices (including the zero matrix).
    pub fn invert(&self) -> Result<BitMatrix> {
        match invert_packed(self.n, &self.rows) {
            Some(rows) => Ok(BitMatrix { n: self.n, rows }),
            None => Err(Error::NotInvertible { n: self.n }),
        }
    }

    pub fn is_invertible(&self) -> bool {
        rank_packed(self.n, self.rows.iter().copied()) == self.n
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            for j in 0..self.n {
                write!(f, "{}", r >> j & 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix({})", self)
    }
}

impl Serialize for BitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitMatrix::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Row-vector times matrix: `v ↦ vA`, the XOR of the rows of A selected by v.
#[inline]
pub(crate) fn mul_packed(v: u32, rows: &[u32]) -> u32 {
    let mut acc = 0;
    let mut bits = v;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        acc ^= rows[i];
        bits &= bits - 1;
    }
    acc
}

/// The row-vector product aA over F2.
pub fn vec_mat_mul(a: &BitVec, m: &BitMatrix) -> Result<BitVec> {
    if a.n() != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n(),
            got: a.n(),
        });
    }
    Ok(BitVec {
        n: a.n(),
        bits: mul_packed(a.index(), &m.rows),
    })
}

pub(crate) fn invert_packed(n: usize, rows: &[u32]) -> Option<Vec<u32>> {
    let mut a = [0u32; MAX_DIM];
    let mut inv = [0u32; MAX_DIM];
    if invert_into(n, rows, &mut a, &mut inv) {
        Some(inv[..n].to_vec())
    } else {
        None
    }
}

/// Allocation-free Gauss–Jordan on [A | I] into caller-provided buffers.
/// Returns false for singular input; on success `inv[..n]` holds A⁻¹.
pub(crate) fn invert_into(n: usize, rows: &[u32], a: &mut [u32], inv: &mut [u32]) -> bool {
    a[..n].copy_from_slice(&rows[..n]);
    for (i, w) in inv.iter_mut().enumerate().take(n) {
        *w = 1 << i;
    }
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| a[r] >> col & 1 == 1) else {
            return false;
        };
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..n {
            if r != col && a[r] >> col & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    true
}

/// Rank of a family of packed vectors, by echelon insertion.
pub(crate) fn rank_packed(_n: usize, vs: impl IntoIterator<Item = u32>) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for v in vs {
        let mut v = v;
        for &b in &basis {
            let pivot = 31 - b.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
        }
    }
    basis.len()
}

/// Rank over F2 of the span of `vs`.
pub fn rank_of(vs: &[BitVec]) -> Result<usize> {
    if vs.is_empty() {
        return Ok(0);
    }
    let n = vs[0].n();
    for v in vs {
        if v.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.n(),
            });
        }
    }
    Ok(rank_packed(n, vs.iter().map(|v| v.index())))
}

/// |GL_n(F2)| = (2^n − 1)(2^n − 2)(2^n − 4)···(2^n − 2^(n−1)), exactly.
///
/// Exceeds u128 for n > 11, which is rejected rather than silently wrapped.
pub fn gl_order(n: usize) -> Result<u128> {
    if n == 0 || n > 30 {
        return Err(Error::DimensionRange {
            what: "gl_order",
            value: n,
            min: 1,
            max: 30,
        });
    }
    if n > GL_ORDER_MAX_N {
        return Err(Error::Overflow {
            what: "gl_order",
            value: n,
            max: GL_ORDER_MAX_N,
        });
    }
    let full = 1u128 << n;
    let mut acc = 1u128;
    for i in 0..n {
        acc = acc.checked_mul(full - (1u128 << i)).expect("bound checked");
    }
    Ok(acc)
}

/// Streaming enumerator over GL_n(F2) in the canonical deterministic order:
/// rows are chosen in ascending canonical index, each row being the next
/// vector outside the span of the rows already placed. The identity matrix
/// is therefore element 0 of the stream.
pub struct GlEnumerator {
    n: usize,
    size: u32,
    rows: Vec<u32>,
    // Span members of rows[..k] for the current prefix, in insertion layers:
    // members[..1<<k] is exactly span(rows[..k]). Layer k occupies
    // members[1<<k .. 1<<(k+1)] (the coset shifted by rows[k]).
    members: Vec<u32>,
    in_span: Vec<u64>,
    started: bool,
    done: bool,
}

impl GlEnumerator {
    fn new(n: usize) -> Self {
        let size = 1u32 << n;
        let words = ((size as usize) + 63) / 64;
        let mut in_span = vec![0u64; words];
        in_span[0] = 1; // the zero vector is always in the span
        GlEnumerator {
            n,
            size,
            rows: Vec::with_capacity(n),
            members: vec![0],
            in_span,
            started: false,
            done: false,
        }
    }

    #[inline]
    fn spanned(&self, v: u32) -> bool {
        self.in_span[(v >> 6) as usize] >> (v & 63) & 1 == 1
    }

    fn push_row(&mut self, v: u32) {
        let layer = self.members.len();
        for i in 0..layer {
            let m = self.members[i] ^ v;
            self.members.push(m);
            self.in_span[(m >> 6) as usize] |= 1 << (m & 63);
        }
        self.rows.push(v);
    }

    /// Remove the most recently placed row, returning it.
    fn pop_row(&mut self) -> u32 {
        let v = self.rows.pop().expect("pop on empty prefix");
        let half = self.members.len() / 2;
        for &m in &self.members[half..] {
            self.in_span[(m >> 6) as usize] &= !(1 << (m & 63));
        }
        self.members.truncate(half);
        v
    }

    /// Smallest vector not in the current span with index ≥ `from`.
    fn next_free(&self, from: u32) -> Option<u32> {
        (from..self.size).find(|&v| !self.spanned(v))
    }

    /// Advance to the next matrix; returns its packed rows, or None when done.
    pub fn next_packed(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            while self.rows.len() < self.n {
                let v = self.next_free(0).expect("proper subspace leaves free vectors");
                self.push_row(v);
            }
            return Some(&self.rows);
        }
        loop {
            if self.rows.is_empty() {
                self.done = true;
                return None;
            }
            let last = self.pop_row();
            if let Some(v) = self.next_free(last + 1) {
                self.push_row(v);
                while self.rows.len() < self.n {
                    let w = self.next_free(0).expect("proper subspace leaves free vectors");
                    self.push_row(w);
                }
                return Some(&self.rows);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Iterator adapter over [`GlEnumerator`] yielding owned matrices.
pub struct GlIter {
    inner: GlEnumerator,
}

impl Iterator for GlIter {
    type Item = BitMatrix;

    fn next(&mut self) -> Option<BitMatrix> {
        let n = self.inner.n;
        self.inner
            .next_packed()
            .map(|rows| BitMatrix::from_packed_rows(n, rows.to_vec()))
    }
}

/// Enumerate every element of GL_n exactly once, under the default cap.
pub fn enumerate_gl(n: usize) -> Result<GlIter> {
    enumerate_gl_with_cap(n, GL_ENUM_CAP)
}

/// Enumerate GL_n with an explicit cap on n.
pub fn enumerate_gl_with_cap(n: usize, cap: usize) -> Result<GlIter> {
    check_dim("enumerate_gl", n)?;
    if n > cap {
        return Err(Error::Capacity {
            what: "full GL enumeration",
            requested: n,
            cap,
        });
    }
    Ok(GlIter {
        inner: GlEnumerator::new(n),
    })
}

pub(crate) fn gl_enumerator_unchecked(n: usize) -> GlEnumerator {
    GlEnumerator::new(n)
}

/// Uniformly random element of GL_n, deterministic for a given seed.
///
/// Row i is drawn uniformly from the 2^n − 2^(i−1) vectors outside the span
/// of the earlier rows, by rejection against an incremental echelon basis.
pub fn sample_gl(n: usize, seed: u64) -> Result<BitMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_gl_with(n, &mut rng)
}

/// As [`sample_gl`] but drawing from a caller-supplied RNG stream.
pub fn sample_gl_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<BitMatrix> {
    check_dim("sample_gl", n)?;
    let size = 1u32 << n;
    let mut rows = Vec::with_capacity(n);
    let mut basis: Vec<u32> = Vec::new();
    while rows.len() < n {
        let v = rng.random_range(0..size);
        let mut red = v;
        for &b in &basis {
            let pivot = 31 - b.leading_zeros();
            if red >> pivot & 1 == 1 {
                red ^= b;
            }
        }
        if red != 0 {
            rows.push(v);
            basis.push(red);
        }
    }
    Ok(BitMatrix { n, rows })
}

/// Some M ∈ GL_n with src_i · M = dst_i for every i.
///
/// Both families must be linearly independent. They are extended to bases
/// with the lexicographically smallest completing vectors (ascending
/// canonical index), and M = S⁻¹·D for the extended row matrices, which
/// makes the result deterministic.
pub fn mapping_matrix(src: &[BitVec], dst: &[BitVec], n: usize) -> Result<BitMatrix> {
    check_dim("mapping_matrix", n)?;
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            got: dst.len(),
        });
    }
    if src.len() > n {
        return Err(Error::DimensionRange {
            what: "mapping_matrix family size",
            value: src.len(),
            min: 0,
            max: n,
        });
    }
    for v in src.iter().chain(dst) {
        if v.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.n(),
            });
        }
    }
    let s_ext = extend_to_basis("src", src, n)?;
    let d_ext = extend_to_basis("dst", dst, n)?;
    let s = BitMatrix { n, rows: s_ext };
    let d = BitMatrix { n, rows: d_ext };
    let m = s.invert()?.mul(&d)?;
    debug_assert!(src
        .iter()
        .zip(dst)
        .all(|(a, b)| mul_packed(a.index(), &m.rows) == b.index()));
    Ok(m)
}

fn extend_to_basis(which: &'static str, vs: &[BitVec], n: usize) -> Result<Vec<u32>> {
    let mut rows: Vec<u32> = vs.iter().map(|v| v.index()).collect();
    let rank = rank_packed(n, rows.iter().copied());
    if rank != rows.len() {
        return Err(Error::DependentVectors {
            which,
            rank,
            len: rows.len(),
        });
    }
    let size = 1u32 << n;
    let mut cand = 1u32;
    while rows.len() < n {
        debug_assert!(cand < size);
        if rank_packed(n, rows.iter().copied().chain([cand])) > rows.len() {
            rows.push(cand);
        }
        cand += 1;
    }
    Ok(rows)
}
