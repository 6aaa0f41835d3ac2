//! Boolean functions as packed truth tables.
//!
//! A function of dimension n is stored as 2^n truth-table bits; the bit at
//! integer index k is the value at the vector whose canonical index is k
//! (coordinate 1 = least significant bit, matching [`crate::gf2`]).
//!
//! The interchange hex format packs the bits f(0), f(1), …, f(2^n−1)
//! big-endian: the first listed bit is the most significant bit of the
//! first hex digit, so `x1*x2+x3` at n=3 (table 0,0,0,1,1,1,1,0) prints as
//! `"1E"`.

mod anf;

pub use anf::AnfExpr;

use std::fmt;

use crate::error::{Error, Result};
use crate::gf2::{mul_packed, BitMatrix, BitVec, MAX_DIM};

/// A Boolean function of dimension n, as a packed 2^n-bit truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolFunc {
    n: usize,
    words: Vec<u64>,
}

/// Degree, affineness and balancedness in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Classification {
    pub degree: usize,
    pub is_affine: bool,
    pub is_balanced: bool,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionRange {
            what: "BoolFunc",
            value: n,
            min: 1,
            max: MAX_DIM,
        });
    }
    Ok(())
}

fn word_count(n: usize) -> usize {
    if n >= 6 {
        1 << (n - 6)
    } else {
        1
    }
}

/// Mask of the valid bits in the (single) word of a function with n < 6.
fn tail_mask(n: usize) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

impl BoolFunc {
    /// The constant-`value` function of dimension n.
    pub fn constant(n: usize, value: bool) -> Result<Self> {
        check_dim(n)?;
        let words = if value {
            let mut w = vec![u64::MAX; word_count(n)];
            *w.last_mut().unwrap() &= tail_mask(n);
            w
        } else {
            vec![0; word_count(n)]
        };
        Ok(Self { n, words })
    }

    /// Build from a predicate on canonical indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(u32) -> bool) -> Result<Self> {
        let mut out = Self::constant(n, false)?;
        for k in 0..1u32 << n {
            if f(k) {
                out.set(k, true);
            }
        }
        Ok(out)
    }

    /// Build from explicit truth-table bits, f(0) first.
    pub fn from_tt_bits(n: usize, bits: &[bool]) -> Result<Self> {
        check_dim(n)?;
        if bits.len() != 1 << n {
            return Err(Error::TtHex {
                msg: format!("expected {} truth table bits, got {}", 1 << n, bits.len()),
            });
        }
        Self::from_fn(n, |k| bits[k as usize])
    }

    pub(crate) fn from_words(n: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), word_count(n));
        debug_assert!(n >= 6 || words[0] & !tail_mask(n) == 0);
        Self { n, words }
    }

    /// The function with the given support mask, for n ≤ 6.
    pub(crate) fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 6);
        debug_assert_eq!(mask & !tail_mask(n), 0);
        Self {
            n,
            words: vec![mask],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of inputs, 2^n.
    pub fn table_len(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn get(&self, index: u32) -> bool {
        self.words[(index >> 6) as usize] >> (index & 63) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, index: u32, value: bool) {
        let w = &mut self.words[(index >> 6) as usize];
        if value {
            *w |= 1 << (index & 63);
        } else {
            *w &= !(1 << (index & 63));
        }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Hamming weight: number of inputs mapped to 1.
    pub fn weight(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Imbalance I_f = Σ_a (−1)^f(a) = 2^n − 2·weight. Zero iff balanced.
    pub fn imbalance(&self) -> i64 {
        (1i64 << self.n) - 2 * self.weight() as i64
    }

    pub fn is_balanced(&self) -> bool {
        self.weight() == 1 << (self.n - 1)
    }

    /// Pointwise XOR (sum over F2).
    pub fn xor(&self, other: &BoolFunc) -> Result<BoolFunc> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BoolFunc { n: self.n, words })
    }

    /// The complement f+1.
    pub fn complement(&self) -> BoolFunc {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        *words.last_mut().unwrap() &= tail_mask(self.n);
        BoolFunc { n: self.n, words }
    }

    /// Hamming distance d(f,g) = wt(f+g).
    pub fn distance(&self, other: &BoolFunc) -> Result<u64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum())
    }

    /// Correlation W(f,g) = 2^n − 2·d(f,g); always even.
    pub fn correlation(&self, other: &BoolFunc) -> Result<i64> {
        Ok((1i64 << self.n) - 2 * self.distance(other)? as i64)
    }

    /// Full Walsh–Hadamard spectrum via the in-place butterfly, O(n·2^n).
    ///
    /// Entry at index(v) is W(f)(v) = Σ_a (−1)^(f(a)+v·a); the entry at
    /// v = 0 is the imbalance.
    pub fn walsh_spectrum(&self) -> Vec<i64> {
        let m = 1usize << self.n;
        let mut w: Vec<i64> = (0..m)
            .map(|k| if self.get(k as u32) { -1 } else { 1 })
            .collect();
        let mut half = 1;
        while half < m {
            let mut start = 0;
            while start < m {
                for j in start..start + half {
                    let a = w[j];
                    let b = w[j + half];
                    w[j] = a + b;
                    w[j + half] = a - b;
                }
                start += half * 2;
            }
            half <<= 1;
        }
        w
    }

    /// True iff every Walsh coefficient has magnitude 2^(n/2).
    /// Odd dimensions are never bent.
    pub fn is_bent(&self) -> bool {
        if self.n % 2 != 0 {
            return false;
        }
        let target = 1i64 << (self.n / 2);
        self.walsh_spectrum().iter().all(|&w| w.abs() == target)
    }

    /// Degree of the algebraic normal form; constants have degree 0.
    pub fn degree(&self) -> usize {
        anf::degree_of(self)
    }

    /// Degree, affineness (degree ≤ 1) and balancedness.
    pub fn classify(&self) -> Classification {
        let degree = self.degree();
        Classification {
            degree,
            is_affine: degree <= 1,
            is_balanced: self.is_balanced(),
        }
    }

    /// Composition with a change of basis: f_A(a) = f(aA).
    ///
    /// A must be invertible, so that f_A is f reparametrized by a bijection
    /// and the weight is preserved; singular A is rejected.
    pub fn compose(&self, a: &BitMatrix) -> Result<BoolFunc> {
        if self.n != a.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.n(),
            });
        }
        if !a.is_invertible() {
            return Err(Error::NotInvertible { n: a.n() });
        }
        let rows = a.packed_rows();
        let mut out = BoolFunc::constant(self.n, false)?;
        for x in 0..1u32 << self.n {
            if self.get(mul_packed(x, rows)) {
                out.set(x, true);
            }
        }
        Ok(out)
    }

    /// Support: every vector mapped to 1, ascending by canonical index.
    pub fn support(&self) -> Vec<BitVec> {
        self.support_indices()
            .into_iter()
            .map(|k| BitVec::from_index(self.n, k).expect("index in range"))
            .collect()
    }

    pub fn support_indices(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.weight() as usize);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                out.push((wi as u32) << 6 | bits.trailing_zeros());
                bits &= bits - 1;
            }
        }
        out
    }

    /// Parse the algebraic-normal-form expression syntax, e.g. `"x1*x2+x3"`.
    pub fn parse_anf(text: &str, n: usize) -> Result<BoolFunc> {
        check_dim(n)?;
        let expr = AnfExpr::parse(text, n)?;
        Ok(expr.to_bool_func())
    }

    /// The unique algebraic normal form of this function.
    pub fn to_anf(&self) -> AnfExpr {
        anf::from_bool_func(self)
    }

    /// Big-endian hex interchange form (see module docs).
    pub fn to_tt_hex(&self) -> String {
        let m = 1usize << self.n;
        let digits = m.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u8;
            for j in 0..4 {
                let k = d * 4 + j;
                if k < m && self.get(k as u32) {
                    nibble |= 1 << (3 - j);
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap().to_ascii_uppercase());
        }
        out
    }

    /// Parse the hex interchange form; the dimension must be given.
    pub fn from_tt_hex(hex: &str, n: usize) -> Result<BoolFunc> {
        check_dim(n)?;
        let m = 1usize << n;
        let digits = m.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::TtHex {
                msg: format!(
                    "expected {digits} hex digits for n={n}, got {} in {hex:?}",
                    hex.len()
                ),
            });
        }
        let mut out = BoolFunc::constant(n, false)?;
        for (d, c) in hex.chars().enumerate() {
            let nibble = c.to_digit(16).ok_or_else(|| Error::TtHex {
                msg: format!("invalid hex digit {c:?} at position {d}"),
            })? as u8;
            for j in 0..4 {
                let k = d * 4 + j;
                let bit = nibble >> (3 - j) & 1 == 1;
                if k < m {
                    if bit {
                        out.set(k as u32, true);
                    }
                } else if bit {
                    return Err(Error::TtHex {
                        msg: format!("bit {k} set beyond the 2^{n} table in {hex:?}"),
                    });
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BoolFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolFunc(n={}, tt={})", self.n, self.to_tt_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::sample_gl_with;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_func(n: usize, rng: &mut impl Rng) -> BoolFunc {
        BoolFunc::from_fn(n, |_| rng.random()).unwrap()
    }

    /// Direct 2^2n-time Walsh coefficient, the oracle for the butterfly.
    fn naive_walsh_at(f: &BoolFunc, v: u32) -> i64 {
        (0..1u32 << f.n())
            .map(|a| {
                let dot = (a & v).count_ones() & 1;
                if f.get(a) as u32 ^ dot == 0 {
                    1
                } else {
                    -1
                }
            })
            .sum()
    }

    #[test]
    fn parse_anf_worked_example() {
        // x1*x2+x3 at n=3: table 0,0,0,1,1,1,1,0 → hex "1E".
        let f = BoolFunc::parse_anf("x1*x2+x3", 3).unwrap();
        let expected = [false, false, false, true, true, true, true, false];
        for (k, &b) in expected.iter().enumerate() {
            assert_eq!(f.get(k as u32), b, "f({k})");
        }
        assert_eq!(f.to_tt_hex(), "1E");
    }

    #[test]
    fn parse_anf_constants_and_cancellation() {
        let one = BoolFunc::parse_anf("1", 2).unwrap();
        assert_eq!(one, BoolFunc::constant(2, true).unwrap());
        let zero = BoolFunc::parse_anf("x1+x1", 2).unwrap();
        assert_eq!(zero, BoolFunc::constant(2, false).unwrap());
    }

    #[test]
    fn weight_cases() {
        assert_eq!(BoolFunc::constant(3, false).unwrap().weight(), 0);
        assert_eq!(BoolFunc::parse_anf("x1", 3).unwrap().weight(), 4);
        for n in 2..=8 {
            let q = BoolFunc::parse_anf("x1*x2", n).unwrap();
            assert_eq!(q.weight(), 1 << (n - 2), "wt(x1x2) at n={n}");
        }
    }

    #[test]
    fn imbalance_cases() {
        let f = BoolFunc::parse_anf("x3", 3).unwrap();
        assert_eq!(f.imbalance(), 0);
        assert!(f.is_balanced());
        // Weight-1 function at n=3.
        let q = BoolFunc::from_fn(3, |k| k == 5).unwrap();
        assert_eq!(q.imbalance(), 6);
        assert_eq!(BoolFunc::constant(3, false).unwrap().imbalance(), 8);
    }

    #[test]
    fn distance_and_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let f = random_func(4, &mut rng);
            assert_eq!(f.distance(&f).unwrap(), 0);
            assert_eq!(f.correlation(&f).unwrap(), 16);
            let g = f.complement();
            assert_eq!(f.distance(&g).unwrap(), 16);
            assert_eq!(f.correlation(&g).unwrap(), -16);
        }
    }

    #[test]
    fn walsh_spectrum_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=5 {
            for _ in 0..20 {
                let f = random_func(n, &mut rng);
                let spec = f.walsh_spectrum();
                for v in 0..1u32 << n {
                    assert_eq!(spec[v as usize], naive_walsh_at(&f, v), "n={n} v={v}");
                }
            }
        }
    }

    #[test]
    fn walsh_spectrum_constant() {
        let f = BoolFunc::constant(4, false).unwrap();
        let spec = f.walsh_spectrum();
        assert_eq!(spec[0], 16);
        assert!(spec[1..].iter().all(|&w| w == 0));
    }

    #[test]
    fn parseval_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..=8 {
            for _ in 0..20 {
                let f = random_func(n, &mut rng);
                let sum: i64 = f.walsh_spectrum().iter().map(|w| w * w).sum();
                assert_eq!(sum, 1 << (2 * n));
            }
        }
    }

    #[test]
    fn bent_fixture_and_odd_dimensions() {
        let f = BoolFunc::parse_anf("x1*x2+x3*x4", 4).unwrap();
        let spec = f.walsh_spectrum();
        assert!(spec.iter().all(|&w| w.abs() == 4));
        assert!(f.is_bent());
        assert!(!BoolFunc::parse_anf("x1", 4).unwrap().is_bent());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            assert!(!random_func(3, &mut rng).is_bent());
            assert!(!random_func(5, &mut rng).is_bent());
        }
    }

    #[test]
    fn classify_cases() {
        let c = BoolFunc::parse_anf("x1*x2+x3", 3).unwrap().classify();
        assert_eq!(
            c,
            Classification {
                degree: 2,
                is_affine: false,
                is_balanced: true
            }
        );
        let c = BoolFunc::parse_anf("x2", 3).unwrap().classify();
        assert_eq!(
            c,
            Classification {
                degree: 1,
                is_affine: true,
                is_balanced: true
            }
        );
        assert_eq!(BoolFunc::constant(3, true).unwrap().degree(), 0);
        assert_eq!(BoolFunc::constant(3, false).unwrap().degree(), 0);
    }

    #[test]
    fn no_balanced_degree_3_at_n3() {
        // Exhaustive: 70 balanced functions at n=3, none of degree 3;
        // 35 with f(0)=0 split 7 affine / 28 of degree 2.
        let mut balanced = 0;
        let mut zero_fixed = 0;
        let mut deg1 = 0;
        let mut deg2 = 0;
        for tt in 0u64..256 {
            let f = BoolFunc::from_mask(3, tt);
            if !f.is_balanced() {
                continue;
            }
            balanced += 1;
            assert!(f.degree() <= 2, "balanced degree-3 function found: {f:?}");
            if !f.get(0) {
                zero_fixed += 1;
                match f.degree() {
                    1 => deg1 += 1,
                    2 => deg2 += 1,
                    d => panic!("unexpected degree {d}"),
                }
            }
        }
        assert_eq!(balanced, 70);
        assert_eq!(zero_fixed, 35);
        assert_eq!(deg1, 7);
        assert_eq!(deg2, 28);
    }

    #[test]
    fn compose_identity_and_stabilizer() {
        let q = BoolFunc::parse_anf("x1*x2+x3", 3).unwrap();
        let e = BitMatrix::identity(3).unwrap();
        assert_eq!(q.compose(&e).unwrap(), q);
        for s in [
            "100;010;001",
            "010;100;001",
            "111;010;001",
            "111;100;001",
            "010;111;001",
            "100;111;001",
        ] {
            let a = BitMatrix::parse(s).unwrap();
            assert_eq!(q.compose(&a).unwrap(), q, "stabilizer matrix {s}");
        }
    }

    #[test]
    fn compose_rejects_singular() {
        let q = BoolFunc::parse_anf("x1*x2+x3", 3).unwrap();
        let z = BitMatrix::zero(3).unwrap();
        assert!(matches!(q.compose(&z), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn compose_composes_reversed() {
        // (f_A)_B = f_{BA}.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let f = random_func(4, &mut rng);
            let a = sample_gl_with(4, &mut rng).unwrap();
            let b = sample_gl_with(4, &mut rng).unwrap();
            let lhs = f.compose(&a).unwrap().compose(&b).unwrap();
            let rhs = f.compose(&b.mul(&a).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(lhs.weight(), f.weight());
            assert_eq!(lhs.degree(), f.degree());
        }
    }

    #[test]
    fn support_cases() {
        assert!(BoolFunc::constant(3, false).unwrap().support().is_empty());
        let q = BoolFunc::parse_anf("x1*x2", 3).unwrap();
        let supp: Vec<String> = q.support().iter().map(|v| v.to_string()).collect();
        assert_eq!(supp, ["110", "111"]);
    }

    #[test]
    fn support_transforms_by_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let q = random_func(4, &mut rng);
            let a = sample_gl_with(4, &mut rng).unwrap();
            let inv = a.invert().unwrap();
            let composed = q.compose(&a).unwrap();
            let mut expected: Vec<u32> = q
                .support_indices()
                .iter()
                .map(|&s| mul_packed(s, inv.packed_rows()))
                .collect();
            expected.sort_unstable();
            assert_eq!(composed.support_indices(), expected);
        }
    }

    #[test]
    fn tt_hex_roundtrip_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=7 {
            for _ in 0..20 {
                let f = random_func(n, &mut rng);
                let hex = f.to_tt_hex();
                assert_eq!(BoolFunc::from_tt_hex(&hex, n).unwrap(), f);
            }
        }
        assert_eq!(
            BoolFunc::from_tt_hex("1e", 3).unwrap(),
            BoolFunc::parse_anf("x1*x2+x3", 3).unwrap()
        );
        assert!(BoolFunc::from_tt_hex("1E0", 3).is_err());
        assert!(BoolFunc::from_tt_hex("1G", 3).is_err());
        // n=1 uses one digit with the low two bits required to be clear.
        assert_eq!(BoolFunc::from_tt_hex("4", 1).unwrap().weight(), 1);
        assert!(BoolFunc::from_tt_hex("5", 1).is_err());
    }

    #[test]
    fn anf_roundtrip_exhaustive_n3() {
        for tt in 0u64..256 {
            let f = BoolFunc::from_mask(3, tt);
            let anf = f.to_anf();
            assert_eq!(anf.to_bool_func(), f, "tt={tt:02x} anf={anf}");
            let reparsed = BoolFunc::parse_anf(&anf.to_string(), 3).unwrap();
            assert_eq!(reparsed, f);
        }
    }
}
