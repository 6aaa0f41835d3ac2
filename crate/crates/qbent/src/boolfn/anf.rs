//! Algebraic normal form: parsing, printing, and the binary Möbius
//! transform between truth tables and ANF coefficient vectors.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr := term ('+' term)*
//! term := '0' | '1' | var ('*' var)*
//! var  := 'x' integer in 1..=n
//! ```
//!
//! A '0' term contributes nothing; it exists so the printed form of the
//! zero function ("0") parses back. Duplicate monomials cancel (XOR
//! semantics).

use std::fmt;

use crate::error::{Error, Result};
use crate::BoolFunc;

/// A canonical XOR-of-monomials expression.
///
/// Monomials are stored as variable-set masks (bit i−1 ⇔ x_i present; the
/// empty mask is the constant 1) and kept sorted by descending degree, then
/// by the variable sequence, which is the order [`AnfExpr::to_string`]
/// prints.
#[derive(Clone, PartialEq, Eq)]
pub struct AnfExpr {
    n: usize,
    monomials: Vec<u32>,
}

impl AnfExpr {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Monomials as sets of 1-based variable indices, in canonical order.
    pub fn terms(&self) -> Vec<Vec<usize>> {
        self.monomials.iter().map(|&m| vars_of(m)).collect()
    }

    /// Largest monomial size; 0 for constants and the zero expression.
    pub fn degree(&self) -> usize {
        self.monomials
            .iter()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Parse the expression grammar; errors carry a byte position.
    pub fn parse(text: &str, n: usize) -> Result<AnfExpr> {
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let mut present: Vec<u32> = Vec::new();
        let toggle = |m: u32, present: &mut Vec<u32>| match present.iter().position(|&x| x == m) {
            Some(i) => {
                present.swap_remove(i);
            }
            None => present.push(m),
        };

        skip_ws(bytes, &mut pos);
        if pos == bytes.len() {
            return Err(Error::AnfSyntax {
                pos,
                msg: "empty expression; expected a term".into(),
            });
        }
        loop {
            match parse_term(bytes, &mut pos, n)? {
                Some(mask) => toggle(mask, &mut present),
                None => {} // a '0' term
            }
            skip_ws(bytes, &mut pos);
            if pos == bytes.len() {
                break;
            }
            if bytes[pos] != b'+' {
                return Err(Error::AnfSyntax {
                    pos,
                    msg: format!("expected '+' or end of input, found {:?}", bytes[pos] as char),
                });
            }
            pos += 1;
            skip_ws(bytes, &mut pos);
        }
        let mut monomials = present;
        monomials.sort_by(|a, b| canonical_cmp(*a, *b));
        Ok(AnfExpr { n, monomials })
    }

    /// Evaluate into a truth table: bit at a is XOR over monomials m with
    /// m ⊆ a. Computed by the packed Möbius transform of the coefficient
    /// vector.
    pub fn to_bool_func(&self) -> BoolFunc {
        let mut f = BoolFunc::constant(self.n, false).expect("dimension validated at parse");
        for &m in &self.monomials {
            f.set(m, true);
        }
        let mut words = f.words().to_vec();
        mobius_in_place(&mut words, self.n);
        BoolFunc::from_words(self.n, words)
    }
}

impl fmt::Display for AnfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0");
        }
        for (i, &m) in self.monomials.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if m == 0 {
                write!(f, "1")?;
            } else {
                for (j, v) in vars_of(m).into_iter().enumerate() {
                    if j > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "x{v}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AnfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnfExpr({})", self)
    }
}

impl serde::Serialize for AnfExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn vars_of(mask: u32) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        out.push(bits.trailing_zeros() as usize + 1);
        bits &= bits - 1;
    }
    out
}

/// Descending degree, then lexicographic on the variable sequence, so
/// `x1*x2+x3` prints in that order and `x1*x4` sorts before `x2*x3`.
fn canonical_cmp(a: u32, b: u32) -> std::cmp::Ordering {
    b.count_ones()
        .cmp(&a.count_ones())
        .then_with(|| vars_of(a).cmp(&vars_of(b)))
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

/// One term; `Ok(None)` is the '0' term.
fn parse_term(bytes: &[u8], pos: &mut usize, n: usize) -> Result<Option<u32>> {
    skip_ws(bytes, pos);
    if *pos >= bytes.len() {
        return Err(Error::AnfSyntax {
            pos: *pos,
            msg: "expected a term".into(),
        });
    }
    match bytes[*pos] {
        b'0' => {
            *pos += 1;
            Ok(None)
        }
        b'1' => {
            *pos += 1;
            Ok(Some(0))
        }
        b'x' => {
            let mut mask = parse_var(bytes, pos, n)?;
            loop {
                skip_ws(bytes, pos);
                if *pos < bytes.len() && bytes[*pos] == b'*' {
                    *pos += 1;
                    skip_ws(bytes, pos);
                    if *pos >= bytes.len() || bytes[*pos] != b'x' {
                        return Err(Error::AnfSyntax {
                            pos: *pos,
                            msg: "expected a variable after '*'".into(),
                        });
                    }
                    mask |= parse_var(bytes, pos, n)?;
                } else {
                    break;
                }
            }
            Ok(Some(mask))
        }
        c => Err(Error::AnfSyntax {
            pos: *pos,
            msg: format!("expected '0', '1' or a variable, found {:?}", c as char),
        }),
    }
}

fn parse_var(bytes: &[u8], pos: &mut usize, n: usize) -> Result<u32> {
    debug_assert_eq!(bytes[*pos], b'x');
    let start = *pos;
    *pos += 1;
    let digits_start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == digits_start {
        return Err(Error::AnfSyntax {
            pos: digits_start,
            msg: "expected a variable index after 'x'".into(),
        });
    }
    let text = std::str::from_utf8(&bytes[digits_start..*pos]).expect("ascii digits");
    let var: usize = text.parse().map_err(|_| Error::AnfSyntax {
        pos: digits_start,
        msg: format!("variable index {text:?} out of range"),
    })?;
    if var == 0 || var > n {
        return Err(Error::AnfVarRange { var, n, pos: start });
    }
    Ok(1 << (var - 1))
}

/// In-place binary Möbius transform on a packed 2^n-bit vector.
///
/// Maps an ANF coefficient vector to its truth table; it is an involution,
/// so the same routine maps truth tables back to coefficients.
pub(crate) fn mobius_in_place(words: &mut [u64], n: usize) {
    // Variables inside one 64-bit word.
    const MASKS: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0F0F_0F0F_0F0F_0F0F,
        0x00FF_00FF_00FF_00FF,
        0x0000_FFFF_0000_FFFF,
        0x0000_0000_FFFF_FFFF,
    ];
    for i in 0..n.min(6) {
        let shift = 1 << i;
        for w in words.iter_mut() {
            *w ^= (*w & MASKS[i]) << shift;
        }
    }
    // Variables spanning words: XOR the lower block into the upper one.
    for i in 6..n {
        let stride = 1usize << (i - 6);
        let mut base = 0;
        while base < words.len() {
            for j in base..base + stride {
                words[j + stride] ^= words[j];
            }
            base += stride * 2;
        }
    }
}

pub(crate) fn from_bool_func(f: &BoolFunc) -> AnfExpr {
    let n = f.n();
    let mut words = f.words().to_vec();
    mobius_in_place(&mut words, n);
    let coeffs = BoolFunc::from_words(n, words);
    let mut monomials = coeffs.support_indices();
    monomials.sort_by(|a, b| canonical_cmp(*a, *b));
    AnfExpr { n, monomials }
}

pub(crate) fn degree_of(f: &BoolFunc) -> usize {
    let mut words = f.words().to_vec();
    mobius_in_place(&mut words, f.n());
    words
        .iter()
        .enumerate()
        .flat_map(|(wi, &w)| {
            let base = (wi as u32) << 6;
            (0..64).filter_map(move |b| {
                if w >> b & 1 == 1 {
                    Some((base | b).count_ones() as usize)
                } else {
                    None
                }
            })
        })
        .max()
        .unwrap_or(0)
}
