//! The q-transform over GL_n(F2): coefficients, spectra, the ρ_q bound,
//! classification predicates, exact moment identities, and stabilizers.
//!
//! For f, q of dimension n and A ∈ GL_n, the coefficient is
//! `W_q(f)(A) = Σ_a (−1)^(f(a)+q(aA)) = W(f, q_A)`, and the coefficient at
//! the zero matrix is the imbalance I_f. All arithmetic is exact; no
//! floating point is used anywhere in this module.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boolfn::BoolFunc;
use crate::error::{Error, Result};
use crate::gf2::{self, mul_packed, BitMatrix};

/// Weights up to this use the support-intersection coefficient path.
pub const SUPPORT_FAST_PATH_THRESHOLD: u64 = 64;

/// Largest |stabilizer| for which product-closure is verified pairwise.
const CLOSURE_CHECK_LIMIT: usize = 4096;

fn check_same_dim(f: &BoolFunc, q: &BoolFunc) -> Result<usize> {
    if f.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: q.n(),
        });
    }
    Ok(f.n())
}

fn check_full_enum(what: &'static str, n: usize) -> Result<()> {
    let cap = full_enum_cap();
    if n > cap {
        return Err(Error::Capacity {
            what,
            requested: n,
            cap,
        });
    }
    Ok(())
}

/// Effective cap on full GL_n enumeration: the built-in default, lowered
/// (never raised) by the QBENT_MAX_N environment variable.
pub fn full_enum_cap() -> usize {
    use std::sync::OnceLock;
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        let env = std::env::var("QBENT_MAX_N")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(gf2::GL_ENUM_CAP);
        env.min(gf2::GL_ENUM_CAP)
    })
}

// ---------------------------------------------------------------------------
// ρ_q

/// The bound ρ_q together with the exact ratio it is the ceiling-root of.
///
/// ρ_q is the least integer r ≥ 0 with r²·(2^n−1) ≥ 2^(2n) − I_q², i.e. the
/// ceiling of sqrt((2^(2n) − I_q²)/(2^n − 1)) computed entirely in integer
/// arithmetic. `exact` is set when ρ_q² equals the ratio exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RhoParams {
    pub n: usize,
    /// Effective weight after reflecting wt > 2^(n−1) to 2^n − wt.
    pub wt_q: u64,
    pub i_q: i64,
    pub rho: u64,
    pub ratio_num: u64,
    pub ratio_den: u64,
    pub exact: bool,
}

/// Compute ρ_q from the dimension and the weight of q.
///
/// Weights above 2^(n−1) are first reflected to 2^n − wt (the complement
/// has the negated imbalance, so the bound is unchanged). Constant q
/// (weight 0 or 2^n) is rejected.
pub fn rho(n: usize, wt_q: u64) -> Result<RhoParams> {
    if !(3..=30).contains(&n) {
        return Err(Error::DimensionRange {
            what: "rho",
            value: n,
            min: 3,
            max: 30,
        });
    }
    let full = 1u64 << n;
    if wt_q > full {
        return Err(Error::WeightRange {
            n,
            wt: wt_q,
            reason: "weight exceeds 2^n",
        });
    }
    let wt = wt_q.min(full - wt_q);
    if wt == 0 {
        return Err(Error::ConstantQ);
    }
    let i_q = (full - 2 * wt) as i64;
    let num = (1u128 << (2 * n)) - (i_q as u128) * (i_q as u128);
    let den = (full - 1) as u128;
    let mut r = (num / den).isqrt();
    while r * r * den < num {
        r += 1;
    }
    debug_assert!(r * r * den >= num);
    debug_assert!(r == 0 || (r - 1) * (r - 1) * den < num);
    Ok(RhoParams {
        n,
        wt_q: wt,
        i_q,
        rho: r as u64,
        ratio_num: num as u64,
        ratio_den: den as u64,
        exact: r * r * den == num,
    })
}

/// The magnitudes |W_q(f)(A)| permitted for balanced f when wt(q) = w:
/// {0, 4, …, 2w} for even w, {2, 6, …, 2w} for odd w.
pub fn allowed_values(n: usize, wt_q: u64) -> Result<Vec<u64>> {
    if n == 0 || n > 30 {
        return Err(Error::DimensionRange {
            what: "allowed_values",
            value: n,
            min: 1,
            max: 30,
        });
    }
    if wt_q > 1 << (n - 1) {
        return Err(Error::WeightRange {
            n,
            wt: wt_q,
            reason: "weight must be at most 2^(n-1)",
        });
    }
    let start = if wt_q % 2 == 0 { 0 } else { 2 };
    Ok((start..=2 * wt_q).step_by(4).collect())
}

// ---------------------------------------------------------------------------
// Coefficients

/// q-transform coefficient W_q(f)(A) = Σ_a (−1)^(f(a)+q(aA)).
///
/// Small-support weights take the intersection path
/// W = 2^n − 2wt(f) − 2wt(q) + 4·|supp(f) ∩ supp(q)·A⁻¹|; larger weights
/// fall back to direct summation. Both paths agree (see tests).
pub fn q_coeff(f: &BoolFunc, q: &BoolFunc, a: &BitMatrix) -> Result<i64> {
    q_coeff_with_threshold(f, q, a, SUPPORT_FAST_PATH_THRESHOLD)
}

/// As [`q_coeff`], with an explicit fast-path weight threshold.
pub fn q_coeff_with_threshold(
    f: &BoolFunc,
    q: &BoolFunc,
    a: &BitMatrix,
    threshold: u64,
) -> Result<i64> {
    let n = check_same_dim(f, q)?;
    if a.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n(),
        });
    }
    let wt_q = q.weight();
    let min_side = wt_q.min((1u64 << n) - wt_q);
    if min_side <= threshold {
        let inv = a.invert()?;
        // Work with whichever of q, 1+q has the small support; complementing
        // q negates every coefficient.
        let (small, sign) = if wt_q <= (1u64 << n) - wt_q {
            (q.clone(), 1)
        } else {
            (q.complement(), -1)
        };
        let hits = small
            .support_indices()
            .iter()
            .filter(|&&s| f.get(mul_packed(s, inv.packed_rows())))
            .count() as i64;
        let w = (1i64 << n) - 2 * f.weight() as i64 - 2 * small.weight() as i64 + 4 * hits;
        Ok(sign * w)
    } else {
        if !a.is_invertible() {
            return Err(Error::NotInvertible { n });
        }
        Ok(q_coeff_naive(f, q, a))
    }
}

/// Direct 2^n-point summation; the independent reference path.
pub(crate) fn q_coeff_naive(f: &BoolFunc, q: &BoolFunc, a: &BitMatrix) -> i64 {
    let rows = a.packed_rows();
    let mut acc = 0i64;
    for x in 0..1u32 << f.n() {
        if f.get(x) == q.get(mul_packed(x, rows)) {
            acc += 1;
        } else {
            acc -= 1;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Enumerated-scan plumbing

/// Stream GL_n in canonical order, handing the visitor the matrix index,
/// its packed rows, and the support mask supp(q)·A⁻¹ (as a 2^n-bit word).
/// The visitor returns false to stop early. Requires n ≤ 6.
pub(crate) fn for_each_support_mask(
    q: &BoolFunc,
    mut visit: impl FnMut(u64, &[u32], u64) -> bool,
) -> u64 {
    let n = q.n();
    debug_assert!(n <= 6);
    let supp = q.support_indices();
    let mut en = gf2::gl_enumerator_unchecked(n);
    let mut a_buf = [0u32; 8];
    let mut inv = [0u32; 8];
    let mut k = 0u64;
    while let Some(rows) = en.next_packed() {
        let ok = gf2::invert_into(n, rows, &mut a_buf, &mut inv);
        debug_assert!(ok, "enumerated matrix must be invertible");
        let mut mask = 0u64;
        for &s in &supp {
            mask |= 1 << mul_packed(s, &inv[..n]);
        }
        if !visit(k, rows, mask) {
            return k + 1;
        }
        k += 1;
    }
    k
}

/// Precomputed per-matrix support masks for one q over all of GL_n, for
/// scanning many candidate f against the same q.
pub(crate) struct SupportScan {
    pub n: usize,
    pub wt_q: u64,
    pub masks: Vec<u64>,
}

impl SupportScan {
    pub fn build(q: &BoolFunc) -> Result<SupportScan> {
        let n = q.n();
        check_full_enum("support scan", n)?;
        let order = gf2::gl_order(n).expect("n <= 5") as usize;
        let mut masks = Vec::with_capacity(order);
        for_each_support_mask(q, |_, _, mask| {
            masks.push(mask);
            true
        });
        debug_assert_eq!(masks.len(), order);
        Ok(SupportScan {
            n,
            wt_q: q.weight(),
            masks,
        })
    }

    /// Signed coefficient for the candidate truth-table word at matrix k.
    #[inline]
    pub fn coeff(&self, k: usize, f_word: u64, f_weight: u64) -> i64 {
        let base = (1i64 << self.n) - 2 * f_weight as i64 - 2 * self.wt_q as i64;
        base + 4 * (f_word & self.masks[k]).count_ones() as i64
    }
}

/// The k-th matrix of the canonical GL_n enumeration.
pub(crate) fn nth_gl_matrix(n: usize, k: u64) -> BitMatrix {
    let mut en = gf2::gl_enumerator_unchecked(n);
    for _ in 0..k {
        en.next_packed().expect("index within |GL_n|");
    }
    let rows = en.next_packed().expect("index within |GL_n|").to_vec();
    BitMatrix::from_packed_rows(n, rows)
}

// ---------------------------------------------------------------------------
// Spectra

/// How a spectrum is gathered: the full group, or a seeded uniform sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumMode {
    Full,
    Sampled { count: u64, seed: u64 },
}

/// Aggregate of the q-transform coefficients of f over GL_n.
#[derive(Debug, Clone, Serialize)]
pub struct QSpectrum {
    pub mode: SpectrumMode,
    /// Count of matrices attaining each signed coefficient value.
    pub histogram: BTreeMap<i64, u64>,
    pub max_abs: u64,
    /// First matrix (in enumeration or sample order) attaining max_abs.
    pub witness_max: BitMatrix,
    /// First matrix attaining |W| = ρ_q, when ρ_q is defined and attained.
    pub witness_rho: Option<BitMatrix>,
    /// The A = 0 coefficient: the imbalance of f.
    pub zero_coeff: i64,
}

/// Gather the spectrum of f with respect to q.
///
/// Full mode enumerates GL_n (n up to the enumeration cap); sampled mode
/// draws seeded uniform matrices for any n ≤ 20 and is deterministic for a
/// given seed. Witnesses are tie-broken by enumeration (or sample) index.
pub fn q_spectrum(f: &BoolFunc, q: &BoolFunc, mode: SpectrumMode) -> Result<QSpectrum> {
    let n = check_same_dim(f, q)?;
    let rho_target = rho(n, q.weight()).ok().map(|r| r.rho);
    let mut histogram = BTreeMap::new();
    let mut max_abs = 0u64;
    let mut witness_max: Option<BitMatrix> = None;
    let mut witness_rho: Option<BitMatrix> = None;

    match mode {
        SpectrumMode::Full => {
            check_full_enum("full spectrum", n)?;
            let f_word = f.words()[0];
            let base = (1i64 << n) - 2 * f.weight() as i64 - 2 * q.weight() as i64;
            for_each_support_mask(q, |_, rows, mask| {
                let w = base + 4 * (f_word & mask).count_ones() as i64;
                *histogram.entry(w).or_insert(0u64) += 1;
                let a = w.unsigned_abs();
                if witness_max.is_none() || a > max_abs {
                    max_abs = a;
                    witness_max = Some(BitMatrix::from_packed_rows(n, rows.to_vec()));
                }
                if witness_rho.is_none() && Some(a) == rho_target {
                    witness_rho = Some(BitMatrix::from_packed_rows(n, rows.to_vec()));
                }
                true
            });
        }
        SpectrumMode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::Usage {
                    msg: "sampled spectrum needs at least one sample".into(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let a = gf2::sample_gl_with(n, &mut rng)?;
                let w = q_coeff(f, q, &a)?;
                *histogram.entry(w).or_insert(0u64) += 1;
                let abs = w.unsigned_abs();
                if witness_max.is_none() || abs > max_abs {
                    max_abs = abs;
                    witness_max = Some(a.clone());
                }
                if witness_rho.is_none() && Some(abs) == rho_target {
                    witness_rho = Some(a);
                }
            }
        }
    }

    Ok(QSpectrum {
        mode,
        histogram,
        max_abs,
        witness_max: witness_max.expect("at least one matrix scanned"),
        witness_rho,
        zero_coeff: f.imbalance(),
    })
}

// ---------------------------------------------------------------------------
// Classification predicates

/// Outcome of the q-bent test, with the first violation found.
#[derive(Debug, Clone, Serialize)]
pub struct QBentVerdict {
    pub holds: bool,
    pub violation: Option<QBentViolation>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QBentViolation {
    /// q-bent functions require even n.
    OddDimension,
    /// |I_f| ≠ 2^(n/2): the coefficient at the zero matrix fails.
    ZeroMatrix { imbalance: i64 },
    /// A GL_n coefficient of the wrong magnitude.
    Matrix { matrix: BitMatrix, coeff: i64 },
}

/// Is f q-bent: |W_q(f)(A)| = 2^(n/2) for all A ∈ GL_n ∪ {0}?
///
/// q must be balanced. Odd n is immediately false. The zero matrix is
/// tested first, then GL_n in enumeration order with early abort.
pub fn is_q_bent(f: &BoolFunc, q: &BoolFunc) -> Result<QBentVerdict> {
    let n = check_same_dim(f, q)?;
    if !q.is_balanced() {
        return Err(Error::UnbalancedQ { wt: q.weight() });
    }
    if n % 2 != 0 {
        return Ok(QBentVerdict {
            holds: false,
            violation: Some(QBentViolation::OddDimension),
        });
    }
    let target = 1i64 << (n / 2);
    if f.imbalance().abs() != target {
        return Ok(QBentVerdict {
            holds: false,
            violation: Some(QBentViolation::ZeroMatrix {
                imbalance: f.imbalance(),
            }),
        });
    }
    check_full_enum("q-bent check", n)?;
    let f_word = f.words()[0];
    let base = (1i64 << n) - 2 * f.weight() as i64 - 2 * q.weight() as i64;
    let mut violation = None;
    for_each_support_mask(q, |_, rows, mask| {
        let w = base + 4 * (f_word & mask).count_ones() as i64;
        if w.abs() != target {
            violation = Some(QBentViolation::Matrix {
                matrix: BitMatrix::from_packed_rows(n, rows.to_vec()),
                coeff: w,
            });
            return false;
        }
        true
    });
    Ok(QBentVerdict {
        holds: violation.is_none(),
        violation,
    })
}

/// Why a q-nearly-bent test came out false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NotNearlyBentReason {
    NotBalanced,
    CoefficientExceedsRho,
}

/// Outcome of the q-nearly-bent test.
///
/// When the verdict holds, `witness_rho` carries a matrix attaining
/// |W| = ρ_q, which must exist for a q-nearly bent function; when it fails
/// on a coefficient, `violation` is the first offender in enumeration
/// order (the identity is enumerated first).
#[derive(Debug, Clone, Serialize)]
pub struct NearlyBentVerdict {
    pub holds: bool,
    pub rho: RhoParams,
    pub witness_rho: Option<BitMatrix>,
    pub violation: Option<CoeffViolation>,
    pub reason: Option<NotNearlyBentReason>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoeffViolation {
    pub matrix: BitMatrix,
    pub coeff: i64,
}

/// Is f q-nearly bent: f balanced and |W_q(f)(A)| ≤ ρ_q for all A ∈ GL_n?
pub fn is_q_nearly_bent(f: &BoolFunc, q: &BoolFunc) -> Result<NearlyBentVerdict> {
    let n = check_same_dim(f, q)?;
    let rho_params = rho(n, q.weight())?;
    if !f.is_balanced() {
        return Ok(NearlyBentVerdict {
            holds: false,
            rho: rho_params,
            witness_rho: None,
            violation: None,
            reason: Some(NotNearlyBentReason::NotBalanced),
        });
    }
    check_full_enum("q-nearly-bent check", n)?;
    let f_word = f.words()[0];
    let base = (1i64 << n) - 2 * f.weight() as i64 - 2 * q.weight() as i64;
    let bound = rho_params.rho;
    let mut witness_rho: Option<BitMatrix> = None;
    let mut violation: Option<CoeffViolation> = None;
    for_each_support_mask(q, |_, rows, mask| {
        let w = base + 4 * (f_word & mask).count_ones() as i64;
        let a = w.unsigned_abs();
        if a > bound {
            violation = Some(CoeffViolation {
                matrix: BitMatrix::from_packed_rows(n, rows.to_vec()),
                coeff: w,
            });
            return false;
        }
        if a == bound && witness_rho.is_none() {
            witness_rho = Some(BitMatrix::from_packed_rows(n, rows.to_vec()));
        }
        true
    });
    if let Some(v) = violation {
        return Ok(NearlyBentVerdict {
            holds: false,
            rho: rho_params,
            witness_rho: None,
            violation: Some(v),
            reason: Some(NotNearlyBentReason::CoefficientExceedsRho),
        });
    }
    Ok(NearlyBentVerdict {
        holds: true,
        rho: rho_params,
        witness_rho,
        violation: None,
        reason: None,
    })
}

/// Outcome of the q-plateaued test over the full GL_n spectrum.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlateauStatus {
    /// Every coefficient lies in {0, ±λ} for this unique positive λ.
    Plateaued { lambda: u64 },
    /// Every coefficient is zero, so λ is undefined.
    Degenerate,
    /// More than one nonzero magnitude occurs.
    NotPlateaued { magnitudes: Vec<u64> },
}

/// Is the full GL_n spectrum of f contained in {0, ±λ} for one positive λ?
pub fn is_q_plateaued(f: &BoolFunc, q: &BoolFunc) -> Result<PlateauStatus> {
    let n = check_same_dim(f, q)?;
    check_full_enum("q-plateaued check", n)?;
    let f_word = f.words()[0];
    let base = (1i64 << n) - 2 * f.weight() as i64 - 2 * q.weight() as i64;
    let mut magnitudes: Vec<u64> = Vec::new();
    for_each_support_mask(q, |_, _, mask| {
        let w = base + 4 * (f_word & mask).count_ones() as i64;
        let a = w.unsigned_abs();
        if a != 0 && !magnitudes.contains(&a) {
            magnitudes.push(a);
        }
        true
    });
    magnitudes.sort_unstable();
    Ok(match magnitudes.len() {
        0 => PlateauStatus::Degenerate,
        1 => PlateauStatus::Plateaued {
            lambda: magnitudes[0],
        },
        _ => PlateauStatus::NotPlateaued { magnitudes },
    })
}

// ---------------------------------------------------------------------------
// Moments

/// An exact rational in lowest terms, serialized as decimal strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRatio(pub Ratio<i128>);

impl Serialize for ExactRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ExactRatio", 2)?;
        st.serialize_field("num", &self.0.numer().to_string())?;
        st.serialize_field("den", &self.0.denom().to_string())?;
        st.end()
    }
}

/// Exact second moments of the q-transform of f over GL_n, and whether the
/// two published moment identities hold.
///
/// With N = |GL_n| and balanced q: identity 1 is
/// Σ_A W² = N·(2^(2n) − I_f²)/(2^n − 1); identity 2 weights the sum by
/// ω(A) = (2^n−1)/(2^n·N) and ω(0) = 1/2^n and asserts E[W²] = 2^n. The
/// two are algebraically equivalent.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    /// Σ_{A ∈ GL_n} W_q(f)(A)², exactly.
    pub sum_sq: u64,
    /// E′[W²] = sum_sq / N.
    pub eprime: ExactRatio,
    /// E[W²] under ω, including the zero-matrix term I_f²/2^n.
    pub e: ExactRatio,
    pub eq1_holds: bool,
    pub eq2_holds: bool,
}

/// Exact full-enumeration second moments. q must be balanced.
pub fn second_moments(f: &BoolFunc, q: &BoolFunc) -> Result<MomentReport> {
    let n = check_same_dim(f, q)?;
    if !q.is_balanced() {
        return Err(Error::UnbalancedQ { wt: q.weight() });
    }
    check_full_enum("second moments", n)?;
    let f_word = f.words()[0];
    let base = (1i64 << n) - 2 * f.weight() as i64 - 2 * q.weight() as i64;
    let mut sum_sq: u128 = 0;
    for_each_support_mask(q, |_, _, mask| {
        let w = base + 4 * (f_word & mask).count_ones() as i64;
        sum_sq += (w * w) as u128;
        true
    });
    let order = gf2::gl_order(n).expect("n <= 5") as i128;
    let full = 1i128 << n;
    let i_f = f.imbalance() as i128;
    let sum = sum_sq as i128;

    let eprime = Ratio::new(sum, order);
    let rhs1 = Ratio::new(order * ((1i128 << (2 * n)) - i_f * i_f), full - 1);
    let eq1_holds = Ratio::from_integer(sum) == rhs1;

    let e = Ratio::new(full - 1, full * order) * Ratio::from_integer(sum)
        + Ratio::new(i_f * i_f, full);
    let eq2_holds = e == Ratio::from_integer(full);

    Ok(MomentReport {
        sum_sq: sum_sq as u64,
        eprime: ExactRatio(eprime),
        e: ExactRatio(e),
        eq1_holds,
        eq2_holds,
    })
}

// ---------------------------------------------------------------------------
// Stabilizer and orbit

/// The stabilizer subgroup of q under A: q ↦ q_A, with the orbit size by
/// Lagrange. The returned set is verified closed under inverses (always)
/// and products (up to a size limit).
#[derive(Debug, Clone, Serialize)]
pub struct Stabilizer {
    pub matrices: Vec<BitMatrix>,
    pub order: u64,
    pub orbit_size: u64,
}

/// All A ∈ GL_n with q(aA) = q(a) for every a.
pub fn stabilizer(q: &BoolFunc) -> Result<Stabilizer> {
    let n = q.n();
    check_full_enum("stabilizer", n)?;
    // q_A = q iff supp(q)·A = supp(q): test by transforming the support
    // forward, no inversion needed.
    let supp = q.support_indices();
    let q_mask = q.words()[0];
    let mut matrices = Vec::new();
    let mut en = gf2::gl_enumerator_unchecked(n);
    while let Some(rows) = en.next_packed() {
        let mut mask = 0u64;
        for &s in &supp {
            mask |= 1 << mul_packed(s, rows);
        }
        if mask == q_mask {
            matrices.push(BitMatrix::from_packed_rows(n, rows.to_vec()));
        }
    }
    let order = matrices.len() as u64;
    let group_order = gf2::gl_order(n).expect("n <= 5") as u64;
    debug_assert_eq!(group_order % order, 0, "Lagrange violated");
    verify_subgroup(n, &matrices)?;
    Ok(Stabilizer {
        matrices,
        order,
        orbit_size: group_order / order,
    })
}

/// Pack an n×n matrix into a single sortable key (n ≤ 6).
fn matrix_key(n: usize, m: &BitMatrix) -> u64 {
    m.packed_rows()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &r)| acc | (r as u64) << (i * n))
}

fn verify_subgroup(n: usize, matrices: &[BitMatrix]) -> Result<()> {
    use std::collections::HashSet;
    let keys: HashSet<u64> = matrices.iter().map(|m| matrix_key(n, m)).collect();
    for m in matrices {
        let inv = m.invert()?;
        if !keys.contains(&matrix_key(n, &inv)) {
            return Err(Error::Usage {
                msg: "stabilizer not closed under inverse".into(),
            });
        }
    }
    if matrices.len() <= CLOSURE_CHECK_LIMIT {
        for a in matrices {
            for b in matrices {
                if !keys.contains(&matrix_key(n, &a.mul(b)?)) {
                    return Err(Error::Usage {
                        msg: "stabilizer not closed under product".into(),
                    });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{enumerate_gl, sample_gl_with};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn anf(s: &str, n: usize) -> BoolFunc {
        BoolFunc::parse_anf(s, n).unwrap()
    }

    fn random_func(n: usize, rng: &mut impl Rng) -> BoolFunc {
        BoolFunc::from_fn(n, |_| rng.random()).unwrap()
    }

    fn random_balanced(n: usize, rng: &mut impl Rng) -> BoolFunc {
        random_of_weight(n, 1 << (n - 1), rng)
    }

    fn random_of_weight(n: usize, w: usize, rng: &mut impl Rng) -> BoolFunc {
        let m = 1usize << n;
        let idx = rand::seq::index::sample(rng, m, w);
        let mut f = BoolFunc::constant(n, false).unwrap();
        for i in idx {
            f.set(i as u32, true);
        }
        f
    }

    #[test]
    fn rho_weight_one_is_two_exact() {
        for n in 3..=12 {
            let r = rho(n, 1).unwrap();
            assert_eq!(r.rho, 2, "n={n}");
            assert!(r.exact, "n={n}");
        }
    }

    #[test]
    fn rho_published_cells() {
        assert_eq!(rho(4, 3).unwrap().rho, 4);
        assert_eq!(rho(3, 2).unwrap().rho, 3);
        // Least r with 15r² ≥ 252 is 5 (the published small-weight table
        // prints 2 for this cell; the formula gives 5).
        assert_eq!(rho(4, 7).unwrap().rho, 5);
        // Least r with 511r² ≥ 262144 is 23 (printed as 24).
        assert_eq!(rho(9, 256).unwrap().rho, 23);
        assert_eq!(rho(9, 128).unwrap().rho, 20);
    }

    #[test]
    fn rho_reflects_large_weights() {
        let direct = rho(4, 6).unwrap();
        let reflected = rho(4, 10).unwrap();
        assert_eq!(direct, reflected);
        assert!(rho(4, 0).is_err());
        assert!(rho(4, 16).is_err());
        assert!(rho(2, 1).is_err());
    }

    #[test]
    fn rho_bracketing_lemma() {
        // (ρ−1)² < ratio ≤ ρ² in exact arithmetic, for all n ≤ 17.
        for n in 3..=17usize {
            for wt in 1..=(1u64 << (n - 1)) {
                let r = rho(n, wt).unwrap();
                let num = r.ratio_num as u128;
                let den = r.ratio_den as u128;
                let rr = r.rho as u128;
                assert!(rr * rr * den >= num, "upper bound n={n} wt={wt}");
                assert!((rr - 1) * (rr - 1) * den < num, "lower bound n={n} wt={wt}");
            }
        }
    }

    #[test]
    fn allowed_values_cases() {
        assert_eq!(allowed_values(5, 1).unwrap(), vec![2]);
        assert_eq!(allowed_values(4, 4).unwrap(), vec![0, 4, 8]);
        assert_eq!(allowed_values(5, 3).unwrap(), vec![2, 6]);
        assert!(allowed_values(4, 9).is_err());
    }

    #[test]
    fn q_coeff_self_and_complement() {
        let e = BitMatrix::identity(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let f = random_func(4, &mut rng);
            assert_eq!(q_coeff(&f, &f, &e).unwrap(), 16);
            assert_eq!(q_coeff(&f, &f.complement(), &e).unwrap(), -16);
        }
    }

    #[test]
    fn q_coeff_paths_agree() {
        // Support-intersection and direct-summation paths agree on random
        // instances.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10_000 {
            let n = rng.random_range(3..=4usize);
            let f = random_func(n, &mut rng);
            let q = random_func(n, &mut rng);
            let a = sample_gl_with(n, &mut rng).unwrap();
            let fast = q_coeff_with_threshold(&f, &q, &a, 64).unwrap();
            let naive = q_coeff_naive(&f, &q, &a);
            assert_eq!(fast, naive);
        }
    }

    #[test]
    fn q_coeff_duality() {
        // W_q(f)(A) = W_f(q)(A⁻¹).
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..2000 {
            let n = rng.random_range(3..=4usize);
            let f = random_func(n, &mut rng);
            let q = random_func(n, &mut rng);
            let a = sample_gl_with(n, &mut rng).unwrap();
            let lhs = q_coeff(&f, &q, &a).unwrap();
            let rhs = q_coeff(&q, &f, &a.invert().unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn q_coeff_rejects_singular_and_mismatch() {
        let f = anf("x1", 3);
        let z = BitMatrix::zero(3).unwrap();
        assert!(matches!(
            q_coeff(&f, &f, &z),
            Err(Error::NotInvertible { .. })
        ));
        let g = anf("x1", 4);
        let e = BitMatrix::identity(3).unwrap();
        assert!(q_coeff(&f, &g, &e).is_err());
    }

    #[test]
    fn spectrum_thm5_fixture() {
        // f = x3, q = x1x2+x3 at n=3: all 168 coefficients lie in {0, ±4}.
        let f = anf("x3", 3);
        let q = anf("x1*x2+x3", 3);
        let spec = q_spectrum(&f, &q, SpectrumMode::Full).unwrap();
        assert_eq!(spec.histogram.values().sum::<u64>(), 168);
        assert!(spec.histogram.keys().all(|w| [0i64, 4, -4].contains(w)));
        assert_eq!(spec.max_abs, 4);
        assert_eq!(spec.zero_coeff, 0);
        assert!(spec.witness_rho.is_some());
        // Spot-check the witness against the general coefficient path.
        assert_eq!(
            q_coeff(&f, &q, &spec.witness_max).unwrap().unsigned_abs(),
            4
        );
    }

    #[test]
    fn spectrum_weight_one_keys() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..5 {
            let q = random_of_weight(3, 1, &mut rng);
            let f = random_balanced(3, &mut rng);
            let spec = q_spectrum(&f, &q, SpectrumMode::Full).unwrap();
            assert!(spec.histogram.keys().all(|w| w.abs() == 2));
        }
    }

    #[test]
    fn spectrum_self_count_is_stabilizer_order() {
        let q = anf("x1*x2+x3", 3);
        let spec = q_spectrum(&q, &q, SpectrumMode::Full).unwrap();
        let stab = stabilizer(&q).unwrap();
        assert_eq!(spec.histogram[&8], stab.order);
    }

    #[test]
    fn spectrum_keys_always_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..10 {
            let f = random_func(4, &mut rng);
            let q = random_func(4, &mut rng);
            let spec = q_spectrum(&f, &q, SpectrumMode::Full).unwrap();
            assert!(spec.histogram.keys().all(|w| w % 2 == 0));
            assert_eq!(spec.histogram.values().sum::<u64>(), 20160);
        }
    }

    #[test]
    fn spectrum_sampled_deterministic() {
        let f = anf("x1*x2+x3*x4+x5", 6);
        let q = anf("x1*x6+x2", 6);
        let mode = SpectrumMode::Sampled {
            count: 500,
            seed: 99,
        };
        let s1 = q_spectrum(&f, &q, mode).unwrap();
        let s2 = q_spectrum(&f, &q, mode).unwrap();
        assert_eq!(s1.histogram, s2.histogram);
        assert_eq!(s1.witness_max, s2.witness_max);
        assert_eq!(s1.histogram.values().sum::<u64>(), 500);
        assert!(s1.histogram.keys().all(|w| w % 2 == 0));
    }

    #[test]
    fn spectrum_invariance_under_basis_change() {
        // The full multiset of coefficients of f equals that of f_B, and
        // that of f with q replaced by q_B.
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for n in 3..=4usize {
            for _ in 0..5 {
                let f = random_func(n, &mut rng);
                let q = random_func(n, &mut rng);
                let b = sample_gl_with(n, &mut rng).unwrap();
                let base = q_spectrum(&f, &q, SpectrumMode::Full).unwrap();
                let fb = q_spectrum(&f.compose(&b).unwrap(), &q, SpectrumMode::Full).unwrap();
                let qb = q_spectrum(&f, &q.compose(&b).unwrap(), SpectrumMode::Full).unwrap();
                assert_eq!(base.histogram, fb.histogram);
                assert_eq!(base.histogram, qb.histogram);
            }
        }
    }

    #[test]
    fn lemma1_containment_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for n in 3..=4usize {
            for w in 1..=(1u64 << (n - 1)) {
                let q = random_of_weight(n, w as usize, &mut rng);
                let f = random_balanced(n, &mut rng);
                let allowed = allowed_values(n, w).unwrap();
                let spec = q_spectrum(&f, &q, SpectrumMode::Full).unwrap();
                for (&val, _) in &spec.histogram {
                    assert!(
                        allowed.contains(&val.unsigned_abs()),
                        "n={n} w={w} saw {val}"
                    );
                }
            }
        }
    }

    #[test]
    fn q_bent_balanced_f_fails_at_zero() {
        let q = anf("x1*x2+x3", 4);
        let f = anf("x4", 4);
        let v = is_q_bent(&f, &q).unwrap();
        assert!(!v.holds);
        assert!(matches!(
            v.violation,
            Some(QBentViolation::ZeroMatrix { imbalance: 0 })
        ));
    }

    #[test]
    fn q_bent_odd_dimension() {
        let q = anf("x3", 3);
        let f = anf("x1", 3);
        let v = is_q_bent(&f, &q).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.violation, Some(QBentViolation::OddDimension)));
    }

    #[test]
    fn q_bent_linear_q_bent_f() {
        // For linear nonzero q, f is q-bent iff f is bent.
        let q = anf("x2", 4);
        let f = anf("x1*x2+x3*x4", 4);
        assert!(f.is_bent());
        let v = is_q_bent(&f, &q).unwrap();
        assert!(v.holds, "violation: {:?}", v.violation);
        let g = anf("x1*x2+x3", 4); // balanced, not bent
        assert!(!is_q_bent(&g, &q).unwrap().holds);
    }

    #[test]
    fn q_bent_requires_balanced_q() {
        let q = anf("x1*x2", 4);
        let f = anf("x1*x2+x3*x4", 4);
        assert!(matches!(
            is_q_bent(&f, &q),
            Err(Error::UnbalancedQ { wt: 4 })
        ));
    }

    #[test]
    fn nearly_bent_weight_one_always_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for n in 3..=4usize {
            for _ in 0..10 {
                let q = random_of_weight(n, 1, &mut rng);
                let f = random_balanced(n, &mut rng);
                let v = is_q_nearly_bent(&f, &q).unwrap();
                assert!(v.holds);
                assert_eq!(v.rho.rho, 2);
                let w = v.witness_rho.expect("rho witness must exist");
                assert_eq!(q_coeff(&f, &q, &w).unwrap().unsigned_abs(), 2);
            }
        }
    }

    #[test]
    fn nearly_bent_thm5_counterexample_and_witness() {
        let q = anf("x1*x2+x3", 3);
        // A balanced degree-2 f lies in the orbit of q, so some coefficient
        // reaches 8 > ρ = 4.
        let f = anf("x1*x3+x2", 3);
        assert!(f.is_balanced() && f.degree() == 2);
        let v = is_q_nearly_bent(&f, &q).unwrap();
        assert!(!v.holds);
        assert_eq!(v.rho.rho, 4);
        let viol = v.violation.unwrap();
        assert_eq!(viol.coeff.unsigned_abs(), 8);
        assert_eq!(q_coeff(&f, &q, &viol.matrix).unwrap(), viol.coeff);
        // While f = x3 stays within the bound on all 168 matrices.
        let f3 = anf("x3", 3);
        let v3 = is_q_nearly_bent(&f3, &q).unwrap();
        assert!(v3.holds);
        assert!(v3.witness_rho.is_some());
    }

    #[test]
    fn nearly_bent_unbalanced_f_reported() {
        let q = anf("x1*x2+x3", 3);
        let f = anf("x1*x2", 3);
        let v = is_q_nearly_bent(&f, &q).unwrap();
        assert!(!v.holds);
        assert_eq!(v.reason, Some(NotNearlyBentReason::NotBalanced));
    }

    #[test]
    fn nearly_bent_complement_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let q = random_func(3, &mut rng);
            if q.weight() == 0 || q.weight() == 8 {
                continue;
            }
            let f = random_balanced(3, &mut rng);
            let base = is_q_nearly_bent(&f, &q).unwrap().holds;
            assert_eq!(is_q_nearly_bent(&f, &q.complement()).unwrap().holds, base);
            assert_eq!(is_q_nearly_bent(&f.complement(), &q).unwrap().holds, base);
        }
    }

    #[test]
    fn plateaued_weight_two_fixture() {
        // q = x1x2+x3 at n=3: every weight-2 f is q-plateaued with λ = 4.
        let q = anf("x1*x2+x3", 3);
        let mut checked = 0;
        for i in 0..8u32 {
            for j in (i + 1)..8u32 {
                let f = BoolFunc::from_fn(3, |k| k == i || k == j).unwrap();
                match is_q_plateaued(&f, &q).unwrap() {
                    PlateauStatus::Plateaued { lambda } => assert_eq!(lambda, 4),
                    other => panic!("wt-2 f not plateaued: {other:?}"),
                }
                checked += 1;
            }
        }
        assert_eq!(checked, 28);
    }

    #[test]
    fn plateaued_self_is_not() {
        let q = anf("x1*x2+x3", 3);
        match is_q_plateaued(&q, &q).unwrap() {
            PlateauStatus::NotPlateaued { magnitudes } => {
                assert!(magnitudes.contains(&8));
                assert!(magnitudes.len() > 1);
            }
            other => panic!("expected not-plateaued, got {other:?}"),
        }
    }

    #[test]
    fn plateaued_degenerate_and_lambda2() {
        // Balanced f against weight-1 q: spectrum is {±2}, λ = 2.
        let q1 = BoolFunc::from_fn(3, |k| k == 3).unwrap();
        let f = anf("x2", 3);
        match is_q_plateaued(&f, &q1).unwrap() {
            PlateauStatus::Plateaued { lambda } => assert_eq!(lambda, 2),
            other => panic!("{other:?}"),
        }
        // The zero function against balanced q: every coefficient is
        // 2^n − 2wt(q) = 0, the degenerate all-zero spectrum.
        let zero = BoolFunc::constant(3, false).unwrap();
        let qb = anf("x3", 3);
        match is_q_plateaued(&zero, &qb).unwrap() {
            PlateauStatus::Degenerate => {}
            other => panic!("expected degenerate, got {other:?}"),
        }
    }

    #[test]
    fn moments_thm5_values() {
        let q = anf("x1*x2+x3", 3);
        // Balanced f: Σ W² = 168·64/7 = 1536.
        let f = anf("x3", 3);
        let m = second_moments(&f, &q).unwrap();
        assert_eq!(m.sum_sq, 1536);
        assert!(m.eq1_holds && m.eq2_holds);
        // |I_f| = 2: Σ W² = 24·(64−4) = 1440.
        let g = BoolFunc::from_fn(3, |k| k < 3).unwrap();
        assert_eq!(g.imbalance(), 2);
        let m = second_moments(&g, &q).unwrap();
        assert_eq!(m.sum_sq, 1440);
        assert!(m.eq1_holds && m.eq2_holds);
    }

    #[test]
    fn moments_agree_for_random_f() {
        let q = anf("x1*x2+x3", 3);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let f = random_func(3, &mut rng);
            let m = second_moments(&f, &q).unwrap();
            assert_eq!(m.eq1_holds, m.eq2_holds);
            assert!(m.eq1_holds);
        }
        assert!(second_moments(&q, &anf("x1*x2", 3)).is_err());
    }

    #[test]
    fn stabilizer_of_thm5_q() {
        let q = anf("x1*x2+x3", 3);
        let stab = stabilizer(&q).unwrap();
        assert_eq!(stab.order, 6);
        assert_eq!(stab.orbit_size, 28);
        let expected: std::collections::HashSet<String> = [
            "100;010;001",
            "010;100;001",
            "111;010;001",
            "111;100;001",
            "010;111;001",
            "100;111;001",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let got: std::collections::HashSet<String> =
            stab.matrices.iter().map(|m| m.to_string()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn stabilizer_of_constant_is_full_group() {
        let zero = BoolFunc::constant(3, false).unwrap();
        let stab = stabilizer(&zero).unwrap();
        assert_eq!(stab.order, 168);
        assert_eq!(stab.orbit_size, 1);
    }

    #[test]
    fn stabilizer_of_linear_orbit_is_nonzero_linears() {
        let q = anf("x1", 3);
        let stab = stabilizer(&q).unwrap();
        assert_eq!(stab.order, 24);
        assert_eq!(stab.orbit_size, 7);
        // The orbit is exactly the 7 nonzero linear functions.
        let mut orbit = std::collections::HashSet::new();
        for a in enumerate_gl(3).unwrap() {
            orbit.insert(q.compose(&a).unwrap().to_tt_hex());
        }
        let linears: std::collections::HashSet<String> = (1..8u32)
            .map(|v| {
                BoolFunc::from_fn(3, |k| (k & v).count_ones() % 2 == 1)
                    .unwrap()
                    .to_tt_hex()
            })
            .collect();
        assert_eq!(orbit, linears);
    }

    #[test]
    fn support_scan_matches_q_coeff() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let q = random_func(3, &mut rng);
        let scan = SupportScan::build(&q).unwrap();
        let f = random_func(3, &mut rng);
        for (k, a) in enumerate_gl(3).unwrap().enumerate() {
            let direct = q_coeff(&f, &q, &a).unwrap();
            let fast = scan.coeff(k, f.words()[0], f.weight());
            assert_eq!(direct, fast, "matrix {k}");
        }
    }

    #[test]
    fn nth_matrix_matches_enumeration() {
        for (k, a) in enumerate_gl(3).unwrap().enumerate().take(20) {
            assert_eq!(nth_gl_matrix(3, k as u64), a);
        }
    }
}
