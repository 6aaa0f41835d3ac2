//! Exhaustive and sampled searches over the balanced-function space:
//! existence and non-existence checks for q-nearly bent functions, the
//! parity screen, published-table reproduction, and the conjecture scan.
//!
//! Reports are deterministic for fixed parameters and seed: candidate and
//! q populations are processed in canonical index order, sampled
//! populations are drawn up front from a seeded stream, and parallel
//! partitions are merged by an ordered reduction, so results do not depend
//! on the worker count.

use std::collections::HashSet;
use std::io::{IsTerminal, Write};
use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boolfn::BoolFunc;
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::qtransform::{
    self, full_enum_cap, nth_gl_matrix, rho, RhoParams, SupportScan,
};

/// Knobs for the candidate searches.
///
/// `fix_zero` (default true) restricts candidates to f(0^n) = 0, sound
/// because f and f+1 have the same coefficient magnitudes. `early_abort`
/// (default true) stops a candidate at its first out-of-bound coefficient.
/// `sample_q` switches a q-population from exhaustive to a seeded sample.
/// `max_matrices` caps the matrices scanned per candidate; a candidate that
/// survives a capped scan is only partially certified, which the report
/// parameters record.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    pub fix_zero: bool,
    pub early_abort: bool,
    pub sample_q: Option<SampleSpec>,
    pub max_matrices: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            fix_zero: true,
            early_abort: true,
            sample_q: None,
            max_matrices: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleSpec {
    pub count: u64,
    pub seed: u64,
}

/// Verdict of a verification run.
///
/// `details` is structured payload specific to the kind: the failing
/// congruence for `ImpossibleByParity`, witness lists for
/// `FoundWitnesses`, counterexample reproduction data for `Refuted`.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub details: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    ImpossibleByParity,
    Inconclusive,
    VerifiedNoneExist,
    FoundWitnesses,
    Refuted,
}

/// Machine-readable outcome of one theorem / table / conjecture check.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub claim_id: String,
    pub parameters: Value,
    pub verdict: Verdict,
    pub counts: Counts,
    /// Wall-clock milliseconds; populated only on request since it is the
    /// one field that varies between identical runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl VerificationReport {
    pub fn refuted(&self) -> bool {
        self.verdict.kind == VerdictKind::Refuted
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Counts {
    pub candidates_examined: u64,
    pub pruned_at_identity: u64,
    pub coefficients_evaluated: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.candidates_examined += other.candidates_examined;
        self.pruned_at_identity += other.pruned_at_identity;
        self.coefficients_evaluated += other.coefficients_evaluated;
    }
}

/// Echo of a function in both interchange formats, as reports print it.
#[derive(Debug, Clone, Serialize)]
pub struct FuncEcho {
    pub n: usize,
    pub tt_hex: String,
    pub anf: String,
    pub weight: u64,
    pub degree: usize,
}

impl FuncEcho {
    pub fn of(f: &BoolFunc) -> FuncEcho {
        FuncEcho {
            n: f.n(),
            tt_hex: f.to_tt_hex(),
            anf: f.to_anf().to_string(),
            weight: f.weight(),
            degree: f.degree(),
        }
    }
}

/// A function certified q-nearly bent (or q-plateaued), with its witness.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub f: FuncEcho,
    /// Matrix attaining |W| = ρ_q (or λ for plateaued witnesses).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_rho: Option<BitMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u64>,
}

// ---------------------------------------------------------------------------
// Candidate streams

/// Next weight-preserving mask after v (Gosper's hack).
#[inline]
fn next_same_weight(v: u64) -> u64 {
    let lo = v & v.wrapping_neg();
    let lz = v + lo;
    lz | ((v ^ lz) >> (lo.trailing_zeros() + 2))
}

/// All masks of the given weight over `bits` positions, ascending.
pub(crate) fn weight_masks(bits: u32, weight: u32) -> impl Iterator<Item = u64> {
    let limit = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let first = if weight == 0 {
        0
    } else {
        (1u64 << weight) - 1
    };
    let mut cur = Some(first).filter(|_| weight <= bits);
    std::iter::from_fn(move || {
        let v = cur?;
        cur = if v == 0 {
            None
        } else {
            let next = next_same_weight(v);
            (next <= limit).then_some(next)
        };
        Some(v)
    })
}

/// Truth-table masks of all balanced functions of dimension n, in ascending
/// table order; with `fix_zero` only those with f(0^n) = 0.
pub(crate) fn balanced_masks(n: usize, fix_zero: bool) -> Box<dyn Iterator<Item = u64> + Send> {
    let m = 1u32 << n;
    let w = m / 2;
    if fix_zero {
        Box::new(weight_masks(m - 1, w).map(|v| v << 1))
    } else {
        Box::new(weight_masks(m, w))
    }
}

/// Every balanced f of dimension n (optionally with f(0^n) = 0), each
/// exactly once, ascending by truth-table integer.
pub fn enumerate_balanced(
    n: usize,
    cfg: &SearchConfig,
) -> Result<impl Iterator<Item = BoolFunc>> {
    let cap = full_enum_cap();
    if n > cap {
        return Err(Error::Capacity {
            what: "balanced-function enumeration",
            requested: n,
            cap,
        });
    }
    Ok(balanced_masks(n, cfg.fix_zero).map(move |mask| BoolFunc::from_mask(n, mask)))
}

fn binom(m: u64, k: u64) -> u128 {
    let k = k.min(m - k.min(m));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Draw `count` distinct functions of the given weight, deterministically
/// from the seed. Optionally rejects affine functions.
fn sample_distinct_of_weight(
    n: usize,
    weight: u64,
    count: u64,
    seed: u64,
    reject_affine: bool,
) -> Vec<BoolFunc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1usize << n;
    let available = binom(m as u64, weight);
    let target = (count as u128).min(available) as u64;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(target as usize);
    while (out.len() as u64) < target {
        let idx = rand::seq::index::sample(&mut rng, m, weight as usize);
        let mut f = BoolFunc::constant(n, false).expect("dimension checked by caller");
        for i in idx {
            f.set(i as u32, true);
        }
        if reject_affine && f.degree() <= 1 {
            continue;
        }
        if seen.insert(f.words()[0]) {
            out.push(f);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Parity screen

#[derive(Debug, Clone, Serialize)]
struct ParityDetail {
    rho: RhoParams,
    rho_mod_4: u8,
    wt_parity: &'static str,
    required_rho_mod_4: u8,
}

/// The necessary condition: a q-nearly bent function can exist only if
/// ρ_q ≡ 0 (mod 4) for even wt(q), or ρ_q ≡ 2 (mod 4) for odd wt(q),
/// because some coefficient must attain ρ_q and the attainable magnitudes
/// are constrained by the weight's parity.
pub fn necessary_condition(n: usize, wt_q: u64) -> Result<Verdict> {
    let r = rho(n, wt_q)?;
    let required = if r.wt_q % 2 == 0 { 0u8 } else { 2u8 };
    let detail = ParityDetail {
        rho: r,
        rho_mod_4: (r.rho % 4) as u8,
        wt_parity: if r.wt_q % 2 == 0 { "even" } else { "odd" },
        required_rho_mod_4: required,
    };
    let kind = if detail.rho_mod_4 == required {
        VerdictKind::Inconclusive
    } else {
        VerdictKind::ImpossibleByParity
    };
    Ok(Verdict {
        kind,
        details: serde_json::to_value(&detail).expect("serializable"),
    })
}

// ---------------------------------------------------------------------------
// Core scan

/// What a candidate scan checks each |W| against.
#[derive(Debug, Clone, Copy)]
enum ScanKind {
    /// q-nearly-bent style: pass iff |W| ≤ bound everywhere.
    AtMost(u64),
    /// q-bent / weight-one style: pass iff |W| = magnitude everywhere.
    Exactly(u64),
}

#[derive(Debug, Clone, Copy)]
struct ScanOutcome {
    passes: bool,
    /// Matrix index and coefficient of the first violation.
    first_violation: Option<(u64, i64)>,
    /// First matrix index attaining the bound (the ρ or λ witness).
    bound_witness: Option<u64>,
    coeffs_evaluated: u64,
}

fn scan_candidate(
    scan: &SupportScan,
    f_word: u64,
    base: i64,
    kind: ScanKind,
    early_abort: bool,
    max_matrices: Option<u64>,
) -> ScanOutcome {
    let limit = max_matrices
        .map(|m| (m as usize).min(scan.masks.len()))
        .unwrap_or(scan.masks.len());
    let mut out = ScanOutcome {
        passes: true,
        first_violation: None,
        bound_witness: None,
        coeffs_evaluated: 0,
    };
    let bound = match kind {
        ScanKind::AtMost(b) | ScanKind::Exactly(b) => b,
    };
    let exact = matches!(kind, ScanKind::Exactly(_));
    for (k, &mask) in scan.masks[..limit].iter().enumerate() {
        out.coeffs_evaluated += 1;
        let w = base + 4 * (f_word & mask).count_ones() as i64;
        let a = w.unsigned_abs();
        let violated = if exact { a != bound } else { a > bound };
        if violated {
            out.passes = false;
            if out.first_violation.is_none() {
                out.first_violation = Some((k as u64, w));
            }
            if early_abort {
                break;
            }
        } else if a == bound && out.bound_witness.is_none() {
            out.bound_witness = Some(k as u64);
        }
    }
    out
}

/// Accumulated result of scanning one candidate population against one q.
#[derive(Debug, Clone, Default)]
struct PopulationScan {
    /// Masks of candidates that passed, with their bound-witness index.
    passed: Vec<(u64, Option<u64>)>,
    counts: Counts,
}

impl PopulationScan {
    fn merge(&mut self, other: PopulationScan) {
        self.passed.extend(other.passed);
        self.counts.add(other.counts);
    }
}

fn scan_chunk(
    scan: &SupportScan,
    chunk: &[u64],
    base_for: impl Fn(u64) -> i64,
    kind: ScanKind,
    cfg: &SearchConfig,
) -> PopulationScan {
    let mut out = PopulationScan::default();
    for &mask in chunk {
        let o = scan_candidate(scan, mask, base_for(mask), kind, cfg.early_abort, cfg.max_matrices);
        out.counts.candidates_examined += 1;
        out.counts.coefficients_evaluated += o.coeffs_evaluated;
        if let Some((0, _)) = o.first_violation {
            out.counts.pruned_at_identity += 1;
        }
        if o.passes {
            out.passed.push((mask, o.bound_witness));
        }
    }
    out
}

/// Scan a candidate list against one q, in parallel chunks merged in order.
fn scan_population(
    scan: &SupportScan,
    candidates: &[u64],
    kind: ScanKind,
    cfg: &SearchConfig,
    progress: Option<&Progress>,
) -> PopulationScan {
    const CHUNK: usize = 1024;
    let partials: Vec<PopulationScan> = candidates
        .par_chunks(CHUNK)
        .map(|chunk| {
            let base = |mask: u64| {
                (1i64 << scan.n)
                    - 2 * mask.count_ones() as i64
                    - 2 * scan.wt_q as i64
            };
            let r = scan_chunk(scan, chunk, base, kind, cfg);
            if let Some(p) = progress {
                p.bump(chunk.len() as u64);
            }
            r
        })
        .collect();
    let mut out = PopulationScan::default();
    for p in partials {
        out.merge(p);
    }
    out
}

// ---------------------------------------------------------------------------
// Progress reporting (diagnostic stream only)

struct Progress {
    label: String,
    total: u64,
    done: AtomicU64,
    started: Instant,
    last_print: AtomicU64,
    enabled: bool,
}

impl Progress {
    fn new(label: impl Into<String>, total: u64) -> Progress {
        Progress {
            label: label.into(),
            total,
            done: AtomicU64::new(0),
            started: Instant::now(),
            last_print: AtomicU64::new(0),
            enabled: std::io::stderr().is_terminal(),
        }
    }

    fn bump(&self, delta: u64) {
        let done = self.done.fetch_add(delta, Ordering::Relaxed) + delta;
        if !self.enabled {
            return;
        }
        let elapsed = self.started.elapsed().as_millis() as u64;
        let last = self.last_print.load(Ordering::Relaxed);
        if elapsed.saturating_sub(last) >= 2000
            && self
                .last_print
                .compare_exchange(last, elapsed, Ordering::Relaxed, Ordering::Relaxed)
                .is_ok()
        {
            let rate = done as f64 / (elapsed.max(1) as f64 / 1000.0);
            let mut err = std::io::stderr().lock();
            let _ = writeln!(
                err,
                "{}: {}/{} candidates ({:.0}/s)",
                self.label, done, self.total, rate
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Single-q search

/// Classify every balanced candidate as q-nearly bent or not.
///
/// The candidate space is exhaustive over balanced f (with f(0^n) = 0 by
/// default); weights above 2^(n−1) are reflected to the complement of q
/// first. The verdict is `FoundWitnesses` with the full witness list when
/// any non-affine candidate passes, otherwise `VerifiedNoneExist` with
/// affine witnesses listed separately.
pub fn search_q_nearly_bent(q: &BoolFunc, cfg: &SearchConfig) -> Result<VerificationReport> {
    let n = q.n();
    let cap = full_enum_cap();
    if n > cap {
        return Err(Error::Capacity {
            what: "q-nearly-bent search",
            requested: n,
            cap,
        });
    }
    let (q_eff, reflected) = reflect_to_small(q);
    let rho_params = rho(n, q_eff.weight())?;
    let scan = SupportScan::build(&q_eff)?;
    let candidates: Vec<u64> = balanced_masks(n, cfg.fix_zero).collect();
    let progress = Progress::new(format!("search n={n}"), candidates.len() as u64);
    let result = scan_population(
        &scan,
        &candidates,
        ScanKind::AtMost(rho_params.rho),
        cfg,
        Some(&progress),
    );

    let mut witnesses = Vec::new();
    let mut affine_witnesses = Vec::new();
    for &(mask, rho_idx) in &result.passed {
        let f = BoolFunc::from_mask(n, mask);
        let w = Witness {
            f: FuncEcho::of(&f),
            witness_rho: rho_idx.map(|k| nth_gl_matrix(n, k)),
            lambda: None,
        };
        if w.f.degree >= 2 {
            witnesses.push(w);
        } else {
            affine_witnesses.push(w);
        }
    }

    let verdict = if witnesses.is_empty() {
        Verdict {
            kind: VerdictKind::VerifiedNoneExist,
            details: json!({
                "non_affine_witnesses": 0,
                "affine_witnesses": affine_witnesses,
            }),
        }
    } else {
        Verdict {
            kind: VerdictKind::FoundWitnesses,
            details: json!({
                "witnesses": witnesses,
                "affine_witnesses": affine_witnesses,
            }),
        }
    };

    Ok(VerificationReport {
        claim_id: "search".into(),
        parameters: json!({
            "n": n,
            "q": FuncEcho::of(q),
            "reflected_to_complement": reflected,
            "rho": rho_params,
            "config": cfg,
            "candidates": candidates.len(),
        }),
        verdict,
        counts: result.counts,
        elapsed_ms: None,
        seed: cfg.sample_q.map(|s| s.seed),
    })
}

fn reflect_to_small(q: &BoolFunc) -> (BoolFunc, bool) {
    if q.weight() > 1 << (q.n() - 1) {
        (q.complement(), true)
    } else {
        (q.clone(), false)
    }
}

// ---------------------------------------------------------------------------
// Theorem verification

/// Parameters for [`verify_theorem`]; unset fields take per-claim defaults.
#[derive(Debug, Clone, Default)]
pub struct ClaimParams {
    pub n: Option<usize>,
    /// Sample count for the claim's sampled population (q-samples for the
    /// large-weight and q-bent claims, f-samples for the weight-one claim
    /// at n = 4).
    pub samples: Option<u64>,
    pub seed: u64,
    /// Use the exhaustive population where sampling is the default.
    pub exhaustive: bool,
    pub cfg: SearchConfig,
}

const KNOWN_CLAIMS: &str =
    "thm3, thm4, thm5, thm6, corollary, plateaued-n3, noqbent-n4";

/// Run one named claim check.
///
/// Claim ids: `thm3` (weight-one q: every balanced f is q-nearly bent with
/// all |W| = 2), `thm4` (wt 2–3: no q-nearly bent functions), `thm5`
/// (wt 4: no non-affine q-nearly bent functions), `thm6` (even n, large
/// weight: none), `corollary` (balanced q, even n: none), `plateaued-n3`
/// (every weight-2 f is q-plateaued with λ = 4 for q = x1*x2+x3), and
/// `noqbent-n4` (no q-bent functions for balanced non-affine q).
pub fn verify_theorem(claim_id: &str, params: &ClaimParams) -> Result<VerificationReport> {
    match claim_id {
        "thm3" => verify_thm3(params),
        "thm4" => verify_small_weight(claim_id, &[2, 3], false, params),
        "thm5" => verify_small_weight(claim_id, &[4], true, params),
        "thm6" => verify_large_weight("thm6", false, params),
        "corollary" => verify_large_weight("corollary", true, params),
        "plateaued-n3" => verify_plateaued_n3(params),
        "noqbent-n4" => verify_noqbent_n4(params),
        other => Err(Error::UnknownClaim {
            id: other.to_string(),
            known: KNOWN_CLAIMS,
        }),
    }
}

fn check_claim_dim(claim: &str, n: usize, allowed: RangeInclusive<usize>) -> Result<()> {
    if !allowed.contains(&n) {
        return Err(Error::DimensionRange {
            what: "verify claim",
            value: n,
            min: *allowed.start(),
            max: *allowed.end(),
        });
    }
    let cap = full_enum_cap();
    if n > cap {
        return Err(Error::Capacity {
            what: "verify claim",
            requested: n,
            cap,
        });
    }
    let _ = claim;
    Ok(())
}

/// Weight-one claim: every balanced f is q-nearly bent, with every
/// coefficient magnitude exactly 2.
fn verify_thm3(params: &ClaimParams) -> Result<VerificationReport> {
    let n = params.n.unwrap_or(3);
    check_claim_dim("thm3", n, 3..=4)?;
    let m = 1u32 << n;

    // q population: all weight-1 functions at n=3; the first few in
    // support order at n=4 (exhaustive on request).
    let q_count_default = if n == 3 { m as u64 } else { 3 };
    let q_masks: Vec<u64> = if n == 3 || params.exhaustive {
        (0..m).map(|i| 1u64 << i).collect()
    } else {
        (0..q_count_default.min(m as u64)).map(|i| 1u64 << i).collect()
    };

    // f population: every balanced f at n=3 (without fixing f(0), per the
    // published exhaustive count of 70); seeded random balanced f at n=4.
    let f_samples = params.samples.unwrap_or(1000);
    let candidates: Vec<u64> = if n == 3 {
        balanced_masks(3, false).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        (0..f_samples)
            .map(|_| {
                let idx = rand::seq::index::sample(&mut rng, m as usize, (m / 2) as usize);
                idx.into_iter().fold(0u64, |acc, i| acc | 1 << i)
            })
            .collect()
    };

    let per_q: Vec<(PopulationScan, u64)> = q_masks
        .par_iter()
        .map(|&q_mask| {
            let q = BoolFunc::from_mask(n, q_mask);
            let scan = SupportScan::build(&q).expect("n within cap");
            let cfg = SearchConfig {
                fix_zero: false,
                ..params.cfg.clone()
            };
            (
                scan_population(&scan, &candidates, ScanKind::Exactly(2), &cfg, None),
                q_mask,
            )
        })
        .collect();

    let mut counts = Counts::default();
    let mut failures = Vec::new();
    let mut witness_sample = None;
    for (scan_result, q_mask) in &per_q {
        counts.add(scan_result.counts);
        let passed: HashSet<u64> = scan_result.passed.iter().map(|&(m, _)| m).collect();
        if witness_sample.is_none() {
            if let Some(&(mask, widx)) = scan_result.passed.first() {
                witness_sample = Some(json!({
                    "q": FuncEcho::of(&BoolFunc::from_mask(n, *q_mask)),
                    "witness": Witness {
                        f: FuncEcho::of(&BoolFunc::from_mask(n, mask)),
                        witness_rho: widx.map(|k| nth_gl_matrix(n, k)),
                        lambda: None,
                    },
                }));
            }
        }
        for &mask in candidates.iter().filter(|&&c| !passed.contains(&c)) {
            failures.push(json!({
                "q": FuncEcho::of(&BoolFunc::from_mask(n, *q_mask)),
                "f": FuncEcho::of(&BoolFunc::from_mask(n, mask)),
            }));
        }
    }

    let degree2 = candidates
        .iter()
        .filter(|&&mask| BoolFunc::from_mask(n, mask).degree() >= 2)
        .count() as u64;

    let verdict = if failures.is_empty() {
        Verdict {
            kind: VerdictKind::FoundWitnesses,
            details: json!({
                "q_population": q_masks.len(),
                "candidates_per_q": candidates.len(),
                "non_affine_candidates": degree2,
                "all_coefficient_magnitudes": 2,
                "witness_sample": witness_sample,
            }),
        }
    } else {
        Verdict {
            kind: VerdictKind::Refuted,
            details: json!({ "counterexamples": failures }),
        }
    };

    Ok(VerificationReport {
        claim_id: "thm3".into(),
        parameters: json!({
            "n": n,
            "wt_q": 1,
            "q_population": q_masks.len(),
            "f_population": if n == 3 { json!("all balanced") } else { json!({"samples": f_samples}) },
            "config": params.cfg,
        }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: (n == 4).then_some(params.seed),
    })
}

/// Shared engine for the small-weight non-existence claims (wt 2–4).
///
/// Affine q are excluded from the population: they arise only when
/// wt = 2^(n−1) (so only for wt 4 at n = 3) and the non-existence claims
/// assume a non-affine q — for affine q of weight 4 at n=3, non-affine
/// q-nearly bent functions do exist.
fn verify_small_weight(
    claim: &str,
    weights: &[u64],
    exclude_affine: bool,
    params: &ClaimParams,
) -> Result<VerificationReport> {
    let n = params.n.unwrap_or(3);
    check_claim_dim(claim, n, 3..=5)?;
    let m = 1u32 << n;

    let mut q_list: Vec<(u64, BoolFunc)> = Vec::new();
    let mut affine_excluded = 0u64;
    for &w in weights {
        if let Some(spec) = params.cfg.sample_q {
            for q in sample_distinct_of_weight(n, w, spec.count, spec.seed, exclude_affine) {
                q_list.push((w, q));
            }
        } else {
            for mask in weight_masks(m, w as u32) {
                let q = BoolFunc::from_mask(n, mask);
                if exclude_affine && q.degree() <= 1 {
                    affine_excluded += 1;
                    continue;
                }
                q_list.push((w, q));
            }
        }
    }

    let candidates: Vec<u64> = balanced_masks(n, params.cfg.fix_zero).collect();
    let progress = Progress::new(
        format!("{claim} n={n}"),
        (q_list.len() * candidates.len()) as u64,
    );

    let outcome = run_none_exist_population(n, &q_list, &candidates, &params.cfg, &progress)?;
    finish_none_exist_report(claim, n, weights, q_list.len(), affine_excluded, params, outcome)
}

/// Large-weight claims: even n, 2^(n−1) − 2^(n/2−1) ≤ wt ≤ 2^(n−1).
fn verify_large_weight(
    claim: &str,
    balanced_only: bool,
    params: &ClaimParams,
) -> Result<VerificationReport> {
    let n = params.n.unwrap_or(4);
    check_claim_dim(claim, n, 4..=4)?;
    if n % 2 != 0 {
        return Err(Error::DimensionRange {
            what: "large-weight claim (even n)",
            value: n,
            min: 4,
            max: 4,
        });
    }
    let half = 1u64 << (n - 1);
    let lo = if balanced_only {
        half
    } else {
        half - (1u64 << (n / 2 - 1))
    };
    let weights: Vec<u64> = (lo..=half).collect();
    let samples = params.samples.unwrap_or(100);

    let mut q_list: Vec<(u64, BoolFunc)> = Vec::new();
    for &w in &weights {
        if params.exhaustive {
            for mask in weight_masks(1 << n, w as u32) {
                q_list.push((w, BoolFunc::from_mask(n, mask)));
            }
        } else {
            // Per-weight seed offset keeps the populations disjoint in the
            // stream while staying reproducible.
            for q in sample_distinct_of_weight(n, w, samples, params.seed ^ w, false) {
                q_list.push((w, q));
            }
        }
    }

    let candidates: Vec<u64> = balanced_masks(n, params.cfg.fix_zero).collect();
    let progress = Progress::new(
        format!("{claim} n={n}"),
        (q_list.len() * candidates.len()) as u64,
    );
    let outcome = run_none_exist_population(n, &q_list, &candidates, &params.cfg, &progress)?;
    let mut report =
        finish_none_exist_report(claim, n, &weights, q_list.len(), 0, params, outcome)?;
    report.seed = (!params.exhaustive).then_some(params.seed);
    Ok(report)
}

struct NoneExistOutcome {
    counts: Counts,
    /// (q, passing f, its rho-witness index) for every passing candidate.
    survivors: Vec<(BoolFunc, u64, Option<u64>)>,
    affine_survivors: Vec<(BoolFunc, u64, Option<u64>)>,
}

fn run_none_exist_population(
    n: usize,
    q_list: &[(u64, BoolFunc)],
    candidates: &[u64],
    cfg: &SearchConfig,
    progress: &Progress,
) -> Result<NoneExistOutcome> {
    let per_q: Vec<(PopulationScan, usize)> = q_list
        .par_iter()
        .enumerate()
        .map(|(qi, (_, q))| {
            let scan = SupportScan::build(q).expect("n within cap");
            let rho_params = rho(n, q.weight()).expect("non-constant q");
            let mut chunk_cfg = cfg.clone();
            chunk_cfg.sample_q = None;
            let r = scan_population(
                &scan,
                candidates,
                ScanKind::AtMost(rho_params.rho),
                &chunk_cfg,
                None,
            );
            progress.bump(candidates.len() as u64);
            (r, qi)
        })
        .collect();

    let mut counts = Counts::default();
    let mut survivors = Vec::new();
    let mut affine_survivors = Vec::new();
    for (scan_result, qi) in per_q {
        counts.add(scan_result.counts);
        for (mask, widx) in scan_result.passed {
            let f = BoolFunc::from_mask(n, mask);
            let entry = (q_list[qi].1.clone(), mask, widx);
            if f.degree() >= 2 {
                survivors.push(entry);
            } else {
                affine_survivors.push(entry);
            }
        }
    }
    Ok(NoneExistOutcome {
        counts,
        survivors,
        affine_survivors,
    })
}

fn finish_none_exist_report(
    claim: &str,
    n: usize,
    weights: &[u64],
    q_population: usize,
    affine_excluded: u64,
    params: &ClaimParams,
    outcome: NoneExistOutcome,
) -> Result<VerificationReport> {
    let witness_json = |(q, mask, widx): &(BoolFunc, u64, Option<u64>)| {
        let f = BoolFunc::from_mask(n, *mask);
        let spectrum = qtransform::q_spectrum(&f, q, qtransform::SpectrumMode::Full)
            .map(|s| s.histogram)
            .ok();
        json!({
            "q": FuncEcho::of(q),
            "f": FuncEcho::of(&f),
            "witness_rho": widx.map(|k| nth_gl_matrix(n, k)),
            "spectrum": spectrum,
        })
    };
    let affine: Vec<Value> = outcome.affine_survivors.iter().map(&witness_json).collect();
    let verdict = if outcome.survivors.is_empty() {
        Verdict {
            kind: VerdictKind::VerifiedNoneExist,
            details: json!({
                "non_affine_witnesses": 0,
                "affine_witnesses": affine,
            }),
        }
    } else {
        // A non-affine q-nearly bent function where the claim says none
        // exist: full reproduction data, never silently dropped.
        let counterexamples: Vec<Value> = outcome.survivors.iter().map(&witness_json).collect();
        Verdict {
            kind: VerdictKind::Refuted,
            details: json!({
                "counterexamples": counterexamples,
                "affine_witnesses": affine,
            }),
        }
    };
    Ok(VerificationReport {
        claim_id: claim.into(),
        parameters: json!({
            "n": n,
            "wt_q": weights,
            "q_population": q_population,
            "affine_q_excluded": affine_excluded,
            "config": params.cfg,
            "exhaustive": params.exhaustive,
        }),
        verdict,
        counts: outcome.counts,
        elapsed_ms: None,
        seed: params.cfg.sample_q.map(|s| s.seed),
    })
}

/// The q-plateaued instance: q = x1*x2+x3 at n = 3; every f of weight 2
/// must be q-plateaued with λ = 4.
fn verify_plateaued_n3(params: &ClaimParams) -> Result<VerificationReport> {
    let n = params.n.unwrap_or(3);
    check_claim_dim("plateaued-n3", n, 3..=3)?;
    let q = BoolFunc::parse_anf("x1*x2+x3", 3)?;
    let scan = SupportScan::build(&q)?;
    let candidates: Vec<u64> = weight_masks(8, 2).collect();

    let mut counts = Counts::default();
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for &mask in &candidates {
        counts.candidates_examined += 1;
        let weight = mask.count_ones() as u64;
        let mut magnitudes: Vec<u64> = Vec::new();
        let mut lambda_witness = None;
        for k in 0..scan.masks.len() {
            counts.coefficients_evaluated += 1;
            let w = scan.coeff(k, mask, weight);
            let a = w.unsigned_abs();
            if a != 0 {
                if !magnitudes.contains(&a) {
                    magnitudes.push(a);
                }
                if a == 4 && lambda_witness.is_none() {
                    lambda_witness = Some(k as u64);
                }
            }
        }
        let f = BoolFunc::from_mask(n, mask);
        if magnitudes == [4] {
            witnesses.push(Witness {
                f: FuncEcho::of(&f),
                witness_rho: lambda_witness.map(|k| nth_gl_matrix(n, k)),
                lambda: Some(4),
            });
        } else {
            failures.push(json!({
                "f": FuncEcho::of(&f),
                "magnitudes": magnitudes,
            }));
        }
    }

    let verdict = if failures.is_empty() {
        Verdict {
            kind: VerdictKind::FoundWitnesses,
            details: json!({ "lambda": 4, "witnesses": witnesses }),
        }
    } else {
        Verdict {
            kind: VerdictKind::Refuted,
            details: json!({ "counterexamples": failures }),
        }
    };
    Ok(VerificationReport {
        claim_id: "plateaued-n3".into(),
        parameters: json!({
            "n": 3,
            "q": FuncEcho::of(&q),
            "wt_f": 2,
            "candidates": candidates.len(),
        }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: None,
    })
}

/// Empirical q-bent non-existence at n = 4: for seeded balanced non-affine
/// q, no f with |I_f| = 4 (weight 6 or 10) has all |W| = 4.
fn verify_noqbent_n4(params: &ClaimParams) -> Result<VerificationReport> {
    let n = params.n.unwrap_or(4);
    check_claim_dim("noqbent-n4", n, 4..=4)?;
    let samples = params.samples.unwrap_or(20);
    let q_list = sample_distinct_of_weight(n, 8, samples, params.seed, true);

    // The only candidates that can be q-bent pass the zero-matrix test
    // |I_f| = 2^(n/2) = 4, i.e. weight 6 or 10.
    let mut candidates: Vec<u64> = weight_masks(16, 6).collect();
    candidates.extend(weight_masks(16, 10));

    let progress = Progress::new("noqbent n=4", (q_list.len() * candidates.len()) as u64);
    let per_q: Vec<PopulationScan> = q_list
        .par_iter()
        .map(|q| {
            let scan = SupportScan::build(q).expect("n within cap");
            let r = scan_population(&scan, &candidates, ScanKind::Exactly(4), &params.cfg, None);
            progress.bump(candidates.len() as u64);
            r
        })
        .collect();

    let mut counts = Counts::default();
    let mut counterexamples = Vec::new();
    for (qi, scan_result) in per_q.iter().enumerate() {
        counts.add(scan_result.counts);
        for &(mask, _) in &scan_result.passed {
            counterexamples.push(json!({
                "q": FuncEcho::of(&q_list[qi]),
                "f": FuncEcho::of(&BoolFunc::from_mask(n, mask)),
            }));
        }
    }

    let verdict = if counterexamples.is_empty() {
        Verdict {
            kind: VerdictKind::VerifiedNoneExist,
            details: json!({
                "q_bent_found": 0,
                "candidate_weights": [6, 10],
            }),
        }
    } else {
        Verdict {
            kind: VerdictKind::Refuted,
            details: json!({ "counterexamples": counterexamples }),
        }
    };
    Ok(VerificationReport {
        claim_id: "noqbent-n4".into(),
        parameters: json!({
            "n": 4,
            "q_population": q_list.len(),
            "q_weight": 8,
            "q_non_affine": true,
            "candidates_per_q": candidates.len(),
            "config": params.cfg,
        }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: Some(params.seed),
    })
}

// ---------------------------------------------------------------------------
// Tables

/// One reproduced table cell.
#[derive(Debug, Clone, Serialize)]
pub struct TableCell {
    pub n: usize,
    pub wt_q: u64,
    pub rho_computed: u64,
    pub rho_exact: bool,
    /// The value(s) the published table prints for this cell, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_printed: Option<Vec<u64>>,
    pub rho_matches: Option<bool>,
    /// Parity screen outcome with the computed ρ.
    pub screen: VerdictKind,
    /// The published existence answer: "No (proved)", "No (parity)" or "?".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed_answer: Option<&'static str>,
    /// Whether our verification supports the printed answer.
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PrintedAnswer {
    NoProvedSmallWeight,
    NoProvedLargeWeight,
    NoByParity,
    Unknown,
}

impl PrintedAnswer {
    fn label(self) -> &'static str {
        match self {
            PrintedAnswer::NoProvedSmallWeight => "No (proved, weight-4 theorem)",
            PrintedAnswer::NoProvedLargeWeight => "No (proved, large-weight theorem)",
            PrintedAnswer::NoByParity => "No (parity screen)",
            PrintedAnswer::Unknown => "?",
        }
    }
}

/// Published small-weight table rows: (n_lo, n_hi, wt, printed ρ, answer).
/// Open-ended "n > k" rows have n_hi = None.
const TABLE1_ROWS: &[(usize, Option<usize>, u64, &[u64], PrintedAnswer)] = &[
    (3, None, 4, &[4], PrintedAnswer::NoProvedSmallWeight),
    (4, None, 5, &[4, 5], PrintedAnswer::NoByParity),
    (4, Some(4), 6, &[4], PrintedAnswer::NoProvedLargeWeight),
    (5, None, 6, &[5], PrintedAnswer::NoByParity),
    (4, Some(4), 7, &[2], PrintedAnswer::NoProvedLargeWeight),
    (5, Some(5), 7, &[5], PrintedAnswer::NoByParity),
    (6, None, 7, &[6], PrintedAnswer::Unknown),
];

/// Published balanced-weight table rows: (n, printed ρ, answer).
const TABLE2_ROWS: &[(usize, u64, PrintedAnswer)] = &[
    (3, 4, PrintedAnswer::NoProvedSmallWeight),
    (5, 6, PrintedAnswer::NoByParity),
    (7, 12, PrintedAnswer::Unknown),
    (9, 24, PrintedAnswer::Unknown),
    (11, 46, PrintedAnswer::NoByParity),
    (13, 91, PrintedAnswer::NoByParity),
    (15, 182, PrintedAnswer::NoByParity),
    (17, 363, PrintedAnswer::NoByParity),
];

/// The ρ value(s) the published tables print for this (n, wt) cell, if the
/// cell appears in either table. Weights above 2^(n−1) are reflected first.
pub fn published_rho(n: usize, wt: u64) -> Option<Vec<u64>> {
    if n < 3 || n > 30 || wt == 0 || wt >= 1 << n {
        return None;
    }
    let wt = wt.min((1 << n) - wt);
    for &(lo, hi, row_wt, printed, _) in TABLE1_ROWS {
        if wt == row_wt && n >= lo && hi.is_none_or(|h| n <= h) {
            return Some(printed.to_vec());
        }
    }
    TABLE2_ROWS
        .iter()
        .find(|&&(row_n, _, _)| row_n == n && wt == 1 << (n - 1))
        .map(|&(_, r, _)| vec![r])
}

/// Reproduce the published small-weight table: every ρ_q cell recomputed
/// exactly, every parity verdict re-derived, and each proved cell
/// re-verified by the corresponding claim run at its smallest instance.
/// The (n=4, wt=7) cell computes ρ = 5 against the printed 2 and is
/// flagged as a discrepancy.
pub fn table1(params: &ClaimParams) -> Result<VerificationReport> {
    // Open-ended n ranges are evaluated for n up to 10.
    let mut cells = Vec::new();
    let mut discrepancies = Vec::new();
    for &(n_lo, n_hi, wt, printed, answer) in TABLE1_ROWS {
        for n in n_lo..=n_hi.unwrap_or(10) {
            let cell = make_cell(n, wt, Some(printed.to_vec()), Some(answer))?;
            if cell.rho_matches == Some(false) {
                discrepancies.push(json!({
                    "table": "table1",
                    "n": n,
                    "wt_q": wt,
                    "computed": cell.rho_computed,
                    "printed": printed,
                }));
            }
            cells.push(cell);
        }
    }

    // Re-verify the proved cells at their smallest instances: the
    // weight-4 claim exhaustively at n=3, the large-weight claim at n=4
    // on a small seeded q-sample per weight.
    let mut counts = Counts::default();
    let thm5 = verify_theorem(
        "thm5",
        &ClaimParams {
            n: Some(3),
            ..ClaimParams::default()
        },
    )?;
    counts.add(thm5.counts);
    let thm6 = verify_theorem(
        "thm6",
        &ClaimParams {
            n: Some(4),
            samples: Some(params.samples.unwrap_or(8)),
            seed: params.seed,
            ..ClaimParams::default()
        },
    )?;
    counts.add(thm6.counts);

    let spot_checks = json!({
        "thm5_n3": { "verdict": thm5.verdict.kind, "counts": thm5.counts },
        "thm6_n4": { "verdict": thm6.verdict.kind, "counts": thm6.counts },
    });
    let refuted = thm5.refuted() || thm6.refuted() || cells.iter().any(|c| !c.consistent);
    let verdict = Verdict {
        kind: if refuted {
            VerdictKind::Refuted
        } else {
            VerdictKind::VerifiedNoneExist
        },
        details: json!({
            "cells": cells,
            "spot_checks": spot_checks,
            "discrepancies": discrepancies,
        }),
    };
    Ok(VerificationReport {
        claim_id: "table1".into(),
        parameters: json!({ "n_range": [3, 10], "wt_range": [4, 7] }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: Some(params.seed),
    })
}

/// Reproduce the published balanced-weight table for odd n up to max_n:
/// ρ values 4, 6, 12, 46, 91, 182, 363 at n = 3, 5, 7, 11, 13, 15, 17,
/// with n = 9 computing 23 against the printed 24 (flagged; both parity
/// readings are reported).
pub fn table2(max_n: usize, _params: &ClaimParams) -> Result<VerificationReport> {
    if max_n < 3 || max_n > 30 || max_n % 2 == 0 {
        return Err(Error::Usage {
            msg: format!("table2 requires odd max_n in 3..=30, got {max_n}"),
        });
    }
    let mut cells = Vec::new();
    let mut discrepancies = Vec::new();
    for n in (3..=max_n).step_by(2) {
        let row = TABLE2_ROWS.iter().find(|&&(pn, _, _)| pn == n);
        let cell = make_cell(
            n,
            1 << (n - 1),
            row.map(|&(_, r, _)| vec![r]),
            row.map(|&(_, _, a)| a),
        )?;
        if cell.rho_matches == Some(false) {
            discrepancies.push(json!({
                "table": "table2",
                "n": n,
                "wt_q": 1u64 << (n - 1),
                "computed": cell.rho_computed,
                "printed": row.map(|&(_, r, _)| r),
                "note": cell.note,
            }));
        }
        cells.push(cell);
    }

    let mut counts = Counts::default();
    let thm5 = verify_theorem(
        "thm5",
        &ClaimParams {
            n: Some(3),
            ..ClaimParams::default()
        },
    )?;
    counts.add(thm5.counts);
    let refuted = thm5.refuted() || cells.iter().any(|c| !c.consistent);
    let verdict = Verdict {
        kind: if refuted {
            VerdictKind::Refuted
        } else {
            VerdictKind::VerifiedNoneExist
        },
        details: json!({
            "cells": cells,
            "spot_checks": { "thm5_n3": { "verdict": thm5.verdict.kind, "counts": thm5.counts } },
            "discrepancies": discrepancies,
        }),
    };
    Ok(VerificationReport {
        claim_id: "table2".into(),
        parameters: json!({ "max_n": max_n, "wt": "2^(n-1)" }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: None,
    })
}

fn make_cell(
    n: usize,
    wt: u64,
    printed_rho: Option<Vec<u64>>,
    answer: Option<PrintedAnswer>,
) -> Result<TableCell> {
    let r = rho(n, wt)?;
    let screen = necessary_condition(n, wt)?;
    let rho_matches = printed_rho.as_ref().map(|p| p.contains(&r.rho));
    // Consistency of the printed answer with our computation: "No" cells
    // must be supported either by the parity screen or by the re-verified
    // theorem; "?" cells must indeed be inconclusive.
    let consistent = match answer {
        Some(PrintedAnswer::NoByParity) => screen.kind == VerdictKind::ImpossibleByParity,
        Some(PrintedAnswer::NoProvedSmallWeight) | Some(PrintedAnswer::NoProvedLargeWeight) => {
            true // backed by the spot-check runs
        }
        Some(PrintedAnswer::Unknown) => {
            // Inconclusive under the printed ρ; the computed ρ may differ
            // (the n=9 balanced row), which the note records.
            true
        }
        None => true,
    };
    let mut note = None;
    if rho_matches == Some(false) {
        let printed = printed_rho.as_ref().unwrap();
        let printed_screen: Vec<String> = printed
            .iter()
            .map(|&p| {
                let required = if wt % 2 == 0 { 0 } else { 2 };
                if p % 4 == required {
                    format!("printed rho {p} leaves the cell inconclusive")
                } else {
                    format!("printed rho {p} would be impossible by parity")
                }
            })
            .collect();
        note = Some(format!(
            "computed rho {} (screen: {:?}); {}",
            r.rho,
            screen.kind,
            printed_screen.join("; ")
        ));
    }
    Ok(TableCell {
        n,
        wt_q: wt,
        rho_computed: r.rho,
        rho_exact: r.exact,
        rho_printed: printed_rho,
        rho_matches,
        screen: screen.kind,
        printed_answer: answer.map(PrintedAnswer::label),
        consistent,
        note,
    })
}

// ---------------------------------------------------------------------------
// Conjecture scan

/// Scan (n, wt) cells for counterexamples to the non-existence conjecture:
/// the parity screen runs first, and only inconclusive cells proceed to
/// the exhaustive (or sampled) search over non-affine q of that weight.
/// Any non-affine q-nearly bent function found is a refutation and is
/// reported with complete reproduction data.
pub fn conjecture_scan(
    n: usize,
    wt_range: RangeInclusive<u64>,
    cfg: &SearchConfig,
) -> Result<VerificationReport> {
    let cap = full_enum_cap();
    if n > cap {
        return Err(Error::Capacity {
            what: "conjecture scan",
            requested: n,
            cap,
        });
    }
    let half = 1u64 << (n - 1);
    let (lo, hi) = (*wt_range.start(), *wt_range.end());
    if lo < 2 || hi > half || lo > hi {
        return Err(Error::WeightRange {
            n,
            wt: hi,
            reason: "conjecture weight range must lie in 2..=2^(n-1)",
        });
    }

    let candidates: Vec<u64> = balanced_masks(n, cfg.fix_zero).collect();
    let mut cells = Vec::new();
    let mut counts = Counts::default();
    let mut all_counterexamples = Vec::new();

    for wt in lo..=hi {
        let screen = necessary_condition(n, wt)?;
        if screen.kind == VerdictKind::ImpossibleByParity {
            cells.push(json!({
                "n": n, "wt_q": wt,
                "screened": true,
                "verdict": screen,
            }));
            continue;
        }
        let mut affine_excluded = 0u64;
        let q_list: Vec<(u64, BoolFunc)> = if let Some(spec) = cfg.sample_q {
            sample_distinct_of_weight(n, wt, spec.count, spec.seed ^ wt, true)
                .into_iter()
                .map(|q| (wt, q))
                .collect()
        } else {
            weight_masks(1 << n, wt as u32)
                .filter_map(|mask| {
                    let q = BoolFunc::from_mask(n, mask);
                    if q.degree() <= 1 {
                        affine_excluded += 1;
                        None
                    } else {
                        Some((wt, q))
                    }
                })
                .collect()
        };
        let progress = Progress::new(
            format!("conjecture n={n} wt={wt}"),
            (q_list.len() * candidates.len()) as u64,
        );
        let outcome = run_none_exist_population(n, &q_list, &candidates, cfg, &progress)?;
        counts.add(outcome.counts);
        let refuted = !outcome.survivors.is_empty();
        for (q, mask, widx) in &outcome.survivors {
            let f = BoolFunc::from_mask(n, *mask);
            let spectrum = qtransform::q_spectrum(&f, q, qtransform::SpectrumMode::Full)?;
            all_counterexamples.push(json!({
                "n": n,
                "wt_q": wt,
                "q": FuncEcho::of(q),
                "f": FuncEcho::of(&f),
                "rho": rho(n, wt)?,
                "witness_rho": widx.map(|k| nth_gl_matrix(n, k)),
                "spectrum": spectrum.histogram,
                "max_abs": spectrum.max_abs,
            }));
        }
        cells.push(json!({
            "n": n, "wt_q": wt,
            "screened": false,
            "q_population": q_list.len(),
            "affine_q_excluded": affine_excluded,
            "refuted": refuted,
            "affine_witnesses": outcome.affine_survivors.len(),
        }));
    }

    let verdict = if all_counterexamples.is_empty() {
        Verdict {
            kind: VerdictKind::VerifiedNoneExist,
            details: json!({ "cells": cells }),
        }
    } else {
        Verdict {
            kind: VerdictKind::Refuted,
            details: json!({
                "cells": cells,
                "counterexamples": all_counterexamples,
            }),
        }
    };
    Ok(VerificationReport {
        claim_id: "conjecture".into(),
        parameters: json!({
            "n": n,
            "wt_range": [lo, hi],
            "config": cfg,
        }),
        verdict,
        counts,
        elapsed_ms: None,
        seed: cfg.sample_q.map(|s| s.seed),
    })
}
