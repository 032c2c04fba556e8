//! Spectral bands of the periodic approximants.
//!
//! At level n the approximant spectrum is {|h_n| <= 2}, a disjoint union of
//! 2^n closed bands indexed by words in {0,1}^n ordered lexicographically
//! from left to right on the real line. Each band carries the unique zero
//! of h_n in its interior, and the cumulative zero set R_n = union of all
//! zeros up to level n interlaces the next generation: every level-(n+1)
//! band lives strictly between two consecutive points of R_n.
//!
//! All numerics here produce enclosures; everything that can be decided
//! combinatorially (which endpoints are inherited from earlier zeros, the
//! ordering of zeros) is decided combinatorially and the floats only
//! cross-check.

use crate::real::{target_width, Enc, Real};
use crate::traces::{eval_traces, ModelParams};
use rayon::prelude::*;
use rug::Float;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum BandError {
    #[error("no sign change found while bracketing {side} of band {code}")]
    BracketFailure { code: BandCode, side: &'static str },
    #[error("band code {0:?} contains characters other than 0/1")]
    BadCode(String),
    #[error("level table mismatch: expected level {expected}, got {got}")]
    LevelMismatch { expected: usize, got: usize },
}

/// A word in {0,1}^n addressing one band of the level-n approximant.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct BandCode {
    bits: Vec<u8>,
}

impl BandCode {
    pub fn root() -> Self {
        BandCode { bits: Vec::new() }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BandCode { bits: bits.to_vec() }
    }

    pub fn level(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn last(&self) -> Option<u8> {
        self.bits.last().copied()
    }

    /// Left-to-right position of the band at its level: the word read as a
    /// big-endian binary integer.
    pub fn rank(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn child(&self, bit: u8) -> Self {
        let mut bits = self.bits.clone();
        bits.push(bit);
        BandCode { bits }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.bits.is_empty() {
            None
        } else {
            Some(BandCode {
                bits: self.bits[..self.bits.len() - 1].to_vec(),
            })
        }
    }

    pub fn prefix(&self, k: usize) -> Self {
        BandCode {
            bits: self.bits[..k].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &BandCode) -> bool {
        other.bits.len() >= self.bits.len() && other.bits[..self.bits.len()] == self.bits[..]
    }

    /// Order of the interior zeros on the real line: compare letterwise
    /// with 0 < (end of word) < 1, padding the shorter word.
    pub fn zero_cmp(&self, other: &BandCode) -> Ordering {
        let n = self.bits.len().max(other.bits.len());
        for i in 0..n {
            // 0 -> 0, missing -> 1, 1 -> 2
            let a = self.bits.get(i).map_or(1, |&b| 2 * b);
            let b = other.bits.get(i).map_or(1, |&b| 2 * b);
            match a.cmp(&b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }

    /// Whether the left endpoint a is a zero from an earlier level
    /// (a member of R_{n-1}): exactly the words of shape τ 1 0^t with
    /// |τ| even.
    pub fn left_end_inherited(&self) -> bool {
        let trimmed = match self.bits.iter().rposition(|&b| b == 1) {
            Some(p) => p, // index of last 1
            None => return false,
        };
        trimmed % 2 == 0
    }

    /// Whether the right endpoint b is inherited: words of shape τ 0 1^t
    /// with |τ| odd.
    pub fn right_end_inherited(&self) -> bool {
        let trimmed = match self.bits.iter().rposition(|&b| b == 0) {
            Some(p) => p,
            None => return false,
        };
        trimmed % 2 == 1
    }

    /// Sign carried by the last letter: +1 after 0 (h_n falls through the
    /// band), -1 after 1 or for the empty word (h_n rises).
    pub fn slope_sign(&self) -> i32 {
        match self.last() {
            Some(0) => 1,
            _ => -1,
        }
    }
}

impl fmt::Display for BandCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            write!(f, "∅")
        } else {
            for b in &self.bits {
                write!(f, "{b}")?;
            }
            Ok(())
        }
    }
}

impl FromStr for BandCode {
    type Err = BandError;

    fn from_str(s: &str) -> Result<Self, BandError> {
        if s.is_empty() || s == "∅" {
            return Ok(BandCode::root());
        }
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(BandError::BadCode(s.to_owned())),
            }
        }
        Ok(BandCode { bits })
    }
}

/// One band [a, b] with its interior zero z of h_n.
#[derive(Clone, Debug)]
pub struct Band {
    pub code: BandCode,
    pub a: Enc,
    pub z: Enc,
    pub b: Enc,
}

/// A point of the cumulative zero set together with the band whose zero
/// it is.
#[derive(Clone, Debug)]
pub struct RPoint {
    pub value: Enc,
    pub owner: BandCode,
}

/// All bands of one level plus the cumulative zero set R_level, both in
/// ascending spatial order.
#[derive(Clone, Debug)]
pub struct LevelTable {
    pub level: usize,
    pub bands: Vec<Band>,
    pub zeros: Vec<RPoint>,
}

impl LevelTable {
    pub fn band(&self, code: &BandCode) -> &Band {
        &self.bands[code.rank() as usize]
    }
}

fn h_n(params: &ModelParams, x: &Real, n: usize) -> Real {
    let mut tv = eval_traces(params, x, n);
    tv.values.pop().expect("nonempty")
}

fn enc_around(x: Real) -> Enc {
    let mut lo = x.clone();
    lo.next_down();
    let mut hi = x;
    hi.next_up();
    Enc::new(lo, hi)
}

/// Level 0: the single band [λ-2, λ+2] with zero at λ.
pub fn level0(params: &ModelParams) -> LevelTable {
    let lam = params.lambda.clone();
    let a = enc_around(lam.clone() - 2u32);
    let b = enc_around(lam.clone() + 2u32);
    let z = Enc::point(lam);
    let band = Band {
        code: BandCode::root(),
        a,
        z: z.clone(),
        b,
    };
    LevelTable {
        level: 0,
        bands: vec![band],
        zeros: vec![RPoint {
            value: z,
            owner: BandCode::root(),
        }],
    }
}

/// Bisect pred (true on the left, false on the right) down to `width`.
fn bisect<F: Fn(&Real) -> bool>(mut lo: Real, mut hi: Real, width: &Real, pred: F) -> Enc {
    let mut guard = 0;
    while hi.clone() - &lo > *width {
        let mut mid = lo.clone() + &hi;
        mid /= 2;
        if mid == lo || mid == hi {
            break; // float resolution reached
        }
        if pred(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        guard += 1;
        if guard > 8 * lo.prec() as usize + 256 {
            break;
        }
    }
    Enc::new(lo, hi)
}

/// Starting point for outward doubling beyond the spectrum.
fn outer_start(params: &ModelParams, negative: bool) -> Real {
    let m = params.lambda.clone() + 3u32;
    if negative {
        -m
    } else {
        m
    }
}

fn double_until<F: Fn(&Real) -> bool>(
    start: Real,
    pred: F,
    code: &BandCode,
    side: &'static str,
) -> Result<Real, BandError> {
    let mut x = start;
    for _ in 0..64 {
        if pred(&x) {
            return Ok(x);
        }
        x *= 2;
    }
    Err(BandError::BracketFailure {
        code: code.clone(),
        side,
    })
}

struct Slot<'a> {
    left: Option<&'a Enc>,
    right: Option<&'a Enc>,
}

/// Isolate the zero z of h_n inside the given R_{n-1} slot. The predicate
/// sign(h_n) == slope_sign is monotone across the whole slot and bounded
/// away from the ±2 values taken at the slot boundaries, so plain
/// bisection is certified.
fn isolate_zero(
    params: &ModelParams,
    code: &BandCode,
    slot: &Slot,
    width: &Real,
) -> Result<Enc, BandError> {
    let n = code.level();
    let s = code.slope_sign();
    let pred = |x: &Real| {
        let h = h_n(params, x, n);
        if s > 0 {
            h > 0
        } else {
            h < 0
        }
    };
    let lo = match slot.left {
        Some(enc) => {
            let x = enc.hi.clone();
            if !pred(&x) {
                return Err(BandError::BracketFailure {
                    code: code.clone(),
                    side: "zero (left)",
                });
            }
            x
        }
        None => double_until(outer_start(params, true), pred, code, "zero (left)")?,
    };
    let hi = match slot.right {
        Some(enc) => {
            let x = enc.lo.clone();
            if pred(&x) {
                return Err(BandError::BracketFailure {
                    code: code.clone(),
                    side: "zero (right)",
                });
            }
            x
        }
        None => double_until(outer_start(params, false), |x| !pred(x), code, "zero (right)")?,
    };
    if lo >= hi {
        // overlapping slot boundary enclosures: the slot is too narrow to
        // bracket at this precision
        return Err(BandError::BracketFailure {
            code: code.clone(),
            side: "zero (empty slot)",
        });
    }
    Ok(bisect(lo, hi, width, pred))
}

/// Noise floor below which a single h_n evaluation is not trusted to
/// decide a sign.
fn noise_floor(params: &ModelParams) -> Real {
    Float::with_val(
        params.precision_bits,
        Float::i_exp(1, -(params.precision_bits as i32) / 2 + 2),
    )
}

/// Isolate the left band edge a (root of s·h_n - 2, positive to the left
/// in the gap that separates the band from the slot boundary, negative in
/// the band interior). The slot boundary itself is a point where s·h_n = 2
/// exactly, so probes step geometrically into the gap: a probe with a
/// certified gap sign yields a bisection bracket, a probe with a certified
/// interior sign bounds the edge inside a small superset enclosure, which
/// is returned honestly when the gap is too shallow to resolve.
fn isolate_left_edge(
    params: &ModelParams,
    code: &BandCode,
    slot: &Slot,
    z: &Enc,
    width: &Real,
) -> Result<Enc, BandError> {
    let n = code.level();
    let s = code.slope_sign();
    let g = |x: &Real| {
        let h = h_n(params, x, n);
        if s > 0 {
            h - 2u32
        } else {
            -h - 2u32
        }
    };
    let hi = z.lo.clone();
    let boundary = match slot.left {
        Some(enc) => enc,
        None => {
            let lo = double_until(outer_start(params, true), |x| g(x) > 0, code, "left edge")?;
            return Ok(bisect(lo, hi, width, |x| g(x) > 0));
        }
    };
    let mu = noise_floor(params);
    let mut step = boundary.width().max(width);
    for _ in 0..64 {
        let x = boundary.hi.clone() + &step;
        if x >= hi {
            break;
        }
        let v = g(&x);
        if v > mu {
            return Ok(bisect(x, hi, width, |x| g(x) > 0));
        }
        if v < -mu.clone() {
            // already inside the band: the edge sits between the slot
            // boundary and this probe
            return Ok(Enc::new(boundary.lo.clone(), x));
        }
        step *= 2;
    }
    Err(BandError::BracketFailure {
        code: code.clone(),
        side: "left edge",
    })
}

/// Mirror image of `isolate_left_edge` for the right band edge b (root of
/// s·h_n + 2, negative in the gap to the right of the band).
fn isolate_right_edge(
    params: &ModelParams,
    code: &BandCode,
    slot: &Slot,
    z: &Enc,
    width: &Real,
) -> Result<Enc, BandError> {
    let n = code.level();
    let s = code.slope_sign();
    let g = |x: &Real| {
        let h = h_n(params, x, n);
        if s > 0 {
            h + 2u32
        } else {
            -h + 2u32
        }
    };
    let lo = z.hi.clone();
    let boundary = match slot.right {
        Some(enc) => enc,
        None => {
            let hi = double_until(outer_start(params, false), |x| g(x) < 0, code, "right edge")?;
            return Ok(bisect(lo, hi, width, |x| g(x) > 0));
        }
    };
    let mu = noise_floor(params);
    let mut step = boundary.width().max(width);
    for _ in 0..64 {
        let x = boundary.lo.clone() - &step;
        if x <= lo {
            break;
        }
        let v = g(&x);
        if v < -mu.clone() {
            return Ok(bisect(lo, x, width, |x| g(x) > 0));
        }
        if v > mu {
            return Ok(Enc::new(x, boundary.hi.clone()));
        }
        step *= 2;
    }
    Err(BandError::BracketFailure {
        code: code.clone(),
        side: "right edge",
    })
}

fn build_one(
    params: &ModelParams,
    code: &BandCode,
    slot: &Slot,
    width: &Real,
) -> Result<Band, BandError> {
    let z = isolate_zero(params, code, slot, width)?;
    let a = if code.left_end_inherited() {
        slot.left
            .expect("inherited left endpoint implies an interior slot")
            .clone()
    } else {
        isolate_left_edge(params, code, slot, &z, width)?
    };
    let b = if code.right_end_inherited() {
        slot.right
            .expect("inherited right endpoint implies an interior slot")
            .clone()
    } else {
        isolate_right_edge(params, code, slot, &z, width)?
    };
    Ok(Band {
        code: code.clone(),
        a,
        z,
        b,
    })
}

/// How many times the working precision may be doubled while chasing
/// structures that collapse below the current resolution.
pub const MAX_ESCALATIONS: u32 = 5;

fn code_of_rank(n: usize, rank: u64) -> BandCode {
    let mut bits = Vec::with_capacity(n);
    for i in (0..n).rev() {
        bits.push(((rank >> i) & 1) as u8);
    }
    BandCode::from_bits(&bits)
}

/// Bands of level prev.level + 1, each isolated inside its R_n slot.
///
/// Near the spectrum edges consecutive-level zeros approach each other
/// doubly exponentially, so a band can fall entirely inside the enclosure
/// of its slot boundary. Whenever bracketing or a certified separation
/// fails, the offending bands are rebuilt (and the slot boundaries
/// re-isolated through the chain) at doubled precision, deterministically
/// in rank order, until every relation is certified.
pub fn build_level(params: &ModelParams, prev: &LevelTable) -> Result<LevelTable, BandError> {
    let n = prev.level + 1;
    let count = 1u64 << n;
    let width = target_width(params.precision_bits, n);

    let mut boundaries: Vec<RPoint> = prev.zeros.clone();
    let mut bands: Vec<Option<Band>> = (0..count)
        .into_par_iter()
        .map(|rank| {
            let code = code_of_rank(n, rank);
            let slot = Slot {
                left: if rank == 0 {
                    None
                } else {
                    Some(&boundaries[rank as usize - 1].value)
                },
                right: boundaries.get(rank as usize).map(|r| &r.value),
            };
            build_one(params, &code, &slot, &width).ok()
        })
        .collect();

    let mut prec = params.precision_bits;
    for attempt in 0..=MAX_ESCALATIONS {
        let (bad_bands, bad_bounds) = scan_problems(&bands, &boundaries);
        if bad_bands.is_empty() {
            break;
        }
        if attempt == MAX_ESCALATIONS {
            let rank = bad_bands[0];
            return Err(BandError::BracketFailure {
                code: code_of_rank(n, rank as u64),
                side: "precision exhausted",
            });
        }
        prec *= 2;
        let bump = prec - params.precision_bits;
        let p_hi = params
            .with_precision(prec)
            .expect("precision escalation is always valid");
        for idx in bad_bounds {
            let owner = boundaries[idx].owner.clone();
            // a failed refinement keeps the old enclosure; the next doubling
            // retries it
            let Ok(refined) = chain_zero(&p_hi, params.precision_bits, &owner) else {
                continue;
            };
            boundaries[idx].value = refined;
            // inherited endpoints are exact copies of the boundary; re-copy
            // so neighbours stay consistent without rebuilding them
            if let Some(Some(b)) = bands.get_mut(idx) {
                if b.code.right_end_inherited() {
                    b.b = boundaries[idx].value.clone();
                }
            }
            if let Some(Some(b)) = bands.get_mut(idx + 1) {
                if b.code.left_end_inherited() {
                    b.a = boundaries[idx].value.clone();
                }
            }
        }
        let w_hi = crate::real::target_width_bumped(prec, n, bump);
        for rank in bad_bands {
            let code = code_of_rank(n, rank as u64);
            let slot = Slot {
                left: if rank == 0 {
                    None
                } else {
                    Some(&boundaries[rank - 1].value)
                },
                right: boundaries.get(rank).map(|r| &r.value),
            };
            bands[rank] = build_one(&p_hi, &code, &slot, &w_hi).ok();
        }
    }
    let bands: Vec<Band> = bands.into_iter().map(|b| b.expect("scanned")).collect();

    // R_n = refined old zeros interleaved with the new ones.
    let mut zeros = Vec::with_capacity(2 * count as usize - 1);
    for (i, band) in bands.iter().enumerate() {
        zeros.push(RPoint {
            value: band.z.clone(),
            owner: band.code.clone(),
        });
        if let Some(r) = boundaries.get(i) {
            zeros.push(r.clone());
        }
    }

    Ok(LevelTable {
        level: n,
        bands,
        zeros,
    })
}

/// Ranks of bands (and indices of slot boundaries) whose relations are not
/// all certified at the current precision.
fn scan_problems(bands: &[Option<Band>], boundaries: &[RPoint]) -> (Vec<usize>, Vec<usize>) {
    let mut bad_bands = Vec::new();
    let mut bad_bounds = Vec::new();
    for (i, slot) in bands.iter().enumerate() {
        let mut bad = false;
        match slot {
            None => bad = true,
            Some(band) => {
                if !(band.a.lt(&band.z) && band.z.lt(&band.b)) {
                    bad = true;
                }
                if i > 0 {
                    let r = &boundaries[i - 1].value;
                    if band.code.left_end_inherited() {
                        if band.a != *r {
                            bad = true;
                        }
                    } else if !r.lt(&band.a) {
                        bad = true;
                        bad_bounds.push(i - 1);
                    }
                }
                if let Some(r) = boundaries.get(i).map(|r| &r.value) {
                    if band.code.right_end_inherited() {
                        if band.b != *r {
                            bad = true;
                        }
                    } else if !band.b.lt(r) {
                        bad = true;
                        bad_bounds.push(i);
                    }
                }
            }
        }
        if bad {
            bad_bands.push(i);
            // rebuilding a band needs both its slot walls sharp
            if i > 0 {
                bad_bounds.push(i - 1);
            }
            if i < boundaries.len() {
                bad_bounds.push(i);
            }
        }
    }
    bad_bounds.sort_unstable();
    bad_bounds.dedup();
    (bad_bands, bad_bounds)
}

/// Convenience: tables for levels 0..=n_max.
pub fn build_levels(params: &ModelParams, n_max: usize) -> Result<Vec<LevelTable>, BandError> {
    let mut tables = vec![level0(params)];
    for _ in 0..n_max {
        let next = build_level(params, tables.last().unwrap())?;
        tables.push(next);
    }
    Ok(tables)
}

/// Zero of h_{|code|} in the band addressed by `code`, found by chain
/// descent at the (possibly escalated) precision of `params`; `base_bits`
/// is the unescalated precision the width schedule is relative to.
fn chain_zero(
    params: &ModelParams,
    base_bits: u32,
    code: &BandCode,
) -> Result<Enc, BandError> {
    let bump = params.precision_bits.saturating_sub(base_bits);
    let n = code.level();
    let mut left: Option<Enc> = None;
    let mut right: Option<Enc> = None;
    for k in 0..=n {
        let pref = code.prefix(k);
        let width = crate::real::target_width_bumped(params.precision_bits, k, bump);
        let slot = Slot {
            left: left.as_ref(),
            right: right.as_ref(),
        };
        let z = isolate_zero(params, &pref, &slot, &width)?;
        if k == n {
            return Ok(z);
        }
        if code.bit(k) == 0 {
            right = Some(z);
        } else {
            left = Some(z);
        }
    }
    unreachable!()
}

/// Descend to a single deep band without building full tables: the slot of
/// σ|k+1 in R_k is (left, z_k) for a 0-child and (z_k, right) for a
/// 1-child, so only one zero per level needs isolating. Escalates
/// precision like `build_level` when the descent loses resolution.
pub fn band_chain(params: &ModelParams, code: &BandCode) -> Result<Band, BandError> {
    let mut prec = params.precision_bits;
    let mut last_err = None;
    for _ in 0..=MAX_ESCALATIONS {
        let p = params
            .with_precision(prec)
            .expect("precision escalation is always valid");
        match band_chain_at(&p, params.precision_bits, code) {
            Ok(band) => return Ok(band),
            Err(e) => last_err = Some(e),
        }
        prec *= 2;
    }
    Err(last_err.expect("at least one attempt"))
}

fn band_chain_at(
    params: &ModelParams,
    base_bits: u32,
    code: &BandCode,
) -> Result<Band, BandError> {
    let bump = params.precision_bits.saturating_sub(base_bits);
    let n = code.level();
    let mut left: Option<Enc> = None;
    let mut right: Option<Enc> = None;
    for k in 0..n {
        let pref = code.prefix(k);
        let width = crate::real::target_width_bumped(params.precision_bits, k, bump);
        let slot = Slot {
            left: left.as_ref(),
            right: right.as_ref(),
        };
        let z = isolate_zero(params, &pref, &slot, &width)?;
        if code.bit(k) == 0 {
            right = Some(z);
        } else {
            left = Some(z);
        }
    }
    let width = crate::real::target_width_bumped(params.precision_bits, n, bump);
    let slot = Slot {
        left: left.as_ref(),
        right: right.as_ref(),
    };
    let band = build_one(params, code, &slot, &width)?;
    if band.a.lt(&band.z) && band.z.lt(&band.b) {
        Ok(band)
    } else {
        Err(BandError::BracketFailure {
            code: code.clone(),
            side: "chain separation",
        })
    }
}

/// Violations found by the structural checks; empty means every claim was
/// certified at the working precision.
pub type Violations = Vec<String>;

/// Structural invariants of one freshly built level against its
/// predecessor: spatial order, disjointness, interlacing with R_{n-1},
/// inherited endpoints, the Floquet values ±2 at the edges, and the sign
/// of h_n' at each interior zero.
pub fn verify_level(params: &ModelParams, cur: &LevelTable, prev: &LevelTable) -> Violations {
    let mut out = Vec::new();
    let n = cur.level;
    if prev.level + 1 != n {
        out.push(format!("level mismatch: {} after {}", n, prev.level));
        return out;
    }

    for (i, band) in cur.bands.iter().enumerate() {
        if band.code.rank() != i as u64 {
            out.push(format!("band {} out of place at index {i}", band.code));
        }
        if !(band.a.lt(&band.z) && band.z.lt(&band.b)) {
            out.push(format!("band {}: a < z < b not certified", band.code));
        }
        // interlacing: the band stays inside its R_{n-1} slot and inherited
        // endpoints coincide with the slot boundary (the refined copies of
        // the earlier zeros live at the odd indices of cur.zeros)
        if i > 0 {
            let r = &cur.zeros[2 * i - 1].value;
            if band.code.left_end_inherited() {
                if band.a != *r {
                    out.push(format!("band {}: inherited a differs from slot", band.code));
                }
            } else if !r.lt(&band.a) {
                out.push(format!("band {}: a not right of slot boundary", band.code));
            }
        } else if band.code.left_end_inherited() {
            out.push(format!("band {}: leftmost band cannot inherit a", band.code));
        }
        if let Some(r) = cur.zeros.get(2 * i + 1).map(|r| &r.value) {
            if band.code.right_end_inherited() {
                if band.b != *r {
                    out.push(format!("band {}: inherited b differs from slot", band.code));
                }
            } else if !band.b.lt(r) {
                out.push(format!("band {}: b not left of slot boundary", band.code));
            }
        } else if band.code.right_end_inherited() {
            out.push(format!("band {}: rightmost band cannot inherit b", band.code));
        }
        // disjointness from the previous band
        if i > 0 {
            let prev_band = &cur.bands[i - 1];
            if !prev_band.b.lt(&band.a) {
                out.push(format!(
                    "bands {} and {} not certified disjoint",
                    prev_band.code, band.code
                ));
            }
        }
        // Floquet edge values (±2 up to the slope over the enclosure width)
        // and interior slope sign
        let s = band.code.slope_sign();
        let slack = Float::with_val(params.precision_bits, 1e-6);
        for (enc, target, side) in [(&band.a, 2 * s, "a"), (&band.b, -2 * s, "b")] {
            // escalated enclosures need evaluation at their own precision,
            // otherwise rounding noise (~|h'|·2^-p) swamps the comparison
            let pe = params
                .with_precision(enc.prec().max(params.precision_bits))
                .expect("raising precision is always valid");
            let tv = crate::traces::eval_derivatives(&pe, &enc.mid(), n);
            let h = tv.values[n].clone();
            let d = tv.derivs.unwrap().pop().unwrap();
            let bound = d.abs() * enc.width() + &slack;
            if (h - target).abs() > bound {
                out.push(format!("band {}: h_n({side}) != {target}", band.code));
            }
        }
        let pe = params
            .with_precision(band.z.prec().max(params.precision_bits))
            .expect("raising precision is always valid");
        let tv = crate::traces::eval_derivatives(&pe, &band.z.mid(), n);
        let dz = tv.derivs.unwrap().pop().unwrap();
        let want_positive = band.code.last() == Some(1);
        if (dz > 0) != want_positive || dz == 0 {
            out.push(format!("band {}: wrong sign of h_n'(z)", band.code));
        }
    }

    // cumulative zeros strictly sorted
    for w in cur.zeros.windows(2) {
        if !w[0].value.lt(&w[1].value) && w[0].value != w[1].value {
            out.push(format!(
                "zeros {} and {} not certified ordered",
                w[0].owner, w[1].owner
            ));
        }
    }
    out
}

/// Check that numerical zero positions agree with the combinatorial order
/// on words (0 < end-of-word < 1).
pub fn zero_order_check(tables: &[LevelTable], pairs: &[(BandCode, BandCode)]) -> Violations {
    let mut out = Vec::new();
    for (s, t) in pairs {
        let zs = &tables[s.level()].band(s).z;
        let zt = &tables[t.level()].band(t).z;
        let want = s.zero_cmp(t);
        let got = match zs.cmp_certified(zt) {
            Ok(o) => o,
            Err(_) => {
                if want != Ordering::Equal {
                    out.push(format!("zeros of {s} and {t} not separated"));
                }
                continue;
            }
        };
        if got != want {
            out.push(format!("zero order of {s} vs {t}: want {want:?}, got {got:?}"));
        }
    }
    out
}

/// Inside a band with last letter 0 the product h_0 h_1 ... h_{n-1} is
/// negative; with last letter 1 it is positive. Checked at interior
/// sample points.
pub fn sign_product_check(params: &ModelParams, band: &Band, samples: usize) -> Violations {
    let mut out = Vec::new();
    let n = band.code.level();
    if n == 0 {
        return out;
    }
    let want_positive = band.code.last() == Some(1);
    let lo = band.a.hi.clone();
    let hi = band.b.lo.clone();
    // near the spectrum edges the band is doubly-exponentially narrower
    // than the working precision resolves; evaluate at whatever precision
    // keeps the interior samples certifiably inside the band
    let len = hi.clone() - &lo;
    if !(len > 0) {
        out.push(format!("band {}: interior not resolved", band.code));
        return out;
    }
    let needed = (lo.get_exp().unwrap_or(0) - len.get_exp().unwrap_or(0)).max(0) as u32 + 64;
    let p_hi = params
        .with_precision(params.precision_bits.max(needed))
        .expect("precision escalation is always valid");
    for i in 0..samples {
        // strictly interior sample grid
        let t = (2 * i + 1) as f64 / (2 * samples) as f64;
        let x = Float::with_val(p_hi.precision_bits, &lo)
            + Float::with_val(p_hi.precision_bits, &len) * Float::with_val(64, t);
        let tv = eval_traces(&p_hi, &x, n - 1);
        let mut sign = 1i32;
        let mut degenerate = false;
        for h in &tv.values {
            if *h < 0 {
                sign = -sign;
            } else if *h == 0 {
                degenerate = true;
            }
        }
        if degenerate {
            continue;
        }
        if (sign > 0) != want_positive {
            out.push(format!(
                "band {}: wrong product sign at sample {i}/{samples}",
                band.code
            ));
        }
    }
    out
}

/// Where an energy sits relative to the level-`depth` approximant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnergyLocation {
    /// Inside the band with this code at the requested depth.
    InBand(BandCode),
    /// Certified inside the zero enclosure of this band and h_n ≈ 0.
    AtZero(BandCode),
    /// Certified outside every band at this level.
    OutsideAt(usize),
    /// Within enclosure slop of a band edge; undecidable at this precision.
    Ambiguous(BandCode),
}

/// Locate an energy by descending the band chain level by level.
pub fn locate_energy(
    params: &ModelParams,
    energy: &Real,
    depth: usize,
) -> Result<EnergyLocation, BandError> {
    let mut code = BandCode::root();
    let mut left: Option<Enc> = None;
    let mut right: Option<Enc> = None;
    for k in 0..=depth {
        let width = target_width(params.precision_bits, k);
        let slot = Slot {
            left: left.as_ref(),
            right: right.as_ref(),
        };
        let band = build_one(params, &code, &slot, &width)?;
        if *energy < band.a.lo {
            return Ok(EnergyLocation::OutsideAt(k));
        }
        if *energy > band.b.hi {
            return Ok(EnergyLocation::OutsideAt(k));
        }
        if *energy < band.a.hi || *energy > band.b.lo {
            return Ok(EnergyLocation::Ambiguous(code));
        }
        if band.z.contains(energy) {
            let h = h_n(params, energy, k);
            let tol = Float::with_val(
                params.precision_bits,
                Float::i_exp(1, -(params.precision_bits as i32) / 2),
            );
            if h.abs() < tol {
                return Ok(EnergyLocation::AtZero(code));
            }
        }
        if k == depth {
            return Ok(EnergyLocation::InBand(code));
        }
        if *energy < band.z.lo {
            right = Some(band.z.clone());
            code = code.child(0);
        } else if *energy > band.z.hi {
            left = Some(band.z.clone());
            code = code.child(1);
        } else {
            return Ok(EnergyLocation::Ambiguous(code));
        }
    }
    unreachable!()
}
