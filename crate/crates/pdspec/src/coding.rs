//! The symbolic side of the band hierarchy.
//!
//! Infinite admissible letter sequences starting from `3_el` or `0_e` code
//! the points of the limit set. Everything here is exact: eventually
//! periodic sequences in canonical form, two orders (a weak total order
//! and a strong partial one), the binary-label map Π with its finite
//! truncation Π*, the dyadic evaluation ε, the integrated density of
//! states, the gap-edge partner maps, and gap enumeration with exact
//! rational labels.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bands::{BandCode, LevelTable};
use crate::covering::{
    letter_lt_strong, letter_lt_weak, optimal_covering, BandType, CoveringError,
};
use crate::real::Enc;
use BandType::*;

#[derive(Debug, thiserror::Error)]
pub enum CodingError {
    #[error("inadmissible word at position {0}")]
    Inadmissible(usize),
    #[error("empty period")]
    EmptyPeriod,
    #[error("not a gap edge class")]
    NotGapEdgeClass,
    #[error("level tables through {0} are required")]
    DepthExceeded(usize),
    #[error("binary code inversion failed: {0}")]
    InversionFailed(String),
    #[error(transparent)]
    Covering(#[from] CoveringError),
}

/// An eventually periodic admissible sequence, canonicalized to the
/// shortest period and shortest preperiod.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SymbolicPoint {
    pre: Vec<BandType>,
    per: Vec<BandType>,
}

fn shrink_period<T: PartialEq + Clone>(per: &mut Vec<T>) {
    let n = per.len();
    for d in 1..n {
        if n % d == 0 && (d..n).all(|i| per[i] == per[i % d]) {
            per.truncate(d);
            return;
        }
    }
}

fn absorb_preperiod<T: PartialEq + Clone>(pre: &mut Vec<T>, per: &mut Vec<T>) {
    while let Some(last) = pre.last() {
        if *last == *per.last().expect("nonempty period") {
            let tail = per.pop().expect("nonempty period");
            per.insert(0, tail);
            pre.pop();
        } else {
            break;
        }
    }
}

impl SymbolicPoint {
    /// Canonicalize and validate: the concatenation must be admissible
    /// and begin with a start letter.
    pub fn new(pre: Vec<BandType>, per: Vec<BandType>) -> Result<Self, CodingError> {
        if per.is_empty() {
            return Err(CodingError::EmptyPeriod);
        }
        let mut pre = pre;
        let mut per = per;
        shrink_period(&mut per);
        absorb_preperiod(&mut pre, &mut per);
        let p = Self { pre, per };
        if !p.letter(0).is_start() {
            return Err(CodingError::Inadmissible(0));
        }
        let check = p.pre.len() + p.per.len();
        for i in 0..check {
            if !p.letter(i).is_edge(p.letter(i + 1)) {
                return Err(CodingError::Inadmissible(i));
            }
        }
        Ok(p)
    }

    pub fn pre(&self) -> &[BandType] {
        &self.pre
    }

    pub fn per(&self) -> &[BandType] {
        &self.per
    }

    pub fn letter(&self, i: usize) -> BandType {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.per[(i - self.pre.len()) % self.per.len()]
        }
    }

    /// The first n+1 letters.
    pub fn prefix(&self, n: usize) -> Vec<BandType> {
        (0..=n).map(|i| self.letter(i)).collect()
    }

    /// The gap-edge (or exceptional) class read off the periodic tail.
    pub fn edge_class(&self) -> Option<EdgeClass> {
        if self.per.len() != 2 {
            return None;
        }
        let pair = (self.per[0], self.per[1]);
        let unordered = |a, b| pair == (a, b) || pair == (b, a);
        Some(if unordered(T2o, T1e) {
            EdgeClass::LeftOdd
        } else if unordered(T0o, T3el) {
            EdgeClass::RightOdd
        } else if unordered(T0e, T3or) {
            EdgeClass::LeftEven
        } else if unordered(T2e, T1o) {
            EdgeClass::RightEven
        } else if unordered(T0o, T3er) {
            EdgeClass::TildeLeft
        } else if unordered(T0e, T3ol) {
            EdgeClass::TildeRight
        } else if unordered(T2e, T2o) {
            EdgeClass::F
        } else {
            return None;
        })
    }
}

impl std::fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for t in &self.pre {
            write!(f, "{t} ")?;
        }
        write!(f, "(")?;
        let mut first = true;
        for t in &self.per {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        write!(f, ")∞")
    }
}

/// The smallest point: 3_el (0_o 3_el)^∞.
pub fn omega_min() -> SymbolicPoint {
    SymbolicPoint::new(vec![T3el], vec![T0o, T3el]).expect("admissible")
}

/// The largest point: (0_e 3_or)^∞.
pub fn omega_max() -> SymbolicPoint {
    SymbolicPoint::new(vec![], vec![T0e, T3or]).expect("admissible")
}

/// The seven eventually-2-periodic tail classes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EdgeClass {
    /// tail (2_o 1_e)^∞ — left edges of odd type-I gaps (zeros of odd levels)
    LeftOdd,
    /// tail (0_o 3_el)^∞ — right edges of odd type-I gaps
    RightOdd,
    /// tail (0_e 3_or)^∞ — left edges of even type-I gaps
    LeftEven,
    /// tail (2_e 1_o)^∞ — right edges of even type-I gaps (zeros of even levels)
    RightEven,
    /// tail (0_o 3_er)^∞ — left edges of type-II gaps
    TildeLeft,
    /// tail (0_e 3_ol)^∞ — right edges of type-II gaps
    TildeRight,
    /// tail (2_e 2_o)^∞ — the exceptional non-gap-edge class
    F,
}

fn letter_bound(a: &SymbolicPoint, b: &SymbolicPoint) -> usize {
    let pre = a.pre.len().max(b.pre.len());
    pre + num_integer::lcm(a.per.len(), b.per.len())
}

/// The weak (total) order: compare at the first differing letter.
pub fn cmp_weak(a: &SymbolicPoint, b: &SymbolicPoint) -> Ordering {
    for i in 0..=letter_bound(a, b) {
        let (x, y) = (a.letter(i), b.letter(i));
        if x != y {
            return if letter_lt_weak(x, y) {
                Ordering::Less
            } else {
                debug_assert!(letter_lt_weak(y, x));
                Ordering::Greater
            };
        }
    }
    Ordering::Equal
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StrongCmp {
    Less,
    Greater,
    Equal,
    /// weakly ordered but overlap is possible at the first difference
    Incomparable,
}

/// The strong (partial) order.
pub fn cmp_strong(a: &SymbolicPoint, b: &SymbolicPoint) -> StrongCmp {
    for i in 0..=letter_bound(a, b) {
        let (x, y) = (a.letter(i), b.letter(i));
        if x != y {
            return if letter_lt_strong(x, y) {
                StrongCmp::Less
            } else if letter_lt_strong(y, x) {
                StrongCmp::Greater
            } else {
                StrongCmp::Incomparable
            };
        }
    }
    StrongCmp::Equal
}

/// Binary code of a finite admissible word: the initial bit (0 for a 3_el
/// start, nothing for 0_e) followed by the edge labels.
pub fn pi_star(w: &[BandType]) -> Result<Vec<u8>, CodingError> {
    let first = *w.first().ok_or(CodingError::Inadmissible(0))?;
    let mut code: Vec<u8> = match first {
        T0e => vec![],
        T3el => vec![0],
        _ => return Err(CodingError::Inadmissible(0)),
    };
    for (i, pair) in w.windows(2).enumerate() {
        let label = pair[0]
            .edge_label(pair[1])
            .ok_or(CodingError::Inadmissible(i + 1))?;
        code.extend_from_slice(label);
    }
    Ok(code)
}

/// An eventually periodic binary sequence in canonical form. An empty
/// period means the tail 0^∞.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BinaryCode {
    pre: Vec<u8>,
    per: Vec<u8>,
}

impl BinaryCode {
    pub fn new(pre: Vec<u8>, per: Vec<u8>) -> Self {
        let mut pre = pre;
        let mut per = per;
        if !per.is_empty() {
            shrink_period(&mut per);
            if per == [0] {
                per.clear();
            }
        }
        if per.is_empty() {
            while pre.last() == Some(&0) {
                pre.pop();
            }
        } else {
            absorb_preperiod(&mut pre, &mut per);
        }
        Self { pre, per }
    }

    pub fn pre(&self) -> &[u8] {
        &self.pre
    }

    pub fn per(&self) -> &[u8] {
        &self.per
    }

    pub fn bit(&self, i: usize) -> u8 {
        if i < self.pre.len() {
            self.pre[i]
        } else if self.per.is_empty() {
            0
        } else {
            self.per[(i - self.pre.len()) % self.per.len()]
        }
    }
}

impl std::fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.pre {
            write!(f, "{b}")?;
        }
        write!(f, "(")?;
        for b in &self.per {
            write!(f, "{b}")?;
        }
        write!(f, ")∞")
    }
}

/// The binary code of an infinite sequence: limit of `pi_star` on
/// prefixes, computed exactly from the periodic structure.
pub fn pi(omega: &SymbolicPoint) -> BinaryCode {
    let mut pre: Vec<u8> = match omega.letter(0) {
        T3el => vec![0],
        _ => vec![],
    };
    let a = omega.pre.len();
    for i in 0..a {
        let label = omega
            .letter(i)
            .edge_label(omega.letter(i + 1))
            .expect("admissible");
        pre.extend_from_slice(label);
    }
    let p = omega.per.len();
    let mut per = Vec::new();
    for j in 0..p {
        let label = omega.per[j]
            .edge_label(omega.per[(j + 1) % p])
            .expect("admissible");
        per.extend_from_slice(label);
    }
    BinaryCode::new(pre, per)
}

/// The value Σ bits_n / 2^n as an exact rational.
pub fn epsilon(code: &BinaryCode) -> BigRational {
    let two = BigInt::from(2);
    let mut value = BigRational::zero();
    let mut scale = BigRational::one();
    for &b in &code.pre {
        scale /= &two;
        if b == 1 {
            value += &scale;
        }
    }
    if !code.per.is_empty() {
        let mut per_val = BigRational::zero();
        let mut s = BigRational::one();
        for &b in &code.per {
            s /= &two;
            if b == 1 {
                per_val += &s;
            }
        }
        // geometric series with ratio 2^-p
        let denom = BigRational::one() - s;
        value += scale * per_val / denom;
    }
    value
}

/// Integrated density of states of the coded point.
pub fn ids(omega: &SymbolicPoint) -> BigRational {
    epsilon(&pi(omega))
}

/// Integrated density of states at the interior zero of band σ:
/// Σ σ_i/2^i + 1/2^(n+1), exactly.
pub fn ids_of_zero(code: &BandCode) -> BigRational {
    let n = code.level();
    let two = BigInt::from(2);
    let mut v = BigRational::zero();
    for (i, &b) in code.bits().iter().enumerate() {
        if b == 1 {
            v += BigRational::new(BigInt::one(), two.pow(i as u32 + 1));
        }
    }
    v += BigRational::new(BigInt::one(), two.pow(n as u32 + 1));
    // the same value read through the binary coding σ01^∞
    let mut pre: Vec<u8> = code.bits().to_vec();
    pre.push(0);
    debug_assert_eq!(epsilon(&BinaryCode::new(pre, vec![1])), v);
    v
}

/// Counting approximation of the density of states at z_σ: the fraction
/// of level-m zeros lying at or below it, exact by the combinatorial
/// zero order. Agrees with `ids_of_zero` once m ≥ |σ|+6.
pub fn ids_counting_oracle(code: &BandCode, m: usize) -> BigRational {
    use rayon::prelude::*;
    assert!(m <= 26, "zero count grows as 2^m");
    let total: u64 = 1 << m;
    let count: u64 = (0..total)
        .into_par_iter()
        .filter(|&r| {
            let bits: Vec<u8> = (0..m).map(|i| ((r >> (m - 1 - i)) & 1) as u8).collect();
            let tau = BandCode::from_bits(&bits);
            tau.zero_cmp(code) != Ordering::Greater
        })
        .count() as u64;
    BigRational::new(BigInt::from(count), BigInt::from(total))
}

/// The enclosure I_(ω|depth) of the coded point at a finite depth.
pub fn pi_numeric(
    omega: &SymbolicPoint,
    depth: usize,
    tables: &[LevelTable],
) -> Result<Enc, CodingError> {
    let word = omega.prefix(depth);
    let code_bits = pi_star(&word)?;
    if code_bits.len() >= tables.len() {
        return Err(CodingError::DepthExceeded(code_bits.len()));
    }
    let code = BandCode::from_bits(&code_bits);
    let band = tables[code.level()].band(&code);
    Ok(Enc::new(band.a.lo.clone(), band.b.hi.clone()))
}

/// All admissible words of the given depth whose band contains E. Empty
/// means E is certified outside the covering (hence the limit set).
pub fn code_of_energy(
    energy: &crate::real::Real,
    depth: usize,
    tables: &[LevelTable],
) -> Result<Vec<Vec<BandType>>, CodingError> {
    if tables.len() <= depth + 1 {
        return Err(CodingError::DepthExceeded(depth + 1));
    }
    let mut hits = Vec::new();
    for (word, code_bits) in crate::covering::words_with_codes(depth) {
        let code = BandCode::from_bits(&code_bits);
        let band = tables[code.level()].band(&code);
        if *energy >= band.a.lo && *energy <= band.b.hi {
            hits.push(word);
        }
    }
    Ok(hits)
}

fn split_last(stem: &[BandType]) -> Result<(&[BandType], BandType), CodingError> {
    match stem.split_last() {
        Some((&l, rest)) => Ok((rest, l)),
        None => Err(CodingError::NotGapEdgeClass),
    }
}

fn build(pre: &[BandType], extra: &[BandType], per: [BandType; 2]) -> SymbolicPoint {
    let mut p = pre.to_vec();
    p.extend_from_slice(extra);
    SymbolicPoint::new(p, per.to_vec()).expect("partner words are admissible")
}

/// Partner map sending a gap's defining edge to its other edge. The input
/// class decides the case table: left edges of type-I odd gaps map right,
/// right edges of type-I even gaps map left, and left edges of type-II
/// gaps map right.
pub fn gap_partner(omega: &SymbolicPoint) -> Result<SymbolicPoint, CodingError> {
    let class = omega.edge_class().ok_or(CodingError::NotGapEdgeClass)?;
    let stem = omega.pre();
    let head = omega.per[0];
    match class {
        EdgeClass::TildeLeft => {
            if head == T3er {
                // stem 3_er (0_o 3_er)^∞ with stem = w 1_o
                let (w, l) = split_last(stem)?;
                if l != T1o {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T3or], [T0e, T3ol]))
            } else {
                // stem (0_o 3_er)^∞ with stem = w 3_el
                let (w, l) = split_last(stem)?;
                if l != T3el {
                    return Err(CodingError::NotGapEdgeClass);
                }
                if w.is_empty() {
                    Ok(build(&[], &[], [T0e, T3ol]))
                } else {
                    Ok(build(w, &[T1e, T3ol], [T0e, T3ol]))
                }
            }
        }
        EdgeClass::LeftOdd => {
            if head == T2o {
                // stem (2_o 1_e)^∞ with stem = w x 2_e
                let (rest, l) = split_last(stem)?;
                if l != T2e {
                    return Err(CodingError::NotGapEdgeClass);
                }
                let (w, x) = split_last(rest)?;
                match x {
                    T1o => Ok(build(w, &[T1o, T3er], [T0o, T3el])),
                    T2o => Ok(build(w, &[T2o, T3el], [T0o, T3el])),
                    _ => Err(CodingError::NotGapEdgeClass),
                }
            } else {
                // stem 1_e (2_o 1_e)^∞ with stem = w 0_o
                let (w, l) = split_last(stem)?;
                if l != T0o {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T0o, T3er], [T0o, T3el]))
            }
        }
        EdgeClass::RightEven => {
            if head == T2e {
                // stem (2_e 1_o)^∞ with stem = w x 2_o
                let (rest, l) = split_last(stem)?;
                if l != T2o {
                    return Err(CodingError::NotGapEdgeClass);
                }
                let (w, x) = split_last(rest)?;
                match x {
                    T1e => Ok(build(w, &[T1e, T3ol], [T0e, T3or])),
                    T2e => Ok(build(w, &[T2e, T3or], [T0e, T3or])),
                    _ => Err(CodingError::NotGapEdgeClass),
                }
            } else {
                // stem 1_o (2_e 1_o)^∞ with stem = w 0_e
                let (w, l) = split_last(stem)?;
                if l != T0e {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T0e, T3ol], [T0e, T3or]))
            }
        }
        _ => Err(CodingError::NotGapEdgeClass),
    }
}

/// Inverse of `gap_partner`, defined on the opposite edge classes: right
/// type-II edges, right type-I odd edges (except the minimum) and left
/// type-I even edges (except the maximum).
pub fn gap_partner_inverse(omega: &SymbolicPoint) -> Result<SymbolicPoint, CodingError> {
    let class = omega.edge_class().ok_or(CodingError::NotGapEdgeClass)?;
    let stem = omega.pre();
    let head = omega.per[0];
    match class {
        EdgeClass::TildeRight => {
            if stem.is_empty() {
                // (0_e 3_ol)^∞
                return Ok(build(&[T3el], &[], [T0o, T3er]));
            }
            if head == T3ol {
                // stem 3_ol (0_e 3_ol)^∞ with stem = w 1_e
                let (w, l) = split_last(stem)?;
                if l != T1e {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T3el], [T0o, T3er]))
            } else {
                // stem (0_e 3_ol)^∞ with stem = w 3_or
                let (w, l) = split_last(stem)?;
                if l != T3or {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T1o, T3er], [T0o, T3er]))
            }
        }
        EdgeClass::RightOdd => {
            if head == T3el {
                // stem 3_el (0_o 3_el)^∞; stem = w 2_o, else this is the minimum
                let (w, l) = split_last(stem)?;
                if l != T2o {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T2o, T2e], [T2o, T1e]))
            } else {
                // stem (0_o 3_el)^∞ with stem = w x 3_er
                let (rest, l) = split_last(stem)?;
                if l != T3er {
                    return Err(CodingError::NotGapEdgeClass);
                }
                let (w, x) = split_last(rest)?;
                match x {
                    T1o => Ok(build(w, &[T1o, T2e], [T2o, T1e])),
                    T0o => Ok(build(w, &[T0o, T1e], [T2o, T1e])),
                    _ => Err(CodingError::NotGapEdgeClass),
                }
            }
        }
        EdgeClass::LeftEven => {
            if head == T3or {
                // stem 3_or (0_e 3_or)^∞ with stem = w 2_e
                let (w, l) = split_last(stem)?;
                if l != T2e {
                    return Err(CodingError::NotGapEdgeClass);
                }
                Ok(build(w, &[T2e, T2o], [T2e, T1o]))
            } else {
                // stem (0_e 3_or)^∞ with stem = w x 3_ol; empty stem is the maximum
                let (rest, l) = split_last(stem)?;
                if l != T3ol {
                    return Err(CodingError::NotGapEdgeClass);
                }
                let (w, x) = split_last(rest)?;
                match x {
                    T1e => Ok(build(w, &[T1e, T2o], [T2e, T1o])),
                    T0e => Ok(build(w, &[T0e, T1o], [T2e, T1o])),
                    _ => Err(CodingError::NotGapEdgeClass),
                }
            }
        }
        _ => Err(CodingError::NotGapEdgeClass),
    }
}

/// Extend a finite word to the largest (smallest) point of its cylinder
/// by always taking the extreme successor; the extension becomes
/// 2-periodic after at most two steps.
fn extend_extreme(word: &[BandType], take_max: bool) -> SymbolicPoint {
    let mut letters = word.to_vec();
    let next = |t: BandType| {
        let s = t.successors();
        if take_max {
            *s.last().expect("nonempty")
        } else {
            s[0]
        }
    };
    loop {
        let last = *letters.last().expect("nonempty word");
        let a = next(last);
        if next(a) == last {
            // the tail alternates last, a, last, a, ...
            let pre = letters[..letters.len() - 1].to_vec();
            return SymbolicPoint::new(pre, vec![last, a]).expect("admissible extension");
        }
        letters.push(a);
    }
}

pub fn cylinder_max(word: &[BandType]) -> SymbolicPoint {
    extend_extreme(word, true)
}

pub fn cylinder_min(word: &[BandType]) -> SymbolicPoint {
    extend_extreme(word, false)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GapKind {
    IOdd,
    IEven,
    II,
}

impl std::fmt::Display for GapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapKind::IOdd => "I_o",
            GapKind::IEven => "I_e",
            GapKind::II => "II",
        })
    }
}

/// A gap certified at some covering depth: symbolic edges, exact label,
/// and an interval certified to lie inside the gap.
#[derive(Clone, Debug)]
pub struct GapRecord {
    pub kind: GapKind,
    pub left: SymbolicPoint,
    pub right: SymbolicPoint,
    pub label: BigRational,
    /// certified inner sub-interval of the gap
    pub inner: Enc,
}

/// Scan the covering at `depth` and emit one record for every adjacent
/// pair of entries with a certified gap between them. Adjacencies that
/// are not certified disjoint at this depth are skipped, never
/// misreported; they resolve at larger depth.
pub fn enumerate_gaps(
    depth: usize,
    tables: &[LevelTable],
) -> Result<Vec<GapRecord>, CodingError> {
    let covering = optimal_covering(depth, tables)?;
    let mut gaps = Vec::new();
    for pair in covering.entries.windows(2) {
        let (l, r) = (&pair[0], &pair[1]);
        if !l.band.b.lt(&r.band.a) {
            continue; // unresolved adjacency
        }
        let left = cylinder_max(&l.word);
        let right = cylinder_min(&r.word);
        let (kind, partner, other) = match left.edge_class() {
            Some(EdgeClass::LeftOdd) => (GapKind::IOdd, gap_partner(&left)?, &right),
            Some(EdgeClass::TildeLeft) => (GapKind::II, gap_partner(&left)?, &right),
            Some(EdgeClass::LeftEven) => {
                // even type-I gaps are defined from their right edge
                if right.edge_class() != Some(EdgeClass::RightEven) {
                    return Err(CodingError::InversionFailed(format!(
                        "mismatched edge classes at {} | {}",
                        l.band.code, r.band.code
                    )));
                }
                (GapKind::IEven, gap_partner(&right)?, &left)
            }
            _ => {
                return Err(CodingError::InversionFailed(format!(
                    "unexpected left edge class at {}",
                    l.band.code
                )))
            }
        };
        if partner != *other {
            return Err(CodingError::InversionFailed(format!(
                "partner map disagrees with the adjacent cylinder at {} | {}",
                l.band.code, r.band.code
            )));
        }
        let label = ids(&left);
        debug_assert_eq!(label, ids(&right));
        gaps.push(GapRecord {
            kind,
            left,
            right,
            label,
            inner: Enc::new(l.band.b.hi.clone(), r.band.a.lo.clone()),
        });
    }
    Ok(gaps)
}

/// Is the rational a positive dyadic number p/2^k?
pub fn is_dyadic(s: &BigRational) -> bool {
    let mut d = s.denom().clone();
    let two = BigInt::from(2);
    while (&d % &two).is_zero() {
        d /= &two;
    }
    d.is_one()
}

/// Is the rational in 𝒟/3 ∖ 𝒟 (a dyadic divided by three, not dyadic)?
pub fn is_dyadic_over_three(s: &BigRational) -> bool {
    !is_dyadic(s) && is_dyadic(&(s * BigRational::from(BigInt::from(3))))
}

/// All preimages of a binary code under Π, found by running the labelled
/// graph against the code as a product automaton. The result has one
/// element except on the collapsed type-II pairs, where it has two.
pub fn pi_inverse(code: &BinaryCode) -> Result<Vec<SymbolicPoint>, CodingError> {
    // positions: 0..a are preperiod offsets, a..a+p cycle within the period
    let a = code.pre().len();
    let p = code.per().len().max(1);
    let n_pos = a + p;
    let bit_at = |pos: usize| -> u8 {
        if pos < a {
            code.pre()[pos]
        } else if code.per().is_empty() {
            0
        } else {
            code.per()[pos - a]
        }
    };
    let advance = |pos: usize| -> usize {
        if pos + 1 == n_pos {
            a
        } else {
            pos + 1
        }
    };
    // state space: (letter, position); transition consumes the edge label
    type State = (BandType, usize);
    let step = |(t, pos): State| -> Vec<State> {
        let mut out = Vec::new();
        for &next in t.successors() {
            let label = t.edge_label(next).expect("edge exists");
            let mut q = pos;
            let mut ok = true;
            for &b in label {
                if bit_at(q) != b {
                    ok = false;
                    break;
                }
                q = advance(q);
            }
            if ok {
                out.push((next, q));
            }
        }
        out
    };
    // live states: can continue forever (coinductive pruning)
    let mut all: Vec<State> = Vec::new();
    for &t in &crate::covering::ALPHABET {
        for pos in 0..n_pos {
            all.push((t, pos));
        }
    }
    let mut live: std::collections::HashSet<State> = all.iter().copied().collect();
    loop {
        let dead: Vec<State> = live
            .iter()
            .filter(|&&s| !step(s).iter().any(|n| live.contains(n)))
            .copied()
            .collect();
        if dead.is_empty() {
            break;
        }
        for s in dead {
            live.remove(&s);
        }
    }
    // start states
    let mut starts: Vec<(State, Vec<BandType>)> = Vec::new();
    if live.contains(&(T0e, 0)) {
        starts.push(((T0e, 0), vec![T0e]));
    }
    if bit_at(0) == 0 {
        let s = (T3el, advance(0));
        if live.contains(&s) {
            starts.push((s, vec![T3el]));
        }
    }
    // walk all live paths long enough to close a cycle in the state space
    let horizon = 2 * (10 * n_pos) + 4;
    let mut frontier: Vec<(State, Vec<BandType>, HashMap<State, usize>)> = starts
        .into_iter()
        .map(|(s, w)| {
            let mut seen = HashMap::new();
            seen.insert(s, 0usize);
            (s, w, seen)
        })
        .collect();
    let mut results: Vec<SymbolicPoint> = Vec::new();
    let mut guard = 0usize;
    while let Some((state, word, seen)) = frontier.pop() {
        guard += 1;
        if guard > 100_000 {
            return Err(CodingError::InversionFailed(
                "preimage search did not stabilize".into(),
            ));
        }
        if word.len() > horizon {
            return Err(CodingError::InversionFailed(
                "no cycle within the search horizon".into(),
            ));
        }
        for next in step(state) {
            if !live.contains(&next) {
                continue;
            }
            let mut w = word.clone();
            w.push(next.0);
            if let Some(&first) = seen.get(&next) {
                // cycle closed: letters first+1.. repeat forever
                let pre = w[..=first].to_vec();
                let per = w[first + 1..].to_vec();
                let point = SymbolicPoint::new(pre, per)
                    .map_err(|e| CodingError::InversionFailed(e.to_string()))?;
                if !results.contains(&point) {
                    results.push(point);
                }
            } else {
                let mut s = seen.clone();
                s.insert(next, w.len() - 1);
                frontier.push((next, w, s));
            }
        }
    }
    // distinct cycles through shared states can describe the same point;
    // results were deduplicated on canonical forms already
    for r in &results {
        if pi(r) != *code {
            return Err(CodingError::InversionFailed(format!(
                "preimage {r} does not map back to {code}",
            )));
        }
    }
    if results.is_empty() {
        return Err(CodingError::InversionFailed("no preimage found".into()));
    }
    Ok(results)
}

/// The symbolic coding of the interior zero of band σ: the unique
/// preimage of σ01^∞ in the left-odd class for odd levels, and of σ10^∞
/// in the right-even class for even levels.
pub fn zero_coding(code: &BandCode) -> Result<SymbolicPoint, CodingError> {
    let odd = code.level() % 2 == 1;
    let mut pre = code.bits().to_vec();
    let binary = if odd {
        pre.push(0);
        BinaryCode::new(pre, vec![1])
    } else {
        pre.push(1);
        BinaryCode::new(pre, vec![])
    };
    let pres = pi_inverse(&binary)?;
    let want = if odd {
        EdgeClass::LeftOdd
    } else {
        EdgeClass::RightEven
    };
    let hit: Vec<SymbolicPoint> = pres
        .into_iter()
        .filter(|p| p.edge_class() == Some(want))
        .collect();
    match <[SymbolicPoint; 1]>::try_from(hit) {
        Ok([p]) => Ok(p),
        Err(v) => Err(CodingError::InversionFailed(format!(
            "zero of {} has {} codings in its class",
            code,
            v.len()
        ))),
    }
}

/// Membership of a rational in ε(Π(ℱ)): does its binary expansion have a
/// preimage whose tail is (2_e 2_o)^∞? Only sensible for non-dyadic
/// rationals (dyadic values have two expansions but lie outside 𝒟/3∖𝒟).
pub fn in_f_image(s: &BigRational) -> Result<bool, CodingError> {
    let code = binary_expansion(s)?;
    let pres = pi_inverse(&code)?;
    Ok(pres.iter().any(|w| w.edge_class() == Some(EdgeClass::F)))
}

/// Exact binary expansion of a rational in [0,1] with denominator 2^a or
/// 2^a·(2^b−1)-like structure; works for any rational via long division.
pub fn binary_expansion(s: &BigRational) -> Result<BinaryCode, CodingError> {
    use num_traits::Signed;
    if s.is_negative() || s > &BigRational::one() {
        return Err(CodingError::InversionFailed("value outside [0,1]".into()));
    }
    let mut num = s.numer().clone();
    let den = s.denom().clone();
    let two = BigInt::from(2);
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    let mut bits: Vec<u8> = Vec::new();
    loop {
        if let Some(&i) = seen.get(&num) {
            let per = bits[i..].to_vec();
            let pre = bits[..i].to_vec();
            return Ok(BinaryCode::new(pre, per));
        }
        seen.insert(num.clone(), bits.len());
        num *= &two;
        if num >= den {
            bits.push(1);
            num -= &den;
        } else {
            bits.push(0);
        }
    }
}
