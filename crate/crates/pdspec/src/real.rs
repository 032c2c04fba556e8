//! Multiprecision reals and interval enclosures.
//!
//! All spectral quantities are isolated by bisection into enclosures
//! `[lo, hi]` of dyadic floats. Comparisons between enclosures are only
//! reported when the intervals are disjoint, so every `<` the crate emits
//! is certified at the working precision.

use rug::Float;
use std::cmp::Ordering;
use std::fmt;

pub type Real = Float;

/// Default working precision for level-n computations.
pub fn level_precision(n: usize) -> u32 {
    (4 * n as u32 + 64).max(64)
}

/// Target enclosure width for level-n band endpoints and zeros; never
/// wider than 2^-40 so low-level closed forms resolve to ~1e-12.
pub fn target_width(prec: u32, n: usize) -> Real {
    target_width_bumped(prec, n, 0)
}

/// Target width tightened by half of the `bump` extra precision bits; the
/// other half is head-room so the evaluation noise (which scales with the
/// full precision) shrinks strictly faster than the requested width.
pub fn target_width_bumped(prec: u32, n: usize, bump: u32) -> Real {
    let exp = (2 * n as i32 + 20).max(40) + (bump / 2) as i32;
    Real::with_val(prec, Real::i_exp(1, -exp))
}

pub fn real(prec: u32, v: f64) -> Real {
    Real::with_val(prec, v)
}

#[derive(Debug, thiserror::Error)]
pub enum RealError {
    #[error("not a valid decimal number: {0:?}")]
    BadDecimal(String),
    #[error("enclosures overlap; comparison needs higher precision")]
    Overlap,
}

/// Parse a decimal string at the given precision.
pub fn parse_decimal(s: &str, prec: u32) -> Result<Real, RealError> {
    let incomplete = Float::parse(s).map_err(|_| RealError::BadDecimal(s.to_owned()))?;
    Ok(Float::with_val(prec, incomplete))
}

/// Round-trippable lossless text form (radix-16 significand).
pub fn to_hex(x: &Real) -> String {
    x.to_string_radix(16, None)
}

pub fn from_hex(s: &str, prec: u32) -> Result<Real, RealError> {
    let incomplete = Float::parse_radix(s, 16).map_err(|_| RealError::BadDecimal(s.to_owned()))?;
    Ok(Float::with_val(prec, incomplete))
}

/// A closed interval `[lo, hi]` known to contain the exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct Enc {
    pub lo: Real,
    pub hi: Real,
}

impl Enc {
    pub fn new(lo: Real, hi: Real) -> Self {
        debug_assert!(lo <= hi, "inverted enclosure");
        Enc { lo, hi }
    }

    /// Degenerate enclosure around a value known exactly (as a float).
    pub fn point(x: Real) -> Self {
        Enc { lo: x.clone(), hi: x }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn mid(&self) -> Real {
        let mut m = self.lo.clone() + &self.hi;
        m /= 2;
        m
    }

    pub fn width(&self) -> Real {
        self.hi.clone() - &self.lo
    }

    pub fn contains(&self, x: &Real) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// Certified strict `<` between enclosures (disjoint, self left).
    pub fn lt(&self, other: &Enc) -> bool {
        self.hi < other.lo
    }

    /// Certified strict `>` between enclosures.
    pub fn gt(&self, other: &Enc) -> bool {
        self.lo > other.hi
    }

    pub fn overlaps(&self, other: &Enc) -> bool {
        !(self.lt(other) || self.gt(other))
    }

    /// Total comparison; errors if the enclosures overlap (and are not the
    /// identical degenerate point).
    pub fn cmp_certified(&self, other: &Enc) -> Result<Ordering, RealError> {
        if self.lt(other) {
            Ok(Ordering::Less)
        } else if self.gt(other) {
            Ok(Ordering::Greater)
        } else if self.lo == other.lo && self.hi == other.hi && self.lo == self.hi {
            Ok(Ordering::Equal)
        } else {
            Err(RealError::Overlap)
        }
    }
}

impl fmt::Display for Enc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "[{:.*}, {:.*}]", digits, self.lo, digits, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_hex_round_trip() {
        let x = parse_decimal("0.2", 128).unwrap();
        let s = to_hex(&x);
        let y = from_hex(&s, 128).unwrap();
        assert_eq!(x, y);
        assert!(parse_decimal("zebra", 64).is_err());
    }

    #[test]
    fn enclosure_comparisons() {
        let p = 64;
        let a = Enc::new(real(p, 1.0), real(p, 2.0));
        let b = Enc::new(real(p, 3.0), real(p, 4.0));
        assert!(a.lt(&b));
        assert!(b.gt(&a));
        assert_eq!(a.cmp_certified(&b).unwrap(), Ordering::Less);
        let c = Enc::new(real(p, 1.5), real(p, 3.5));
        assert!(a.overlaps(&c));
        assert!(a.cmp_certified(&c).is_err());
    }

    #[test]
    fn widths_and_targets() {
        assert_eq!(level_precision(0), 64);
        assert_eq!(level_precision(13), 116);
        let w = target_width(64, 1);
        assert_eq!(w, real(64, 2f64.powi(-40)));
        let w = target_width(64, 13);
        assert_eq!(w, real(64, 2f64.powi(-46)));
    }
}
