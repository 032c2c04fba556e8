//! Trace polynomials h_n and their transfer-matrix oracle.
//!
//! h_0(E) = E - λ, h_1(E) = E² - λ² - 2 and
//! h_{n+1} = h_n (h_{n-1}² - 2) - 2. Equivalently h_n is the trace of the
//! transfer matrix over the n-th substitution word, which this module also
//! computes directly (streaming the word, never materializing it) as an
//! independent cross-check.

use crate::real::{parse_decimal, Real, RealError};
use rug::Float;

/// Values beyond 2^SATURATION_EXP are clamped and flagged; once two
/// consecutive traces are that large the orbit is certified unbounded.
pub const SATURATION_EXP: i32 = 1000;

/// Longest substitution word the streaming oracle will walk (2^22 letters).
pub const MAX_TRANSFER_LEVEL: usize = 22;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("lambda must be positive, got {0:?}")]
    LambdaNotPositive(String),
    #[error("precision must be at least 53 bits, got {0}")]
    PrecisionTooLow(u32),
    #[error(transparent)]
    Real(#[from] RealError),
    #[error("transfer level {0} exceeds the streaming cap {MAX_TRANSFER_LEVEL}")]
    TransferLevelTooDeep(usize),
}

/// Coupling constant and working precision. The decimal string is kept
/// verbatim so caches can be keyed reproducibly.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub lambda: Real,
    pub lambda_str: String,
    pub precision_bits: u32,
}

impl ModelParams {
    pub fn new(lambda: &str, precision_bits: u32) -> Result<Self, TraceError> {
        if precision_bits < 53 {
            return Err(TraceError::PrecisionTooLow(precision_bits));
        }
        let val = parse_decimal(lambda, precision_bits)?;
        if !(val > 0) {
            return Err(TraceError::LambdaNotPositive(lambda.to_owned()));
        }
        Ok(ModelParams {
            lambda: val,
            lambda_str: lambda.to_owned(),
            precision_bits,
        })
    }

    pub fn with_precision(&self, precision_bits: u32) -> Result<Self, TraceError> {
        ModelParams::new(&self.lambda_str, precision_bits)
    }

    fn real(&self, v: f64) -> Real {
        Float::with_val(self.precision_bits, v)
    }
}

/// h_0..h_n at one energy, optionally with derivatives; `saturated_from`
/// is the first index clamped at ±2^SATURATION_EXP.
#[derive(Clone, Debug)]
pub struct TraceVector {
    pub energy: Real,
    pub values: Vec<Real>,
    pub derivs: Option<Vec<Real>>,
    pub saturated_from: Option<usize>,
}

/// Witness that the trace sequence escapes: |h_{n0}| and |h_{n0+1}| both
/// exceed 2 + delta with delta > 0, which forces monotone super-exponential
/// growth from index n0 on.
#[derive(Clone, Debug)]
pub struct DivergenceCertificate {
    pub n0: usize,
    pub delta: Real,
}

fn saturate(x: &mut Real, idx: usize, flag: &mut Option<usize>) {
    let cap = x.prec();
    let bound = Float::with_val(cap, Float::i_exp(1, SATURATION_EXP));
    if x.clone().abs() > bound {
        let sign = if *x < 0 { -1 } else { 1 };
        *x = bound * sign;
        flag.get_or_insert(idx);
    }
}

/// h_0(E)..h_n(E) by the trace recurrence, clamped at ±2^SATURATION_EXP.
pub fn eval_traces(params: &ModelParams, energy: &Real, n: usize) -> TraceVector {
    eval_traces_impl(params, energy, n, true)
}

/// Unclamped traces; usable while the doubly-exponential growth stays
/// within the float exponent range (comfortably so for n ≤ 32).
pub fn eval_traces_exactish(params: &ModelParams, energy: &Real, n: usize) -> TraceVector {
    assert!(n <= 32, "unclamped traces limited to n <= 32");
    eval_traces_impl(params, energy, n, false)
}

fn eval_traces_impl(params: &ModelParams, energy: &Real, n: usize, clamp: bool) -> TraceVector {
    let p = params.precision_bits;
    let e = Float::with_val(p, energy);
    let mut values = Vec::with_capacity(n + 1);
    let mut saturated_from = None;
    let clamp_at = |x: &mut Real, idx: usize, flag: &mut Option<usize>| {
        if clamp {
            saturate(x, idx, flag);
        }
    };

    let mut h0 = e.clone() - &params.lambda;
    clamp_at(&mut h0, 0, &mut saturated_from);
    values.push(h0);
    if n >= 1 {
        let mut h1 = e.clone().square() - params.lambda.clone().square() - 2u32;
        clamp_at(&mut h1, 1, &mut saturated_from);
        values.push(h1);
    }
    for k in 2..=n {
        let prev2 = values[k - 2].clone().square() - 2u32;
        let mut h = values[k - 1].clone() * prev2 - 2u32;
        clamp_at(&mut h, k, &mut saturated_from);
        values.push(h);
    }

    TraceVector {
        energy: e,
        values,
        derivs: None,
        saturated_from,
    }
}

/// Traces together with derivatives h'_0..h'_n:
/// h'_0 = 1, h'_1 = 2E, h'_{n+1} = h'_n (h_{n-1}²-2) + 2 h_n h_{n-1} h'_{n-1}.
pub fn eval_derivatives(params: &ModelParams, energy: &Real, n: usize) -> TraceVector {
    let mut tv = eval_traces(params, energy, n);
    let p = params.precision_bits;
    let mut derivs = Vec::with_capacity(n + 1);
    derivs.push(Float::with_val(p, 1));
    if n >= 1 {
        derivs.push(tv.energy.clone() * 2u32);
    }
    for k in 2..=n {
        let w = tv.values[k - 2].clone().square() - 2u32;
        let mut d = derivs[k - 1].clone() * w;
        d += Float::with_val(p, 2) * &tv.values[k - 1] * &tv.values[k - 2] * &derivs[k - 2];
        let mut flag = tv.saturated_from;
        saturate(&mut d, k, &mut flag);
        derivs.push(d);
    }
    tv.derivs = Some(derivs);
    tv
}

/// Residual of the product identity
/// h_{n+1} - (h_n² - 2) = (-1)^n 2λ ∏_{j=0}^n h_j; exactly zero in exact
/// arithmetic, so its size measures rounding error only.
pub fn fundamental_residual(params: &ModelParams, energy: &Real, n: usize) -> Real {
    let tv = eval_traces_exactish(params, energy, n + 1);
    let p = params.precision_bits;
    let lhs = tv.values[n + 1].clone() - (tv.values[n].clone().square() - 2u32);
    let mut prod = Float::with_val(p, 2) * &params.lambda;
    for h in &tv.values[..=n] {
        prod *= h;
    }
    if n % 2 == 1 {
        prod = -prod;
    }
    lhs - prod
}

/// `fundamental_residual` divided by the magnitude of the largest term in
/// the identity (so a bound of 2^{-p/2} is meaningful at any energy).
pub fn fundamental_residual_scaled(params: &ModelParams, energy: &Real, n: usize) -> Real {
    let r = fundamental_residual(params, energy, n);
    let tv = eval_traces_exactish(params, energy, n + 1);
    let mut scale = params.real(1.0);
    for cand in [
        tv.values[n + 1].clone().abs(),
        tv.values[n].clone().square(),
        {
            let mut prod = params.real(2.0) * &params.lambda;
            for h in &tv.values[..=n] {
                prod *= h;
            }
            prod.abs()
        },
    ] {
        if cand > scale {
            scale = cand;
        }
    }
    r / scale
}

/// Letter (0 = a, 1 = b) at position `i` of the n-th substitution word
/// η^n(a), where η(a) = ab, η(b) = aa.
fn word_letter(n: usize, mut i: u64, mut symbol: u8) -> u8 {
    for level in (1..=n).rev() {
        let half = 1u64 << (level - 1);
        let second = i >= half;
        if second {
            i -= half;
        }
        symbol = if symbol == 0 {
            if second {
                1
            } else {
                0
            }
        } else {
            0
        };
    }
    symbol
}

/// Trace of the transfer matrix over η^n(a); the matrix map is an
/// anti-homomorphism, so letters are applied on the left in word order.
pub fn transfer_trace(params: &ModelParams, energy: &Real, n: usize) -> Result<Real, TraceError> {
    if n > MAX_TRANSFER_LEVEL {
        return Err(TraceError::TransferLevelTooDeep(n));
    }
    let p = params.precision_bits;
    let e = Float::with_val(p, energy);
    let ta = e.clone() - &params.lambda;
    let tb = e.clone() + &params.lambda;
    // P = [[p00, p01], [p10, p11]], starts as identity; each letter with top
    // row [t, -1] maps P to M(t) * P.
    let (mut p00, mut p01) = (Float::with_val(p, 1), Float::with_val(p, 0));
    let (mut p10, mut p11) = (Float::with_val(p, 0), Float::with_val(p, 1));
    for i in 0..(1u64 << n) {
        let t = if word_letter(n, i, 0) == 0 { &ta } else { &tb };
        let n00 = t.clone() * &p00 - &p10;
        let n01 = t.clone() * &p01 - &p11;
        p10 = p00;
        p11 = p01;
        p00 = n00;
        p01 = n01;
    }
    Ok(p00 + p11)
}

/// Scan h_0..h_{max_n} for two consecutive values of modulus > 2; returns a
/// certificate with the observed slack when found. Saturated pairs qualify
/// with slack 2^SATURATION_EXP - 2 truncated to the working precision.
pub fn certify_unbounded(
    params: &ModelParams,
    energy: &Real,
    max_n: usize,
) -> Option<DivergenceCertificate> {
    let tv = eval_traces(params, energy, max_n);
    certify_from_traces(params, &tv)
}

pub fn certify_from_traces(
    params: &ModelParams,
    tv: &TraceVector,
) -> Option<DivergenceCertificate> {
    let two = params.real(2.0);
    for n0 in 0..tv.values.len().saturating_sub(1) {
        let d0 = tv.values[n0].clone().abs() - &two;
        let d1 = tv.values[n0 + 1].clone().abs() - &two;
        if d0 > 0 && d1 > 0 {
            let delta = if d0 < d1 { d0 } else { d1 };
            return Some(DivergenceCertificate { n0, delta });
        }
    }
    None
}

/// Check the growth guaranteed by a certificate: once |h_{n0}|, |h_{n0+1}|
/// ≥ 2 + δ, every later value satisfies |h_{n0+k}| ≥ 2 + 4^{k-1} δ.
pub fn certificate_holds(params: &ModelParams, energy: &Real, cert: &DivergenceCertificate, upto: usize) -> bool {
    let tv = eval_traces(params, energy, upto);
    let two = params.real(2.0);
    for k in 0..=(upto - cert.n0) {
        let bound = two.clone() + cert.delta.clone() * Float::with_val(params.precision_bits, Float::i_exp(1, 2 * (k.saturating_sub(1)) as i32));
        if tv.values[cert.n0 + k].clone().abs() < bound && tv.saturated_from.map_or(true, |s| cert.n0 + k < s) {
            return false;
        }
    }
    true
}
