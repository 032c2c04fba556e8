//! The plane trace map, its inverse, and orbit classification.
//!
//! The recurrence couples consecutive trace pairs through
//! f(x,y) = (y(x²−2)−2, [y(x²−2)−2](y²−2)−2), so (h_{n+2}, h_{n+3}) =
//! f(h_n, h_{n+1}). On the region U = {x,y<0, y(x²−2)−2<0} the map is
//! invertible with explicit inverse g. The compact triangle-shaped region
//! D traps exactly the fixed point F = (−1,−1): g contracts D onto F, so
//! every other point of D escapes under f in finite time. This drives the
//! classification of trace orbits.

use rug::ops::Pow;
use rug::Float;

use crate::real::Real;
use crate::traces::{certify_from_traces, eval_traces, DivergenceCertificate, ModelParams};

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("point outside the invertibility domain")]
    OutsideDomain,
}

#[derive(Clone, PartialEq, Debug)]
pub struct PlanePoint {
    pub x: Real,
    pub y: Real,
}

impl PlanePoint {
    pub fn new(x: Real, y: Real) -> Self {
        Self { x, y }
    }

    pub fn prec(&self) -> u32 {
        self.x.prec().max(self.y.prec())
    }

    /// componentwise partial order
    pub fn le(&self, other: &PlanePoint) -> bool {
        self.x <= other.x && self.y <= other.y
    }

    pub fn dist(&self, other: &PlanePoint) -> Real {
        let dx = self.x.clone() - &other.x;
        let dy = self.y.clone() - &other.y;
        (dx.square() + dy.square()).sqrt()
    }
}

impl std::fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x.to_f64(), self.y.to_f64())
    }
}

/// The forward map.
pub fn f_map(p: &PlanePoint) -> PlanePoint {
    let prec = p.prec();
    let x1 = p.y.clone() * (p.x.clone().square() - 2u32) - 2u32;
    let y1 = x1.clone() * (p.y.clone().square() - 2u32) - 2u32;
    PlanePoint::new(Float::with_val(prec, x1), Float::with_val(prec, y1))
}

/// Jacobian matrix of the forward map.
pub fn df(p: &PlanePoint) -> [[Real; 2]; 2] {
    let (x, y) = (&p.x, &p.y);
    let xx2 = x.clone().square() - 2u32;
    let a = Float::with_val(p.prec(), 2u32) * x * y;
    let b = xx2.clone();
    let c = a.clone() * (y.clone().square() - 2u32);
    let d = xx2 * (Float::with_val(p.prec(), 3u32) * y.clone().square() - 2u32)
        - Float::with_val(p.prec(), 4u32) * y;
    [[a, b], [c, d]]
}

/// Jacobian determinant: 4xy²(y(x²−2)−2).
pub fn det_df(p: &PlanePoint) -> Real {
    let inner = p.y.clone() * (p.x.clone().square() - 2u32) - 2u32;
    Float::with_val(p.prec(), 4u32) * &p.x * p.y.clone().square() * inner
}

/// Is p in U = {x,y < 0, y(x²−2)−2 < 0}?
pub fn in_u(p: &PlanePoint) -> bool {
    p.x < 0 && p.y < 0 && p.y.clone() * (p.x.clone().square() - 2u32) - 2u32 < 0
}

/// Is p in the image f(U) = {x<0, y<−2x−2, and y<x³/4+x²−x−2 if −2≤x<0}?
pub fn in_f_u(p: &PlanePoint) -> bool {
    if !(p.x < 0) {
        return false;
    }
    let line = -Float::with_val(p.prec(), 2u32) * &p.x - 2u32;
    if !(p.y < line) {
        return false;
    }
    if p.x >= -2 {
        let cubic = p.x.clone().pow(3) / 4u32 + p.x.clone().square() - &p.x - 2u32;
        if !(p.y < cubic) {
            return false;
        }
    }
    true
}

/// The inverse of the forward map on f(U):
/// g(x,y) = (−√(2−(2+x)/√(2+(2+y)/x)), −√(2+(2+y)/x)).
pub fn g_map(p: &PlanePoint) -> Result<PlanePoint, DynamicsError> {
    if !in_f_u(p) {
        return Err(DynamicsError::OutsideDomain);
    }
    let g2_sq = Float::with_val(p.prec(), 2u32) + (p.y.clone() + 2u32) / &p.x;
    if g2_sq < 0 {
        return Err(DynamicsError::OutsideDomain);
    }
    let g2 = -g2_sq.sqrt();
    let g1_sq = Float::with_val(p.prec(), 2u32) - (p.x.clone() + 2u32) / g2.clone().abs();
    if g1_sq < 0 {
        return Err(DynamicsError::OutsideDomain);
    }
    let g1 = -g1_sq.sqrt();
    Ok(PlanePoint::new(g1, g2))
}

/// The four fixed points of the forward map, with α = (1+√5)/2:
/// (−1,−1), (2,2), (−α, α−1), (1/α, −(1+1/α)).
pub fn fixed_points(prec: u32) -> [PlanePoint; 4] {
    let one = Float::with_val(prec, 1u32);
    let alpha = (Float::with_val(prec, 5u32).sqrt() + 1u32) / 2u32;
    let inv = one.clone() / &alpha;
    [
        PlanePoint::new(Float::with_val(prec, -1), Float::with_val(prec, -1)),
        PlanePoint::new(Float::with_val(prec, 2), Float::with_val(prec, 2)),
        PlanePoint::new(-alpha.clone(), alpha.clone() - 1u32),
        PlanePoint::new(inv.clone(), -(one + &inv)),
    ]
}

/// The trapping triangle D = {−√2 ≤ x,y ≤ 0, y ≤ x²−2} with its
/// vertices and the fixed point on the parabolic boundary arc.
pub struct RegionD {
    prec: u32,
    sqrt2: Real,
}

impl RegionD {
    pub fn new(prec: u32) -> Self {
        Self {
            prec,
            sqrt2: Float::with_val(prec, 2u32).sqrt(),
        }
    }

    pub fn contains(&self, p: &PlanePoint) -> bool {
        self.contains_tol(p, &Float::with_val(self.prec, 0u32))
    }

    /// Membership with every inequality relaxed by `tol`; boundary points
    /// of D map onto the boundary, so verified images need slack for
    /// rounding.
    pub fn contains_tol(&self, p: &PlanePoint, tol: &Real) -> bool {
        p.x >= -self.sqrt2.clone() - tol
            && p.x <= tol.clone()
            && p.y >= -self.sqrt2.clone() - tol
            && p.y <= tol.clone()
            && p.y <= p.x.clone().square() - 2u32 + tol
    }

    /// bottom-left vertex A = (−√2, −√2)
    pub fn vertex_a(&self) -> PlanePoint {
        PlanePoint::new(-self.sqrt2.clone(), -self.sqrt2.clone())
    }

    /// top vertex B = (−√2, 0)
    pub fn vertex_b(&self) -> PlanePoint {
        PlanePoint::new(-self.sqrt2.clone(), Float::with_val(self.prec, 0u32))
    }

    /// bottom-right vertex C = (−√(2−√2), −√2)
    pub fn vertex_c(&self) -> PlanePoint {
        let x = -(Float::with_val(self.prec, 2u32) - &self.sqrt2).sqrt();
        PlanePoint::new(x, -self.sqrt2.clone())
    }

    /// the unique trapped point F = (−1, −1)
    pub fn fixed_point(&self) -> PlanePoint {
        PlanePoint::new(
            Float::with_val(self.prec, -1),
            Float::with_val(self.prec, -1),
        )
    }

    /// Grid over D: x sweeps its range, y sweeps up to min(0, x²−2).
    pub fn grid(&self, density: usize) -> Vec<PlanePoint> {
        let mut pts = Vec::new();
        let n = density.max(2);
        for i in 0..=n {
            let t = Float::with_val(self.prec, i as u32) / n as u32;
            let x = -self.sqrt2.clone() * (Float::with_val(self.prec, 1u32) - &t)
                + (-(Float::with_val(self.prec, 2u32) - &self.sqrt2).sqrt()) * &t;
            let y_top = (x.clone().square() - 2u32).min(&Float::with_val(self.prec, 0u32));
            for j in 0..=n {
                let s = Float::with_val(self.prec, j as u32) / n as u32;
                let y = -self.sqrt2.clone() * (Float::with_val(self.prec, 1u32) - &s)
                    + y_top.clone() * &s;
                let p = PlanePoint::new(x.clone(), y);
                if self.contains(&p) {
                    pts.push(p);
                }
            }
        }
        pts
    }
}

#[derive(Clone, Debug, Default)]
pub struct ContractionReport {
    pub grid_points: usize,
    pub diameters: Vec<f64>,
    pub violations: Vec<String>,
}

impl ContractionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify the contraction picture on D: the inverse map sends D into
/// D∩U, is componentwise monotone with positive partial derivatives, and
/// iterating it squeezes the vertex bounding boxes onto the fixed point.
pub fn verify_contraction(prec: u32, n_steps: usize, density: usize) -> ContractionReport {
    let mut report = ContractionReport::default();
    let d = RegionD::new(prec);
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));

    // closed form for the first image of the bottom-left vertex:
    // A1 = (−√(2−(2−√2)/√(3−√2)), −√(3−√2))
    let a1 = g_map(&d.vertex_a()).expect("A is in the domain");
    let s2 = Float::with_val(prec, 2u32).sqrt();
    let y1 = -(Float::with_val(prec, 3u32) - &s2).sqrt();
    let x1 = -(Float::with_val(prec, 2u32)
        - (Float::with_val(prec, 2u32) - &s2) / y1.clone().abs())
    .sqrt();
    if a1.dist(&PlanePoint::new(x1, y1)) > tol {
        report.violations.push("closed form of g(A) mismatch".into());
    }

    // fixed point of g
    let f = d.fixed_point();
    match g_map(&f) {
        Ok(gf) if gf.dist(&f) <= tol => {}
        _ => report.violations.push("g(F) != F".into()),
    }
    // images of the two non-trapped vertices under the forward map
    let fb = f_map(&d.vertex_b());
    let fc = f_map(&d.vertex_c());
    let close = |p: &PlanePoint, x: f64, y: f64| {
        p.dist(&PlanePoint::new(
            Float::with_val(prec, x),
            Float::with_val(prec, y),
        )) <= tol
    };
    if !close(&fb, -2.0, 2.0) {
        report.violations.push("f(B) != (-2,2)".into());
    }
    if !close(&fc, 0.0, -2.0) {
        report.violations.push("f(C) != (0,-2)".into());
    }

    // g(D) ⊂ D ∩ U on a grid, with positive finite-difference partials
    let grid = d.grid(density);
    report.grid_points = grid.len();
    let h = Float::with_val(prec, 1e-6);
    for p in &grid {
        match g_map(p) {
            Ok(q) => {
                if !(d.contains_tol(&q, &tol) && in_u(&q)) {
                    report.violations.push(format!("g({p}) leaves D∩U"));
                }
                let px = PlanePoint::new(p.x.clone() + &h, p.y.clone());
                let py = PlanePoint::new(p.x.clone(), p.y.clone() + &h);
                // nudged points may leave D but stay well inside f(U)
                if let (Ok(qx), Ok(qy)) = (g_map(&px), g_map(&py)) {
                    if !(qx.x > q.x && qx.y > q.y && qy.x > q.x && qy.y > q.y) {
                        report
                            .violations
                            .push(format!("partial derivatives of g not positive at {p}"));
                    }
                }
            }
            Err(_) => report.violations.push(format!("{p} outside domain of g")),
        }
    }

    // monotonicity on ordered pairs
    for (i, p) in grid.iter().enumerate() {
        let q = &grid[(7 * i + 1) % grid.len()];
        let (lo, hi) = if p.le(q) {
            (p, q)
        } else if q.le(p) {
            (q, p)
        } else {
            continue;
        };
        // the order interval [lo, hi] must stay in D for the comparison
        let corner = PlanePoint::new(hi.x.clone(), lo.y.clone());
        if !d.contains(&corner) {
            continue;
        }
        if let (Ok(gl), Ok(gh)) = (g_map(lo), g_map(hi)) {
            if !gl.le(&gh) {
                report
                    .violations
                    .push(format!("monotonicity fails between {lo} and {hi}"));
            }
        }
    }

    // nested shrinking boxes from the vertex iterates
    let mut a = d.vertex_a();
    let mut b = d.vertex_b();
    let mut c = d.vertex_c();
    let mut prev_diam: Option<Real> = None;
    for n in 1..=n_steps {
        let an = g_map(&a).expect("vertex iterates stay in D");
        if !a.le(&an) {
            report.violations.push(format!("A_{n} not above A_{}", n - 1));
        }
        a = an;
        b = g_map(&b).expect("vertex iterates stay in D");
        c = g_map(&c).expect("vertex iterates stay in D");
        // bounding box [x_A, x_C] × [y_A, y_B]
        let w = c.x.clone() - &a.x;
        let hgt = b.y.clone() - &a.y;
        let diam = (w.square() + hgt.square()).sqrt();
        report.diameters.push(diam.to_f64());
        if let Some(prev) = prev_diam {
            if !(diam < prev) {
                report
                    .violations
                    .push(format!("bounding box did not shrink at step {n}"));
            }
        }
        prev_diam = Some(diam);
    }
    report
}

/// First iterate at which the forward orbit of p leaves D, or None if it
/// stays for the whole horizon (only the fixed point does).
pub fn escape_check(p: &PlanePoint, horizon: usize) -> Option<usize> {
    let d = RegionD::new(p.prec());
    let mut q = p.clone();
    for m in 1..=horizon {
        q = f_map(&q);
        if !d.contains(&q) {
            return Some(m);
        }
    }
    None
}

#[derive(Clone, Debug)]
pub enum OrbitStatus {
    /// |h_{n0}|, |h_{n0+1}| > 2: certified escape to infinity
    CertifiedUnbounded(DivergenceCertificate),
    /// no escape detected within the horizon
    BoundedSoFar { max_abs: Real },
    /// h_m = 0 detected, forcing the exact tail −2, 2, 2, …
    ZeroTail { m: usize },
}

#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub energy: Real,
    /// (h_{2k}, h_{2k+1}) pairs
    pub pairs: Vec<PlanePoint>,
    pub status: OrbitStatus,
    /// consecutive range of k with (h_{2k}, h_{2k+1}) ∈ D, from k=0
    pub d_trapped: Option<(usize, usize)>,
}

/// Classify the trace orbit of an energy up to the horizon.
pub fn classify_orbit(params: &ModelParams, energy: &Real, horizon: usize) -> OrbitRecord {
    assert!(horizon >= 4);
    let tv = eval_traces(params, energy, horizon);
    let d = RegionD::new(params.precision_bits);
    let mut pairs = Vec::new();
    let mut d_trapped: Option<(usize, usize)> = None;
    for k in 0..=(horizon - 1) / 2 {
        let p = PlanePoint::new(tv.values[2 * k].clone(), tv.values[2 * k + 1].clone());
        if d.contains(&p) {
            match &mut d_trapped {
                None if k == 0 => d_trapped = Some((0, 0)),
                Some((_, hi)) if *hi == k - 1 => *hi = k,
                _ => {}
            }
        }
        pairs.push(p);
    }
    // a certified zero: tiny value followed by the exact −2, 2 pattern
    let zero_tol = Float::with_val(
        params.precision_bits,
        Float::i_exp(1, -(params.precision_bits as i32) / 2),
    );
    let mut zero_at = None;
    for m in 0..=horizon.saturating_sub(2) {
        if tv.values[m].clone().abs() < zero_tol
            && (tv.values[m + 1].clone() + 2u32).abs() < zero_tol
            && (tv.values[m + 2].clone() - 2u32).abs() < zero_tol
        {
            zero_at = Some(m);
            break;
        }
    }
    let status = if let Some(m) = zero_at {
        OrbitStatus::ZeroTail { m }
    } else if let Some(cert) = certify_from_traces(params, &tv) {
        OrbitStatus::CertifiedUnbounded(cert)
    } else {
        let mut max_abs = Float::with_val(params.precision_bits, 0u32);
        for v in &tv.values {
            let a = v.clone().abs();
            if a > max_abs {
                max_abs = a;
            }
        }
        OrbitStatus::BoundedSoFar { max_abs }
    };
    OrbitRecord {
        energy: energy.clone(),
        pairs,
        status,
        d_trapped,
    }
}
