//! Acceptance gate: one test per release criterion, each printing a
//! PASS/FAIL line with the measured quantity at the pinned tolerance.

use std::process::Command;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use pdspec::bands::{
    build_levels, sign_product_check, verify_level, zero_order_check, BandCode,
    LevelTable,
};
use pdspec::coding::{
    enumerate_gaps, epsilon, ids_counting_oracle, ids_of_zero, is_dyadic, is_dyadic_over_three,
    in_f_image, pi, pi_star, zero_coding, GapKind, SymbolicPoint,
};
use pdspec::covering::{optimal_coverings, verify_evolution, BandType};
use pdspec::dimension::{
    balance_ratio, build_sns, dimension_lower_estimate, fibonacci, min_length_scaling, sns_counts,
    trace_bound_excess,
};
use pdspec::dynamics::{
    escape_check, f_map, fixed_points, g_map, in_u, verify_contraction, PlanePoint, RegionD,
};
use pdspec::real::Real;
use pdspec::traces::{
    eval_traces_exactish, fundamental_residual_scaled, transfer_trace, ModelParams,
};

const DEEP_BITS: u32 = 192;

fn params(lambda: &str, bits: u32) -> ModelParams {
    ModelParams::new(lambda, bits).expect("valid parameters")
}

/// λ=2 tables to level 13, shared by several criteria.
fn lam2_tables() -> &'static Vec<LevelTable> {
    static T: OnceLock<Vec<LevelTable>> = OnceLock::new();
    T.get_or_init(|| build_levels(&params("2", DEEP_BITS), 13).expect("level build"))
}

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

#[test]
fn criterion_1_closed_forms() {
    let p = params("2", 128);
    let tables = build_levels(&p, 1).expect("two levels");
    let s6 = Float::with_val(128, 6u32).sqrt();
    let s8 = Float::with_val(128, 8u32).sqrt();
    // level 0: [λ−2, λ+2] with zero at λ; level 1: ±[2, 2√2], zeros ±√6
    let b0 = &tables[0].bands[0];
    let (l, r) = (&tables[1].bands[0], &tables[1].bands[1]);
    let checks: Vec<(Real, f64)> = vec![
        (b0.a.mid(), 0.0),
        (b0.z.mid(), 2.0),
        (b0.b.mid(), 4.0),
        (l.a.mid() + &s8, 0.0),
        (l.z.mid() + &s6, 0.0),
        (l.b.mid(), -2.0),
        (r.a.mid(), 2.0),
        (r.z.mid() - &s6, 0.0),
        (r.b.mid() - &s8, 0.0),
    ];
    let worst = checks
        .iter()
        .map(|(got, want)| (got.clone() - *want).abs().to_f64())
        .fold(0.0f64, f64::max);
    report(
        "criterion 1 (low-level closed forms)",
        worst <= 1e-12,
        &format!("max abs error {worst:.3e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_2_trace_oracles() {
    let bits = 128u32;
    let tol = 2f64.powi(-(bits as i32) / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let lambda = format!("{:.4}", rng.gen_range(0.05f64..4.0));
        let p = params(&lambda, bits);
        let span = p.lambda.to_f64() + 3.0;
        let e = Float::with_val(bits, rng.gen_range(-span..span));
        let n = rng.gen_range(2..=12usize);
        let tv = eval_traces_exactish(&p, &e, n + 1);
        let tr = transfer_trace(&p, &e, n).expect("n <= 12");
        let rel = ((tr - &tv.values[n]).abs() / (Float::with_val(bits, 1) + tv.values[n].clone().abs()))
            .to_f64();
        worst = worst.max(rel);
        for k in 2..=n {
            worst = worst.max(fundamental_residual_scaled(&p, &e, k).abs().to_f64());
        }
    }
    report(
        "criterion 2 (transfer oracle and product identity)",
        worst <= tol,
        &format!("worst relative deviation {worst:.3e} (tol {tol:.3e})"),
    );
}

#[test]
fn criterion_3_structural_suites() {
    let mut violations: Vec<String> = Vec::new();
    for lambda in ["0.2", "0.5", "1", "2", "4"] {
        let p = params(lambda, 160);
        let tables = build_levels(&p, 12).expect("levels to 12");
        for w in tables.windows(2) {
            violations.extend(
                verify_level(&p, &w[1], &w[0])
                    .into_iter()
                    .map(|v| format!("λ={lambda}: {v}")),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let deep = &tables[12];
        let pairs: Vec<(BandCode, BandCode)> = (0..300)
            .map(|_| {
                let i = rng.gen_range(0..deep.bands.len());
                let j = rng.gen_range(0..deep.bands.len());
                (deep.bands[i].code.clone(), deep.bands[j].code.clone())
            })
            .collect();
        violations.extend(zero_order_check(&tables, &pairs));
        for band in deep.bands.iter().step_by(512) {
            violations.extend(sign_product_check(&p, band, 6));
        }
        let coverings = optimal_coverings(11, &tables).expect("coverings");
        let evo = verify_evolution(&coverings);
        violations.extend(evo.violations.into_iter().map(|v| format!("λ={lambda}: {v}")));
    }
    report(
        "criterion 3 (structural suites, five couplings, levels ≤ 12)",
        violations.is_empty(),
        &format!(
            "{} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_4_ids_exact() {
    let mut bad = 0usize;
    let mut checked = 0usize;
    for len in 0..=10usize {
        for rank in 0u64..1 << len {
            let bits: Vec<u8> = (0..len).rev().map(|i| ((rank >> i) & 1) as u8).collect();
            let code = BandCode::from_bits(&bits);
            let v = ids_of_zero(&code);
            let omega = zero_coding(&code).expect("zero coding");
            checked += 1;
            if epsilon(&pi(&omega)) != v || ids_counting_oracle(&code, len + 6) != v {
                bad += 1;
            }
        }
    }
    report(
        "criterion 4 (density of states, exact rationals)",
        bad == 0,
        &format!("{checked} zeros checked, {bad} mismatches"),
    );
}

#[test]
fn criterion_5_gap_labels() {
    let tables = lam2_tables();
    let mut bad: Vec<String> = Vec::new();
    let mut counts = (0usize, 0usize);
    for depth in 1..=12usize {
        for g in enumerate_gaps(depth, tables).expect("gaps enumerate") {
            let zero = num_rational::BigRational::from_integer(0.into());
            let one = num_rational::BigRational::from_integer(1.into());
            let in_unit = g.label > zero && g.label < one;
            match g.kind {
                GapKind::IOdd | GapKind::IEven => {
                    counts.0 += 1;
                    if !(in_unit && is_dyadic(&g.label)) {
                        bad.push(format!("type-I label {} at depth {depth}", g.label));
                    }
                }
                GapKind::II => {
                    counts.1 += 1;
                    if !(in_unit && is_dyadic_over_three(&g.label) && !in_f_image(&g.label).unwrap_or(true)) {
                        bad.push(format!("type-II label {} at depth {depth}", g.label));
                    }
                }
            }
        }
    }
    report(
        "criterion 5 (gap labels to depth 12)",
        bad.is_empty(),
        &format!(
            "{} type-I and {} type-II labels, {} invalid{}",
            counts.0,
            counts.1,
            bad.len(),
            bad.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_6_dimension_bound() {
    let counts = sns_counts(20);
    let counts_ok = (0..=20).all(|n| counts[n] == fibonacci(n)) && counts[20] == 17711;

    let tables = lam2_tables();
    let coverings = optimal_coverings(12, tables).expect("coverings to 12");
    let levels = build_sns(10, &coverings).expect("family to level 10");
    let scaled = min_length_scaling(&levels);
    let min_scaled = scaled.iter().map(|&(_, _, s)| s).fold(f64::INFINITY, f64::min);
    let excess = trace_bound_excess(&params("2", DEEP_BITS), &levels);
    let balance = balance_ratio(&levels, 1, 6);

    let est = dimension_lower_estimate(20, Some(&levels));
    let ok = counts_ok
        && min_scaled > 0.05
        && excess <= 0.0
        && balance <= 2.0
        && (est.estimate - 0.3528).abs() <= 1e-4
        && (est.limit - 0.34712).abs() <= 1e-5;
    report(
        "criterion 6 (Fibonacci family and dimension bound)",
        ok,
        &format!(
            "counts ok: {counts_ok}, min length·4^n ≥ {min_scaled:.4}, trace excess {excess:.1e}, \
             balance {balance:.3}, estimate {:.5}, limit {:.5}",
            est.estimate, est.limit
        ),
    );
}

#[test]
fn criterion_7_plane_map() {
    let bits = 128u32;
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2));
    let mut fails: Vec<String> = Vec::new();

    // fixed points to residual < 1e-25
    let mut worst_fix = 0f64;
    for fp in fixed_points(bits) {
        worst_fix = worst_fix.max(f_map(&fp).dist(&fp).to_f64());
    }
    if worst_fix >= 1e-25 {
        fails.push(format!("fixed-point residual {worst_fix:.3e}"));
    }

    // vertex images
    let d = RegionD::new(bits);
    let fb = f_map(&d.vertex_b());
    let fc = f_map(&d.vertex_c());
    let off = |p: &PlanePoint, x: f64, y: f64| {
        p.dist(&PlanePoint::new(Float::with_val(bits, x), Float::with_val(bits, y)))
            > tol.clone()
    };
    if off(&fb, -2.0, 2.0) || off(&fc, 0.0, -2.0) {
        fails.push("vertex images off".into());
    }

    // inverse identity on 10^3 samples
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    let mut worst_inv = 0f64;
    while done < 1000 {
        let p = PlanePoint::new(
            Float::with_val(bits, rng.gen_range(-1.414..-0.01)),
            Float::with_val(bits, rng.gen_range(-1.414..-0.01)),
        );
        if !in_u(&p) {
            continue;
        }
        done += 1;
        let back = g_map(&f_map(&p)).expect("f(U) is the domain of g");
        let norm = (p.x.clone().square() + p.y.clone().square()).sqrt();
        let rel = (back.dist(&p) / (Float::with_val(bits, 1) + norm)).to_f64();
        worst_inv = worst_inv.max(rel);
    }
    if worst_inv > tol.to_f64() {
        fails.push(format!("inverse round trip {worst_inv:.3e}"));
    }

    // nested boxes; the stated diameter target at step 8
    let rep = verify_contraction(bits, 8, 10);
    if !rep.ok() {
        fails.push(format!("contraction: {}", rep.violations[0]));
    }
    let diam8 = rep.diameters[7];
    if diam8 >= 0.05 {
        fails.push(format!("box diameter {diam8:.4} at step 8 (target < 0.05)"));
    }

    // escape in finite time away from the fixed point
    let f = d.fixed_point();
    let mut escapes_ok = true;
    let mut sampled = 0;
    for p in d.grid(35) {
        if p.dist(&f).to_f64() < 1e-3 {
            continue;
        }
        sampled += 1;
        if sampled > 1000 {
            break;
        }
        if escape_check(&p, 10_000).is_none() {
            escapes_ok = false;
            fails.push(format!("{p} never leaves the trapping region"));
            break;
        }
    }
    let _ = escapes_ok;

    report(
        "criterion 7 (plane map suite)",
        fails.is_empty(),
        &format!(
            "fixed-point residual {worst_fix:.1e}, inverse {worst_inv:.1e}, box diameter at \
             step 8 = {diam8:.4}, {sampled} escape samples; failures: {}",
            if fails.is_empty() { "none".to_owned() } else { fails.join("; ") }
        ),
    );
}

/// Unclamped h_n and h'_n at one energy (the library derivative helper
/// saturates at 2^1000, far below the deep-level traces needed here).
fn h_with_deriv(p: &ModelParams, e: &Real, n: usize) -> (Real, Real) {
    let prec = p.precision_bits;
    let tv = eval_traces_exactish(p, e, n);
    let mut d0 = Float::with_val(prec, 1);
    if n == 0 {
        return (tv.values[0].clone(), d0);
    }
    let mut d1 = Float::with_val(prec, 2) * e;
    for k in 2..=n {
        let w = tv.values[k - 2].clone().square() - 2u32;
        let d = d1.clone() * w
            + Float::with_val(prec, 2) * &tv.values[k - 1] * &tv.values[k - 2] * &d0;
        d0 = d1;
        d1 = d;
    }
    (tv.values[n].clone(), d1)
}

/// Safeguarded Newton for the unique zero of h_level in (a, b), where
/// h is negative on the `neg_left` side of the zero.  The bracket must
/// already isolate the zero.  Fails if the residual cannot be driven
/// down, which signals exhausted precision.
fn polish_zero(
    p: &ModelParams,
    level: usize,
    mut a: Real,
    mut b: Real,
    neg_left: bool,
) -> Result<Real, String> {
    let prec = p.precision_bits;
    let tiny = Float::with_val(32, Float::i_exp(1, -(prec as i32) + 48));
    let mut z = (a.clone() + &b) / 2u32;
    let mut last_v = Float::with_val(prec, 1);
    for _ in 0..4096 {
        let (v, d) = h_with_deriv(p, &z, level);
        last_v = v.clone();
        if v == 0 {
            return Ok(z);
        }
        if v.is_sign_negative() == neg_left {
            a = z.clone();
        } else {
            b = z.clone();
        }
        let width = b.clone() - &a;
        let scale = Float::with_val(prec, 1) + z.clone().abs();
        if width <= scale * &tiny {
            break;
        }
        let newton = z.clone() - v / d;
        z = if newton > a && newton < b {
            newton
        } else {
            (a.clone() + &b) / 2u32
        };
    }
    if last_v.abs().to_f64() > 2f64.powi(-64) {
        return Err(format!("level {level}: zero not resolved at {prec} bits"));
    }
    Ok(z)
}

/// Locate the energy of a deep band code at the working precision.
///
/// Each code bit selects the sub-slot left or right of the unique zero
/// of h_k in the current slot (the level-k zeros interlace the lower
/// levels, so slots always isolate exactly one).  The new zero sits
/// inside the band attached to the previous level's zero, where h_k is
/// exactly -2, so the negative-sign side of h_k is always the inside:
/// a binary search over geometric probe distances from that endpoint
/// brackets the zero in O(log precision) evaluations even when the
/// slots collapse doubly exponentially (below 10^-1000 by level 24 near
/// a spectrum edge at coupling 2), and safeguarded Newton finishes.
/// The returned last-level zero lies inside every band of the chain, so
/// all chain-level traces are trustworthy there.  Errors signal that
/// the working precision cannot resolve the chain.
fn descend_code(p: &ModelParams, bits: &[u8]) -> Result<Real, String> {
    let prec = p.precision_bits;
    let mut lo = p.lambda.clone() - 6u32;
    let mut hi = p.lambda.clone() + 6u32;
    let mut z = p.lambda.clone(); // the zero of h_0
    for k in 1..=bits.len() {
        let from_low = bits[k - 1] == 1;
        if bits[k - 1] == 0 {
            hi = z.clone();
        } else {
            lo = z.clone();
        }
        let width = hi.clone() - &lo;
        if !(width > 0) {
            return Err(format!("level {k}: slot collapsed at {prec} bits"));
        }
        let base = if from_low { lo.clone() } else { hi.clone() };
        let probe = |j: u32| -> Real {
            let step = width.clone() * Float::with_val(32, Float::i_exp(1, -(j as i32)));
            if from_low {
                base.clone() + step
            } else {
                base.clone() - step
            }
        };
        // negative h_k means the probe landed between the previous zero
        // and the new one; the predicate is monotone in j
        let negative = |x: &Real| eval_traces_exactish(p, x, k).values[k].is_sign_negative();
        let j_max = prec + 64;
        let jh = if negative(&probe(1)) {
            1
        } else {
            let (mut jl, mut jh) = (1u32, j_max);
            if !negative(&probe(j_max)) {
                return Err(format!("level {k}: band below resolution at {prec} bits"));
            }
            while jh - jl > 1 {
                let jm = jl + (jh - jl) / 2;
                if negative(&probe(jm)) {
                    jh = jm;
                } else {
                    jl = jm;
                }
            }
            jh
        };
        let inside = probe(jh);
        let outside = if jh == 1 {
            if from_low { hi.clone() } else { lo.clone() }
        } else {
            probe(jh - 1)
        };
        let (a, b, neg_left) = if from_low {
            (inside, outside, true)
        } else {
            (outside, inside, false)
        };
        z = polish_zero(p, k, a, b, neg_left)?;
    }
    Ok(z)
}

/// Run the descent at doubling precision until it certifies itself.
fn descend_adaptive(lambda: &str, bits: &[u8], start_bits: u32) -> (ModelParams, Real) {
    let mut prec = start_bits;
    for _ in 0..3 {
        let p = params(lambda, prec);
        match descend_code(&p, bits) {
            Ok(z) => return (p, z),
            Err(msg) => eprintln!("descent retry: {msg}"),
        }
        prec *= 2;
    }
    panic!("descent failed up to {prec} bits");
}

#[test]
fn criterion_8_deep_energies() {
    let depth = 24usize;
    let margin = 2usize;

    // an energy whose coding ends in the alternating pair (3_or 0_e); its
    // band chain collapses doubly exponentially, so locate it by zero
    // descent at very high precision instead of via the level tables
    let omega = SymbolicPoint::new(
        vec![BandType::T0e, BandType::T1o, BandType::T2e],
        vec![BandType::T3or, BandType::T0e],
    )
    .expect("admissible");
    let code_bits = pi_star(&omega.prefix(depth + margin - 1)).expect("admissible prefix");
    let (p, e) = descend_adaptive("2", &code_bits, 16_384);
    let tv = eval_traces_exactish(&p, &e, depth);
    let s2 = Float::with_val(p.precision_bits, 2u32).sqrt();
    let even_err = (tv.values[depth].clone() - &s2).abs().to_f64();
    let odd_log2: Vec<f64> = (0..10)
        .map(|i| tv.values[depth - 19 + 2 * i].clone().abs().log2().to_f64())
        .collect();
    // final odd magnitude above 10^3, monotone over the last ten odd indices
    let odd_ok = odd_log2[9] > 1000f64.log2() && odd_log2.windows(2).all(|w| w[1] > w[0]);

    // an energy inside the restricted-alphabet limit set stays bounded;
    // those bands shrink only like 4^-n, so modest precision suffices
    let omega_b = SymbolicPoint::new(
        vec![BandType::T0e],
        vec![BandType::T1o, BandType::T2e],
    )
    .expect("admissible");
    let code_b = pi_star(&omega_b.prefix(depth + margin - 1)).expect("admissible prefix");
    let (pb, eb) = descend_adaptive("2", &code_b, 1024);
    let tvb = eval_traces_exactish(&pb, &eb, depth);
    let max_abs = tvb
        .values
        .iter()
        .map(|v| v.clone().abs().to_f64())
        .fold(0.0f64, f64::max);

    let ok = even_err < 0.05 && odd_ok && max_abs <= 2.0 + 1e-9;
    report(
        "criterion 8 (depth-24 trace asymptotics)",
        ok,
        &format!(
            "|h_24 − √2| = {even_err:.2e}, odd log2|h| from {:.2} to {:.1} (monotone: {}), \
             bounded orbit max |h_k| = {max_abs:.6}",
            odd_log2[0],
            odd_log2[9],
            odd_log2.windows(2).all(|w| w[1] > w[0]),
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let mut ok = true;
    let mut detail = String::new();
    for (args, label) in [
        (vec!["gaps", "--lambda", "2", "--level", "6"], "gaps"),
        (vec!["bands", "--lambda", "0.2", "--level", "7", "--format", "csv"], "bands"),
        (vec!["dimension", "--lambda", "2", "--level", "4"], "dimension"),
    ] {
        let run = |threads: &str| {
            Command::new(env!("CARGO_BIN_EXE_pdh"))
                .args(&args)
                .env("RAYON_NUM_THREADS", threads)
                .env_remove("PDH_CACHE")
                .output()
                .expect("binary runs")
        };
        let (a, b, c) = (run("1"), run("2"), run("8"));
        if !(a.status.success() && a.stdout == b.stdout && b.stdout == c.stdout) {
            ok = false;
            detail = format!("{label} differs across thread counts");
            break;
        }
    }
    report(
        "criterion 9 (byte-identical exports)",
        ok,
        if ok { "three commands, thread counts 1/2/8" } else { &detail },
    );
}
