//! One function per subcommand; each returns the rendered artifact so
//! main can route it and map errors to exit codes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use pdspec::bands::{sign_product_check, verify_level, zero_order_check, BandCode, BandError};
use pdspec::coding::{
    enumerate_gaps, epsilon, ids_counting_oracle, ids_of_zero, is_dyadic, is_dyadic_over_three,
    pi, zero_coding, GapKind,
};
use pdspec::covering::{optimal_covering, optimal_coverings, verify_evolution};
use pdspec::dimension::{
    balance_ratio, box_count_estimate, build_sns, dimension_lower_estimate, fibonacci,
    min_length_scaling, sns_counts, trace_bound_excess,
};
use pdspec::dynamics::{classify_orbit, verify_contraction, OrbitStatus};
use pdspec::traces::{
    certify_unbounded, eval_traces_exactish, fundamental_residual_scaled, transfer_trace,
    ModelParams,
};

use crate::cache::load_or_build;
use crate::output::{dec, enc_cells, enc_columns, hex, Table};

#[derive(Debug)]
pub enum CliError {
    /// exit 1: a verified claim failed
    Verification(String),
    /// exit 2: enclosures too wide even after escalation
    Precision(String),
    /// exit 3: unusable input
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Precision(_) => 2,
            CliError::Input(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Verification(m) | CliError::Precision(m) | CliError::Input(m) => m,
        }
    }
}

impl From<BandError> for CliError {
    fn from(e: BandError) -> Self {
        match e {
            BandError::BracketFailure { .. } => CliError::Precision(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub struct Ctx<'a> {
    pub params: ModelParams,
    pub cache: Option<&'a Path>,
}

impl<'a> Ctx<'a> {
    pub fn new(lambda: &str, bits: u32, cache: Option<&'a Path>) -> Result<Self, CliError> {
        let params = ModelParams::new(lambda, bits).map_err(input_err)?;
        Ok(Ctx { params, cache })
    }

    fn meta(&self, t: &mut Table) {
        t.meta("lambda", &self.params.lambda_str);
        t.meta("precision_bits", self.params.precision_bits);
    }
}

pub fn cmd_bands(ctx: &Ctx, level: usize) -> Result<Table, CliError> {
    let tables = load_or_build(ctx.cache, &ctx.params, level)?;
    let mut cols = vec!["code"];
    cols.extend(enc_columns("a"));
    cols.extend(enc_columns("z"));
    cols.extend(enc_columns("b"));
    let mut t = Table::new("bands", cols);
    ctx.meta(&mut t);
    t.meta("level", level);
    for band in &tables[level].bands {
        let mut row = vec![band.code.to_string()];
        row.extend(enc_cells(&band.a));
        row.extend(enc_cells(&band.z));
        row.extend(enc_cells(&band.b));
        t.rows.push(row);
    }
    Ok(t)
}

pub fn cmd_covering(ctx: &Ctx, level: usize) -> Result<Table, CliError> {
    let tables = load_or_build(ctx.cache, &ctx.params, level + 1)?;
    let covering = optimal_covering(level, &tables).map_err(|e| CliError::Verification(e.to_string()))?;
    let mut cols = vec!["word", "type", "code"];
    cols.extend(enc_columns("a"));
    cols.extend(enc_columns("b"));
    let mut t = Table::new("covering", cols);
    ctx.meta(&mut t);
    t.meta("level", level);
    for e in &covering.entries {
        let mut row = vec![
            e.word_string(),
            e.ty.to_string(),
            e.band.code.to_string(),
        ];
        row.extend(enc_cells(&e.band.a));
        row.extend(enc_cells(&e.band.b));
        t.rows.push(row);
    }
    Ok(t)
}

pub fn cmd_gaps(ctx: &Ctx, level: usize) -> Result<Table, CliError> {
    let tables = load_or_build(ctx.cache, &ctx.params, level + 1)?;
    let gaps = enumerate_gaps(level, &tables).map_err(|e| CliError::Verification(e.to_string()))?;
    let mut cols = vec!["kind", "label", "left_edge", "right_edge"];
    cols.extend(enc_columns("inner"));
    let mut t = Table::new("gaps", cols);
    ctx.meta(&mut t);
    t.meta("level", level);
    t.meta("count", gaps.len());
    for g in &gaps {
        let mut row = vec![
            g.kind.to_string(),
            g.label.to_string(),
            g.left.to_string(),
            g.right.to_string(),
        ];
        row.extend(enc_cells(&g.inner));
        t.rows.push(row);
    }
    Ok(t)
}

/// The integrated density of states at a zero, exact: `ids --zero 01`
/// prints 3/8.
pub fn cmd_ids(zero: &str) -> Result<String, CliError> {
    let code: BandCode = zero.parse().map_err(input_err)?;
    Ok(format!("{}\n", ids_of_zero(&code)))
}

pub fn cmd_orbit(ctx: &Ctx, energy: &str, horizon: usize) -> Result<Table, CliError> {
    let e = pdspec::real::parse_decimal(energy, ctx.params.precision_bits).map_err(input_err)?;
    if horizon < 4 || horizon > 64 {
        return Err(CliError::Input(format!("horizon {horizon} outside 4..=64")));
    }
    let rec = classify_orbit(&ctx.params, &e, horizon);
    let mut t = Table::new("orbit", vec!["k", "h_even", "h_even_hex", "h_odd", "h_odd_hex"]);
    ctx.meta(&mut t);
    t.meta("energy", energy);
    t.meta("horizon", horizon);
    let status = match &rec.status {
        OrbitStatus::CertifiedUnbounded(c) => format!("certified-unbounded(n0={})", c.n0),
        OrbitStatus::BoundedSoFar { max_abs } => format!("bounded-so-far(max={})", dec(max_abs)),
        OrbitStatus::ZeroTail { m } => format!("zero-tail(m={m})"),
    };
    t.meta("status", status);
    if let Some((lo, hi)) = rec.d_trapped {
        t.meta("trapped_pairs", format!("{lo}..={hi}"));
    }
    for (k, p) in rec.pairs.iter().enumerate() {
        t.rows.push(vec![
            k.to_string(),
            dec(&p.x),
            hex(&p.x),
            dec(&p.y),
            hex(&p.y),
        ]);
    }
    Ok(t)
}

pub fn cmd_dimension(ctx: &Ctx, level: usize) -> Result<Table, CliError> {
    let tables = load_or_build(ctx.cache, &ctx.params, level + 3)?;
    let coverings =
        optimal_coverings(level + 2, &tables).map_err(|e| CliError::Verification(e.to_string()))?;
    let levels = build_sns(level, &coverings).map_err(|e| CliError::Verification(e.to_string()))?;
    let mut t = Table::new(
        "dimension",
        vec!["n", "count", "min_length", "min_length_scaled"],
    );
    ctx.meta(&mut t);
    let est = dimension_lower_estimate(20, Some(&levels));
    t.meta("estimate_n20", format!("{:.6}", est.estimate));
    t.meta("limit", format!("{:.6}", est.limit));
    if let Some(m) = est.measured {
        t.meta("measured_ratio_estimate", format!("{m:.6}"));
    }
    if let Some(bc) = box_count_estimate(&coverings, 5) {
        t.meta("box_count_slope", format!("{bc:.6}"));
    }
    for (n, len, scaled) in min_length_scaling(&levels) {
        t.rows.push(vec![
            n.to_string(),
            fibonacci(n).to_string(),
            format!("{len:.6e}"),
            format!("{scaled:.6}"),
        ]);
    }
    Ok(t)
}

pub fn cmd_dynamics(bits: u32, steps: usize, grid: usize) -> Result<Table, CliError> {
    let report = verify_contraction(bits, steps, grid);
    let mut t = Table::new("dynamics", vec!["n", "bounding_box_diameter"]);
    t.meta("precision_bits", bits);
    t.meta("grid_points", report.grid_points);
    t.meta("violations", report.violations.len());
    for (i, d) in report.diameters.iter().enumerate() {
        t.rows.push(vec![(i + 1).to_string(), format!("{d:.8}")]);
    }
    if !report.ok() {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        return Err(CliError::Verification(format!(
            "{} contraction violations",
            report.violations.len()
        )));
    }
    Ok(t)
}

/// One pass/fail line per suite; returns Err(Verification) if any failed.
pub fn cmd_verify(
    lambdas: &[String],
    level: usize,
    bits: u32,
    cache: Option<&Path>,
) -> Result<String, CliError> {
    let mut lines = Vec::new();
    let mut failed = false;
    let mut run = |name: &str, lambda: &str, outcome: Result<(), String>| {
        match outcome {
            Ok(()) => lines.push(format!("PASS {name} lambda={lambda}")),
            Err(msg) => {
                failed = true;
                lines.push(format!("FAIL {name} lambda={lambda}: {msg}"));
            }
        }
    };

    for lambda in lambdas {
        let ctx = Ctx::new(lambda, bits, cache)?;
        let params = &ctx.params;

        run("trace-identity", lambda, suite_traces(params));
        let tables = load_or_build(cache, params, level)?;
        run("band-structure", lambda, {
            let mut v = Vec::new();
            for w in tables.windows(2) {
                v.extend(verify_level(params, &w[1], &w[0]));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let deepest = &tables[level];
            let pairs: Vec<(BandCode, BandCode)> = (0..200)
                .map(|_| {
                    let i = rng.gen_range(0..deepest.bands.len());
                    let j = rng.gen_range(0..deepest.bands.len());
                    (deepest.bands[i].code.clone(), deepest.bands[j].code.clone())
                })
                .collect();
            v.extend(zero_order_check(&tables, &pairs));
            for band in deepest.bands.iter().step_by((1 << level) / 4 + 1) {
                v.extend(sign_product_check(params, band, 8));
            }
            if v.is_empty() {
                Ok(())
            } else {
                Err(format!("{} violations, first: {}", v.len(), v[0]))
            }
        });
        let cov_depth = level.saturating_sub(1);
        let coverings = match optimal_coverings(cov_depth, &tables) {
            Ok(c) => c,
            Err(e) => {
                run("covering-evolution", lambda, Err(e.to_string()));
                continue;
            }
        };
        run("covering-evolution", lambda, {
            let r = verify_evolution(&coverings);
            if r.ok() {
                Ok(())
            } else {
                Err(format!("{} violations, first: {}", r.violations.len(), r.violations[0]))
            }
        });
        run("ids-zeros", lambda, suite_ids(level.min(6)));
        run("gap-labels", lambda, suite_gaps(&tables, cov_depth.min(8)));
        if cov_depth >= 3 {
            run("separating-family", lambda, suite_sns(params, &coverings));
        }
    }
    // parameter-free suite, once
    run("contraction", "-", {
        let r = verify_contraction(bits.max(128), 10, 8);
        if r.ok() {
            Ok(())
        } else {
            Err(r.violations[0].clone())
        }
    });

    let mut out = lines.join("\n");
    out.push('\n');
    if failed {
        eprint!("{out}");
        Err(CliError::Verification("verification suite failed".into()))
    } else {
        Ok(out)
    }
}

fn suite_traces(params: &ModelParams) -> Result<(), String> {
    let p = params.precision_bits;
    let tol = Float::with_val(p, Float::i_exp(1, -(p as i32) / 2));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let span = params.lambda.to_f64().abs() + 3.0;
    for _ in 0..100 {
        let e = Float::with_val(p, rng.gen_range(-span..span));
        for n in 2..=10 {
            let r = fundamental_residual_scaled(params, &e, n);
            if r.clone().abs() > tol {
                return Err(format!("identity residual {} at E={}", dec(&r), dec(&e)));
            }
        }
        let tv = eval_traces_exactish(params, &e, 8);
        for n in 0..=8 {
            let tr = transfer_trace(params, &e, n).map_err(|e| e.to_string())?;
            let scale = Float::with_val(p, 1u32) + tv.values[n].clone().abs();
            if (tr - &tv.values[n]).abs() > tol.clone() * scale {
                return Err(format!("transfer mismatch at n={n}, E={}", dec(&e)));
            }
        }
    }
    // an energy far outside the spectrum certifies divergence
    let far = Float::with_val(p, params.lambda.to_f64().abs() + 5.0);
    if certify_unbounded(params, &far, 12).is_none() {
        return Err("no divergence certificate outside the spectrum".into());
    }
    Ok(())
}

fn suite_ids(max_len: usize) -> Result<(), String> {
    for len in 0..=max_len {
        for rank in 0u64..1 << len {
            let bits: Vec<u8> = (0..len).rev().map(|i| ((rank >> i) & 1) as u8).collect();
            let code = BandCode::from_bits(&bits);
            let v = ids_of_zero(&code);
            let omega = zero_coding(&code).map_err(|e| e.to_string())?;
            if epsilon(&pi(&omega)) != v {
                return Err(format!("coding value differs at zero {code}"));
            }
            let m = len + 6;
            if ids_counting_oracle(&code, m) != v {
                return Err(format!("counting oracle differs at zero {code}, m={m}"));
            }
        }
    }
    Ok(())
}

fn suite_gaps(tables: &[pdspec::bands::LevelTable], depth: usize) -> Result<(), String> {
    let gaps = enumerate_gaps(depth, tables).map_err(|e| e.to_string())?;
    if gaps.is_empty() {
        return Err(format!("no certified gaps at depth {depth}"));
    }
    for g in &gaps {
        match g.kind {
            GapKind::IOdd | GapKind::IEven => {
                if !is_dyadic(&g.label) {
                    return Err(format!("type-I label {} not dyadic", g.label));
                }
            }
            GapKind::II => {
                if !is_dyadic_over_three(&g.label) {
                    return Err(format!("type-II label {} not dyadic/3", g.label));
                }
            }
        }
    }
    Ok(())
}

fn suite_sns(
    params: &ModelParams,
    coverings: &[pdspec::covering::OptimalCovering],
) -> Result<(), String> {
    let n_max = coverings.len().saturating_sub(3);
    let levels = build_sns(n_max, coverings).map_err(|e| e.to_string())?;
    let counts = sns_counts(n_max);
    for l in &levels {
        if l.count as u64 != counts[l.level] {
            return Err(format!("count {} at level {}", l.count, l.level));
        }
    }
    let excess = trace_bound_excess(params, &levels);
    if excess > 0.0 {
        return Err(format!("trace bound exceeded by {excess}"));
    }
    for (n, len, scaled) in min_length_scaling(&levels) {
        if !(scaled > 0.0) {
            return Err(format!("length collapse at level {n}: {len}"));
        }
    }
    if n_max >= 2 && balance_ratio(&levels, 1, n_max - 1) > 2.0 {
        return Err("balance ratio exceeds 2".into());
    }
    Ok(())
}
