//! Versioned level cache: bit-exact JSON round trip of band tables keyed
//! by (λ string, precision, format version). A key mismatch or a corrupt
//! file triggers recompute, never silent reuse.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pdspec::bands::{build_levels, Band, BandCode, BandError, LevelTable, RPoint};
use pdspec::real::{from_hex, to_hex, Enc};
use pdspec::traces::ModelParams;

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheEnc {
    lo: String,
    hi: String,
}

#[derive(Serialize, Deserialize)]
struct CacheBand {
    code: String,
    a: CacheEnc,
    z: CacheEnc,
    b: CacheEnc,
}

#[derive(Serialize, Deserialize)]
struct CacheZero {
    value: CacheEnc,
    owner: String,
}

#[derive(Serialize, Deserialize)]
struct CacheLevel {
    level: usize,
    bands: Vec<CacheBand>,
    zeros: Vec<CacheZero>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    lambda: String,
    precision_bits: u32,
    levels: Vec<CacheLevel>,
}

fn enc_out(e: &Enc) -> CacheEnc {
    CacheEnc {
        lo: to_hex(&e.lo),
        hi: to_hex(&e.hi),
    }
}

fn enc_in(c: &CacheEnc, prec: u32) -> Option<Enc> {
    let lo = from_hex(&c.lo, prec).ok()?;
    let hi = from_hex(&c.hi, prec).ok()?;
    if lo > hi {
        return None;
    }
    Some(Enc::new(lo, hi))
}

pub fn cache_path(dir: &Path, params: &ModelParams) -> PathBuf {
    let lam: String = params
        .lambda_str
        .chars()
        .map(|c| if c == '.' { 'd' } else { c })
        .collect();
    dir.join(format!(
        "bands-v{CACHE_FORMAT_VERSION}-lam{lam}-p{}.json",
        params.precision_bits
    ))
}

/// Load tables through level n_max, or None on any mismatch.
pub fn cache_load(dir: &Path, params: &ModelParams, n_max: usize) -> Option<Vec<LevelTable>> {
    let text = fs::read_to_string(cache_path(dir, params)).ok()?;
    let file: CacheFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("warning: corrupt cache ignored: {e}");
            return None;
        }
    };
    if file.format_version != CACHE_FORMAT_VERSION
        || file.lambda != params.lambda_str
        || file.precision_bits != params.precision_bits
        || file.levels.len() < n_max + 1
    {
        return None;
    }
    let prec = params.precision_bits;
    let mut tables = Vec::with_capacity(n_max + 1);
    for (n, lvl) in file.levels.into_iter().take(n_max + 1).enumerate() {
        if lvl.level != n || lvl.bands.len() != 1 << n {
            eprintln!("warning: corrupt cache ignored: bad level {n}");
            return None;
        }
        let mut bands = Vec::with_capacity(lvl.bands.len());
        for cb in &lvl.bands {
            let code: BandCode = match cb.code.parse() {
                Ok(c) => c,
                Err(_) => return None,
            };
            let (Some(a), Some(z), Some(b)) =
                (enc_in(&cb.a, prec), enc_in(&cb.z, prec), enc_in(&cb.b, prec))
            else {
                eprintln!("warning: corrupt cache ignored: bad enclosure at level {n}");
                return None;
            };
            bands.push(Band { code, a, z, b });
        }
        let mut zeros = Vec::with_capacity(lvl.zeros.len());
        for cz in &lvl.zeros {
            let owner: BandCode = cz.owner.parse().ok()?;
            let value = enc_in(&cz.value, prec)?;
            zeros.push(RPoint { value, owner });
        }
        tables.push(LevelTable {
            level: n,
            bands,
            zeros,
        });
    }
    Some(tables)
}

pub fn cache_store(dir: &Path, params: &ModelParams, tables: &[LevelTable]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let file = CacheFile {
        format_version: CACHE_FORMAT_VERSION,
        lambda: params.lambda_str.clone(),
        precision_bits: params.precision_bits,
        levels: tables
            .iter()
            .map(|t| CacheLevel {
                level: t.level,
                bands: t
                    .bands
                    .iter()
                    .map(|b| CacheBand {
                        code: b.code.to_string(),
                        a: enc_out(&b.a),
                        z: enc_out(&b.z),
                        b: enc_out(&b.b),
                    })
                    .collect(),
                zeros: t
                    .zeros
                    .iter()
                    .map(|z| CacheZero {
                        value: enc_out(&z.value),
                        owner: z.owner.to_string(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&file).expect("cache serializes");
    text.push('\n');
    fs::write(cache_path(dir, params), text)
}

/// Cached build: reuse a matching cache file, otherwise compute and
/// (best effort) store.
pub fn load_or_build(
    dir: Option<&Path>,
    params: &ModelParams,
    n_max: usize,
) -> Result<Vec<LevelTable>, BandError> {
    if let Some(d) = dir {
        if let Some(tables) = cache_load(d, params, n_max) {
            return Ok(tables);
        }
    }
    let tables = build_levels(params, n_max)?;
    if let Some(d) = dir {
        if let Err(e) = cache_store(d, params, &tables) {
            eprintln!("warning: cache write failed: {e}");
        }
    }
    Ok(tables)
}
