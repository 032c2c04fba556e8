//! Deterministic table rendering: JSON or CSV, every real carried both as
//! a rounded decimal (display) and an exact hexadecimal float.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use pdspec::real::{to_hex, Enc, Real};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (use json or csv)")),
        }
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// One exported table: sorted metadata, a header, and string rows.
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<&'static str>) -> Self {
        Table {
            name: name.to_owned(),
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_owned(), value.to_string()));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_json(&self) -> String {
        let meta: serde_json::Map<String, serde_json::Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let body = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "table": self.name,
            "meta": meta,
            "columns": self.columns,
            "rows": self.rows,
        });
        let mut s = serde_json::to_string_pretty(&body).expect("string tables serialize");
        s.push('\n');
        s
    }

    fn render_csv(&self) -> String {
        let mut s = format!("# schema_version={SCHEMA_VERSION}\n# table={}\n", self.name);
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let quoted: Vec<String> = row
                .iter()
                .map(|c| {
                    if c.contains(',') || c.contains('"') {
                        format!("\"{}\"", c.replace('"', "\"\""))
                    } else {
                        c.clone()
                    }
                })
                .collect();
            s.push_str(&quoted.join(","));
            s.push('\n');
        }
        s
    }
}

/// Display form of a real: 24 significant decimal digits.
pub fn dec(x: &Real) -> String {
    x.to_string_radix(10, Some(24))
}

pub fn hex(x: &Real) -> String {
    to_hex(x)
}

/// The three columns (decimal midpoint, exact hex lo, exact hex hi) an
/// enclosure contributes to a row.
pub fn enc_cells(e: &Enc) -> [String; 3] {
    [dec(&e.mid()), hex(&e.lo), hex(&e.hi)]
}

pub fn enc_columns(prefix: &'static str) -> [&'static str; 3] {
    // column names are static for determinism; the prefix picks the triple
    match prefix {
        "a" => ["a", "a_lo_hex", "a_hi_hex"],
        "z" => ["z", "z_lo_hex", "z_hi_hex"],
        "b" => ["b", "b_lo_hex", "b_hi_hex"],
        "inner" => ["inner", "inner_lo_hex", "inner_hi_hex"],
        _ => unreachable!("unknown enclosure column prefix"),
    }
}

/// Write to the path, or stdout when none given.
pub fn emit(out: Option<&Path>, content: &str) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, content),
        None => io::stdout().write_all(content.as_bytes()),
    }
}
