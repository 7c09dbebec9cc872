//! File formats: plain-text polynomial files plus JSON sidecars.
//!
//! Text format, one term per line, `#` comments allowed:
//!
//! ```text
//! HOBO v1 domain=spin n=4
//! # optional comment
//! const 2.5000000000000000e0
//! -1.0000000000000000e0 0 1
//! 2.0000000000000000e0 1 2 3
//! ```
//!
//! Coefficients are written with 17 significant digits so write -> read ->
//! write is byte-identical and values round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::poly::{Domain, Polynomial};
use crate::{Error, Result};

pub fn format_coeff(c: f64) -> String {
    format!("{c:.16e}")
}

/// Render a polynomial in the text format. Terms appear in canonical order,
/// so equal polynomials produce identical bytes.
pub fn write_hobo(poly: &Polynomial) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "HOBO v1 domain={} n={}",
        poly.domain().as_str(),
        poly.num_vars()
    )
    .unwrap();
    if poly.constant() != 0.0 {
        writeln!(out, "const {}", format_coeff(poly.constant())).unwrap();
    }
    for (vars, coeff) in poly.terms() {
        out.push_str(&format_coeff(coeff));
        for v in vars {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_hobo(text: &str) -> Result<Polynomial> {
    let mut lines = text.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            Some((i, l)) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                break (i + 1, t);
            }
            None => return Err(Error::Parse { line: 0, msg: "empty file".into() }),
        }
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "HOBO" || tokens[1] != "v1" {
        return Err(Error::Parse { line: header_no, msg: format!("bad header: {header}") });
    }
    let domain = match tokens[2].strip_prefix("domain=") {
        Some("spin") => Domain::Spin,
        Some("bool") => Domain::Bool,
        _ => {
            return Err(Error::Parse { line: header_no, msg: format!("bad domain: {}", tokens[2]) })
        }
    };
    let n: usize = tokens[3]
        .strip_prefix("n=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { line: header_no, msg: format!("bad size: {}", tokens[3]) })?;
    let mut poly = Polynomial::new(domain, n);
    let mut seen_const = false;
    for (i, line) in lines {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let first = parts.next().unwrap();
        if first == "const" {
            if seen_const {
                return Err(Error::Parse { line: line_no, msg: "duplicate const line".into() });
            }
            seen_const = true;
            let v: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse { line: line_no, msg: "bad const value".into() })?;
            if parts.next().is_some() {
                return Err(Error::Parse { line: line_no, msg: "trailing tokens".into() });
            }
            poly.set_constant(v);
            continue;
        }
        let coeff: f64 = first
            .parse()
            .map_err(|_| Error::Parse { line: line_no, msg: format!("bad coefficient: {first}") })?;
        let mut vars = Vec::new();
        for tok in parts {
            let v: u32 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad variable index: {tok}"),
            })?;
            vars.push(v);
        }
        if vars.is_empty() {
            return Err(Error::Parse { line: line_no, msg: "term without variables".into() });
        }
        poly.add_term(&vars, coeff).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
    }
    Ok(poly)
}

/// Constituent descriptor recorded in instance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartMeta {
    Tile { rows: usize, cols: usize },
    Field { size: usize },
}

/// Generation metadata stored next to each instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    pub k: u32,
    pub seed: u64,
    pub parts: Vec<PartMeta>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_probs: Option<Vec<f64>>,
    pub version: String,
}

impl InstanceMeta {
    pub fn new(generator: &str, k: u32, seed: u64) -> Self {
        InstanceMeta {
            generator: generator.to_string(),
            k,
            seed,
            parts: Vec::new(),
            class_probs: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// JSON sidecar carrying the planted optimum of an instance file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSidecar {
    pub planted_config: Vec<i8>,
    pub planted_energy: f64,
    pub meta: InstanceMeta,
}

/// JSON manifest describing a quadratization, sufficient to replay the
/// variable substitutions. Each substitution row is [a, b, aux, penalty].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionManifest {
    pub strategy: String,
    pub substitutions: Vec<(u32, u32, u32, f64)>,
    pub n_original: u32,
    pub n_total: u32,
}

pub fn save_poly(path: &Path, poly: &Polynomial) -> Result<()> {
    fs::write(path, write_hobo(poly))?;
    Ok(())
}

pub fn load_poly(path: &Path) -> Result<Polynomial> {
    read_hobo(&fs::read_to_string(path)?)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
