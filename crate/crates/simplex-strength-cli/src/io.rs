//! File input (point and distance files) and record output.
//!
//! Point files are headerless CSV, one vertex per row with `n` columns and
//! `n + 1` rows, or JSON of the form `{"points": [[...], ...]}` (detected by
//! a leading `{`). Distance files are headerless CSV symmetric matrices.
//!
//! All numeric output renders with 17 significant digits, which round-trips
//! f64 exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use simplex_strength::{DistanceMatrix, PointCloudSimplex};

/// 17-significant-digit rendering (1 leading + 16 fractional digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Deserialize)]
struct PointsFile {
    points: Vec<Vec<f64>>,
}

/// Reads a simplex from a CSV or JSON point file.
pub fn read_points(path: &Path) -> Result<PointCloudSimplex> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read point file {}", path.display()))?;
    let rows = if text.trim_start().starts_with('{') {
        let parsed: PointsFile = serde_json::from_str(&text)
            .with_context(|| format!("{}: invalid JSON point file", path.display()))?;
        parsed.points
    } else {
        parse_numeric_csv(path, &text)?
    };
    PointCloudSimplex::new(rows).with_context(|| format!("{}: not a valid simplex", path.display()))
}

/// Reads a symmetric distance matrix from a CSV file.
pub fn read_distances(path: &Path) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read distance file {}", path.display()))?;
    let rows = parse_numeric_csv(path, &text)?;
    DistanceMatrix::from_rows(rows)
        .with_context(|| format!("{}: not a valid distance matrix", path.display()))
}

/// Headerless numeric CSV with 1-based line/column diagnostics. Blank lines
/// are skipped.
fn parse_numeric_csv(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (colno, field) in line.split(',').enumerate() {
            let token = field.trim();
            let value: f64 = token.parse().with_context(|| {
                format!(
                    "{}:{}:{}: invalid number {:?}",
                    path.display(),
                    lineno + 1,
                    colno + 1,
                    token
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: file contains no data rows", path.display());
    }
    Ok(rows)
}

/// One strength computation, ready for CSV or JSON emission. `sign` and
/// `signed` are absent for distance-only input, where the orientation is
/// undefined, and render as the marker `unavailable`.
#[derive(Debug, Clone)]
pub struct OutputRecord {
    pub file: String,
    pub dim: usize,
    pub sigma: f64,
    pub sign: Option<i8>,
    pub signed: Option<f64>,
    pub volume_squared: f64,
    pub half_perimeter: f64,
}

pub const CSV_HEADER: &str = "file,dim,sigma,sign,signed,volume_squared,half_perimeter";

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl OutputRecord {
    pub fn to_csv_row(&self) -> String {
        let sign = self
            .sign
            .map_or_else(|| "unavailable".to_string(), |s| s.to_string());
        let signed = self
            .signed
            .map_or_else(|| "unavailable".to_string(), fmt_f64);
        format!(
            "{},{},{},{},{},{},{}",
            csv_quote(&self.file),
            self.dim,
            fmt_f64(self.sigma),
            sign,
            signed,
            fmt_f64(self.volume_squared),
            fmt_f64(self.half_perimeter),
        )
    }

    /// Hand-assembled JSON object: serde_json shortens floats, and the
    /// output contract pins 17 significant digits.
    pub fn to_json(&self) -> String {
        let sign = self
            .sign
            .map_or_else(|| "\"unavailable\"".to_string(), |s| s.to_string());
        let signed = self
            .signed
            .map_or_else(|| "\"unavailable\"".to_string(), fmt_f64);
        format!(
            "{{\"file\":{},\"dim\":{},\"sigma\":{},\"sign\":{},\"signed\":{},\
             \"volume_squared\":{},\"half_perimeter\":{}}}",
            serde_json::to_string(&self.file).expect("strings serialize"),
            self.dim,
            fmt_f64(self.sigma),
            sign,
            signed,
            fmt_f64(self.volume_squared),
            fmt_f64(self.half_perimeter),
        )
    }
}

pub fn records_to_json(records: &[OutputRecord]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in records.iter().enumerate() {
        out.push_str("  ");
        out.push_str(&r.to_json());
        if i + 1 < records.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push(']');
    out
}
