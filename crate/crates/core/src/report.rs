//! Tabular output shared by the CSV emitters.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Formats a float with 17 significant digits; `inf`, `-inf` and `nan`
/// for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A header plus string rows, written as CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes `preamble` lines (each prefixed with `# `) followed by the CSV.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The two header lines every output file starts with: the tool version and
/// the effective configuration as JSON.
pub fn preamble<C: Serialize>(config: &C) -> Vec<String> {
    let json = serde_json::to_string(config).unwrap_or_else(|_| "{}".into());
    vec![format!("planar-orbits {}", env!("CARGO_PKG_VERSION")), format!("config: {json}")]
}
