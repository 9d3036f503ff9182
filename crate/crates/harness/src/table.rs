use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::HarnessError;

/// Significant digits written for every number.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x, SIGNIFICANT_DIGITS),
            Cell::Text(s) => (*s).to_string(),
        }
    }
}

/// The `%.{digits}g` rendering: shortest of fixed or exponent form with
/// trailing zeros removed. Negative zero prints as `0` so that sign noise
/// in a solver cannot change output bytes.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Hex sha256 of the spec bytes.
    pub spec_sha256: String,
    pub library_version: String,
}

impl Provenance {
    pub fn for_spec(spec_bytes: &[u8]) -> Self {
        Self {
            spec_sha256: hex::encode(Sha256::digest(spec_bytes)),
            library_version: crate::LIBRARY_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    pub provenance: Option<Provenance>,
}

impl ResultTable {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            provenance: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), HarnessError> {
        if row.len() != self.columns.len() {
            return Err(HarnessError::Internal(format!(
                "row of {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    /// Numeric column; text cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|c| c.as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let internal = |e: csv::Error| HarnessError::Internal(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(internal)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(internal)?;
        }
        let mut out = w
            .into_inner()
            .map_err(|e| HarnessError::Internal(format!("csv: {e}")))?;
        if let Some(p) = &self.provenance {
            writeln!(out, "# spec_sha256={}", p.spec_sha256).map_err(|e| HarnessError::Internal(e.to_string()))?;
            writeln!(out, "# library_version={}", p.library_version)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Writes `table` to `path`; filesystem errors keep their original message.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, table.to_csv_string()).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
