//! Tables, number formatting and the two output formats.
//!
//! Every float is printed with 9 significant digits, so results are stable
//! across platforms at double precision. The duration is the only field
//! that changes from run to run, and it appears only in JSON.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};

use crate::config::{Format, ScenarioConfig};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(t) => json!(t),
            Cell::Num(x) => match format_number(*x).parse::<f64>() {
                Ok(v) if v.is_finite() => json!(v),
                _ => json!(format_number(*x)),
            },
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(t: &str) -> Self {
        Cell::Text(t.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    /// Column `name` of every row, as numbers.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Num(x) => *x,
                Cell::Int(k) => *k as f64,
                _ => f64::NAN,
            })
            .collect()
    }
}

/// Largest deviation observed for one invariant, against its allowance.
#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceEntry {
    pub invariant: String,
    pub max_residual: f64,
    pub limit: f64,
}

impl ToleranceEntry {
    pub fn new(invariant: &str, max_residual: f64, limit: f64) -> Self {
        Self { invariant: invariant.to_string(), max_residual, limit }
    }

    pub fn ok(&self) -> bool {
        self.max_residual <= self.limit
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub tables: Vec<Table>,
    pub tolerance: Vec<ToleranceEntry>,
    pub duration: Duration,
}

impl RunResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// The tolerance report laid out as one more table.
    pub fn tolerance_table(&self) -> Table {
        let mut t = Table::new("tolerance", &["invariant", "max_residual", "limit", "ok"]);
        for e in &self.tolerance {
            t.push(vec![e.invariant.as_str().into(), e.max_residual.into(), e.limit.into(), e.ok().into()]);
        }
        t
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scenario": self.config,
            "tables": self.tables.iter().map(Table::to_json).collect::<Vec<_>>(),
            "tolerance_report": self.tolerance.iter().map(|e| json!({
                "invariant": e.invariant,
                "max_residual": Cell::Num(e.max_residual).json(),
                "limit": Cell::Num(e.limit).json(),
                "ok": e.ok(),
            })).collect::<Vec<_>>(),
            "duration_seconds": self.duration.as_secs_f64(),
        })
    }

    /// Every table, then the tolerance table, each headed by `# table: name`.
    pub fn to_csv_stream(&self) -> String {
        let parts: Vec<String> =
            self.tables.iter().chain(std::iter::once(&self.tolerance_table())).map(|t| format!("# table: {}\n{}", t.name, t.to_csv())).collect();
        parts.join("\n")
    }
}

/// Magnitudes below this are roundoff and print as zero; their digits
/// differ between platforms and would make reports unreproducible.
pub const NOISE_FLOOR: f64 = 1e-13;

/// `x` with 9 significant digits; plain decimals for moderate magnitudes,
/// scientific notation otherwise. Trailing zeros are dropped but at least
/// one decimal is kept, so `8` prints as `8.0`.
pub fn format_number(x: f64) -> String {
    if x.abs() < NOISE_FLOOR {
        return "0.0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let sign = if x < 0.0 { "-" } else { "" };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if !(-4..16).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{sign}{m}e{exp}");
    }
    let (int, frac) = if exp >= 0 {
        let e = exp as usize;
        let padded = format!("{digits:0<width$}", width = e + 1);
        (padded[..=e].to_string(), padded[e + 1..].to_string())
    } else {
        ("0".to_string(), format!("{}{digits}", "0".repeat((-exp - 1) as usize)))
    };
    let frac = frac.trim_end_matches('0');
    format!("{sign}{int}.{}", if frac.is_empty() { "0" } else { frac })
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// Writes the report. With an output directory, CSV gives one file per
/// table (`<scenario>_<table>.csv`) and JSON a single `<scenario>.json`;
/// without one, the report text is returned for stdout.
pub fn emit_report(result: &RunResult, format: Format, out: Option<&Path>) -> Result<Option<String>, CliError> {
    let scenario = result.config.scenario.name();
    let Some(dir) = out else {
        return Ok(Some(match format {
            Format::Csv => result.to_csv_stream(),
            Format::Json => format!("{:#}\n", result.to_json()),
        }));
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    match format {
        Format::Csv => {
            for t in result.tables.iter().chain(std::iter::once(&result.tolerance_table())) {
                write_atomic(&dir.join(format!("{scenario}_{}.csv", t.name)), &t.to_csv())?;
            }
        }
        Format::Json => write_atomic(&dir.join(format!("{scenario}.json")), &format!("{:#}\n", result.to_json()))?,
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(2.0 / 3.0), "0.666666667");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(8.0), "8.0");
        assert_eq!(format_number(7.999999999999), "8.0");
        assert_eq!(format_number(-0.0), "0.0");
        assert_eq!(format_number(0.001), "0.001");
        assert_eq!(format_number(123456789.4), "123456789.0");
        assert_eq!(format_number(1234567891.0), "1234567890.0");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(1e-10), "1e-10");
        assert_eq!(format_number(-2.220446049250313e-16), "0.0");
        assert_eq!(format_number(-2.220446049250313e-12), "-2.22044605e-12");
        assert_eq!(format_number(1e20), "1e20");
        assert_eq!(format_number(0.00012345678912), "0.000123456789");
        assert_eq!(format_number(0.0000265817264), "2.65817264e-5");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("born", &["outcome_index", "p_counting"]);
        t.push(vec![0usize.into(), (2.0 / 3.0).into()]);
        t.push(vec![1usize.into(), (1.0 / 3.0).into()]);
        assert_eq!(t.to_csv(), "outcome_index,p_counting\n0,0.666666667\n1,0.333333333\n");
        assert_eq!(t.column("p_counting"), vec![2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn json_numbers_are_rounded() {
        assert_eq!(Cell::Num(2.0 / 3.0).json().to_string(), "0.666666667");
        assert_eq!(Cell::Num(8.0).json().to_string(), "8.0");
        assert_eq!(Cell::Num(f64::NAN).json(), json!("NaN"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("envlab-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b\n");
        assert!(!dir.join("t.tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
