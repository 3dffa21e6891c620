use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

use super::Mode;

/// One typed value in a report table.
///
/// The text form is unambiguous: rationals always carry a `/`, floats use the
/// shortest round-trip representation (always with `.`, `e`, `inf` or `NaN`),
/// so parsing a CSV restores the same variants.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Exact(Rational),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Exact(r) => Some(r.to_f64()),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Cell {
        if let Ok(v) = s.parse::<i128>() {
            return Cell::Int(v);
        }
        if s.contains('/') {
            if let Ok(r) = s.parse::<Rational>() {
                return Cell::Exact(r);
            }
        }
        match s {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            _ => {}
        }
        if let Ok(v) = s.parse::<f64>() {
            return Cell::Float(v);
        }
        Cell::Text(s.to_string())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Exact(r) => write!(f, "{r}"),
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i128> for Cell {
    fn from(v: i128) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<Rational> for Cell {
    fn from(v: Rational) -> Self {
        Cell::Exact(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A named assertion together with the values it compared.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: String,
    pub mode: Mode,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    pub checks: Vec<Check>,
}

const VERSION: &str = env!("CARGO_PKG_VERSION");
const MARKDOWN_ROW_LIMIT: usize = 48;

impl ExperimentReport {
    pub fn new(id: &str, mode: Mode, columns: &[&str]) -> Self {
        ExperimentReport {
            id: id.to_string(),
            mode,
            params: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the columns of {}", self.id);
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `#`-prefixed metadata lines, then a header row and the data rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# experiment={}\n# version={VERSION}\n# mode={}\n", self.id, self.mode));
        for (k, v) in &self.params {
            out.push_str(&format!("# param {k}={v}\n"));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# summary {k}={v}\n"));
        }
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("# check {}={verdict}; {}\n", c.name, c.detail.replace('\n', " ")));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("writing to memory");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8 cells"));
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut report = ExperimentReport::new("", Mode::Exact, &[]);
        let mut body = String::new();
        for line in text.lines() {
            let Some(meta) = line.strip_prefix("# ") else {
                body.push_str(line);
                body.push('\n');
                continue;
            };
            let bad = || Error::Parse(format!("bad metadata line {line:?}"));
            if let Some(rest) = meta.strip_prefix("param ") {
                let (k, v) = rest.split_once('=').ok_or_else(bad)?;
                report.params.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = meta.strip_prefix("summary ") {
                let (k, v) = rest.split_once('=').ok_or_else(bad)?;
                report.summary.push((k.to_string(), Cell::parse(v)));
            } else if let Some(rest) = meta.strip_prefix("check ") {
                let (name, rest) = rest.split_once('=').ok_or_else(bad)?;
                let (verdict, detail) = rest.split_once("; ").ok_or_else(bad)?;
                report.checks.push(Check {
                    name: name.to_string(),
                    passed: verdict == "PASS",
                    detail: detail.to_string(),
                });
            } else if let Some(v) = meta.strip_prefix("experiment=") {
                report.id = v.to_string();
            } else if let Some(v) = meta.strip_prefix("mode=") {
                report.mode = v.parse()?;
            } else if meta.strip_prefix("version=").is_none() {
                return Err(bad());
            }
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        report.columns =
            reader.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            report.rows.push(record.iter().map(Cell::parse).collect());
        }
        Ok(report)
    }

    /// Markdown rendering. Long tables are thinned to a spread of rows; the
    /// CSV always carries all of them.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("## {}\n\nmode: {}", self.id, self.mode);
        for (k, v) in &self.params {
            out.push_str(&format!(", {k} = {v}"));
        }
        out.push_str("\n\n");
        if !self.columns.is_empty() {
            out.push_str(&format!("| {} |\n", self.columns.join(" | ")));
            out.push_str(&format!("|{}\n", " --- |".repeat(self.columns.len())));
            let shown = thinned_indices(self.rows.len(), MARKDOWN_ROW_LIMIT);
            for &i in &shown {
                let cells: Vec<String> = self.rows[i].iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            if shown.len() < self.rows.len() {
                out.push_str(&format!("\n{} of {} rows shown.\n", shown.len(), self.rows.len()));
            }
            out.push('\n');
        }
        if !self.summary.is_empty() {
            for (k, v) in &self.summary {
                out.push_str(&format!("- {k}: {v}\n"));
            }
            out.push('\n');
        }
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("- [{verdict}] {}: {}\n", c.name, c.detail));
        }
        out
    }
}

/// Up to `limit` indices spread evenly over `0..len`, always keeping the last.
fn thinned_indices(len: usize, limit: usize) -> Vec<usize> {
    if len <= limit {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..limit).map(|i| i * (len - 1) / (limit - 1)).collect();
    idx.dedup();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", Mode::Exact, &["n", "value", "approx", "ok", "note"]);
        r.param("n_max", 8);
        r.push_row(vec![
            Cell::Int(1),
            Cell::Exact(Rational::new(3, 2)),
            Cell::Float(0.1),
            Cell::Bool(true),
            "a, b".into(),
        ]);
        r.push_row(vec![
            Cell::Int(2),
            Cell::Exact(Rational::integer(4)),
            Cell::Float(1e-300),
            Cell::Bool(false),
            "x".into(),
        ]);
        r.summarize("sup", Rational::new(7, 3));
        r.summarize("fit", 2.0f64);
        r.check("bounded", true, "7/3 <= 3");
        r.check("growth", false, "ratio 1.2 < 1.5");
        r
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = r.to_csv();
        assert!(text.starts_with("# experiment=demo\n"));
        assert!(text.contains("\"a, b\""));
        assert!(!text.contains('\r'));
        assert_eq!(ExperimentReport::parse_csv(&text).unwrap(), r);
        assert!(!r.passed());
    }

    #[test]
    fn cell_parsing() {
        assert_eq!(Cell::parse("12"), Cell::Int(12));
        assert_eq!(Cell::parse("-3/4"), Cell::Exact(Rational::new(-3, 4)));
        assert_eq!(Cell::parse("2/1"), Cell::Exact(Rational::integer(2)));
        assert_eq!(Cell::parse("2.0"), Cell::Float(2.0));
        assert_eq!(Cell::parse("true"), Cell::Bool(true));
        assert_eq!(Cell::parse("pass"), Cell::Text("pass".into()));
        assert_eq!(Cell::Float(1.0).to_string(), "1.0");
    }

    #[test]
    fn markdown_thins_long_tables() {
        let mut r = ExperimentReport::new("long", Mode::Float, &["n"]);
        for n in 0..1000u64 {
            r.push_row(vec![n.into()]);
        }
        let md = r.to_markdown();
        assert!(md.contains("| 999 |"));
        assert!(md.contains("48 of 1000 rows shown"));
        assert_eq!(thinned_indices(5, 48), vec![0, 1, 2, 3, 4]);
    }
}
