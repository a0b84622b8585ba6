//! CSV and JSON emission plus the two-column data reader used by `fit`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Float formatting shared by every CSV: 9 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
}

impl Cell {
    fn render(self, out: &mut String) {
        match self {
            Cell::F(v) => out.push_str(&fmt_f64(v)),
            Cell::U(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::B(v) => out.push(if v { '1' } else { '0' }),
        }
    }
}

/// A CSV table with a `# eitmem <schema> v<N>` header line.
pub struct Table {
    schema: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Table {
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "# eitmem {} v{SCHEMA_VERSION}\n{}\n",
            self.schema,
            self.columns.join(",")
        );
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                c.render(&mut s);
            }
            s.push('\n');
        }
        s
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root.display().to_string(), e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(p.display().to_string(), e))?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    pub fn write_table(&self, name: &str, t: &Table) -> Result<PathBuf> {
        self.write_text(name, &t.render())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_text(name, &s)
    }
}

/// Read a numeric CSV. Lines starting with `#` and a single header line of
/// column names are skipped; every other line needs `columns` numbers.
pub fn read_numeric_csv(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_numeric_csv(&text, columns, &path.display().to_string())
}

pub fn parse_numeric_csv(text: &str, columns: usize, origin: &str) -> Result<Vec<Vec<f64>>> {
    let err = |line: usize, reason: String| CliError::Parse {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if v.len() < columns {
                    return Err(err(i + 1, format!("expected {columns} columns, found {}", v.len())));
                }
                if let Some(bad) = v.iter().take(columns).find(|x| !x.is_finite()) {
                    return Err(err(i + 1, format!("non-finite value {bad}")));
                }
                rows.push(v[..columns].to_vec());
            }
            Err(e) if !header_seen && rows.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err()) => {
                log::debug!("header at line {}: {e}", i + 1);
                header_seen = true;
            }
            Err(e) => return Err(err(i + 1, format!("{e} in `{line}`"))),
        }
    }
    if rows.is_empty() {
        return Err(err(text.lines().count(), "no data rows".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_f64(0.123456789123), "1.23456789e-1");
        assert_eq!(fmt_f64(-2.0), "-2.00000000e0");
    }

    #[test]
    fn table_header_and_rows() {
        let mut t = Table::new("demo", &["a", "b", "c"]);
        t.push(vec![Cell::F(1.5), Cell::U(3), Cell::B(true)]);
        assert_eq!(t.render(), "# eitmem demo v1\na,b,c\n1.50000000e0,3,1\n");
    }

    #[test]
    fn reader_skips_comments_and_header() {
        let rows = parse_numeric_csv("# x\nt,se\n0,0.7\n1e3, 0.65\n", 2, "mem").unwrap();
        assert_eq!(rows, vec![vec![0.0, 0.7], vec![1000.0, 0.65]]);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let e = parse_numeric_csv("t,se\n0,0.7\n1,abc\n", 2, "mem").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 3, .. }), "{e}");
        assert_eq!(e.exit_code(), 4);
        let e = parse_numeric_csv("0,0.7\n1\n", 2, "mem").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 2, .. }));
        assert!(parse_numeric_csv("# only\n", 2, "mem").is_err());
    }
}
