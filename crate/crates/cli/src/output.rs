//! Comma-separated tables: one header row, `.` decimals, numbers in
//! scientific notation with 17 significant digits so every `f64`
//! round-trips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    /// Missing value, written as an empty field.
    Blank,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(u64::from(x))
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Blank, Cell::Num)
    }
}

pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn write_cell(out: &mut String, cell: &Cell) {
    match cell {
        Cell::Num(x) => out.push_str(&format_num(*x)),
        Cell::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Cell::Text(s) if s.contains([',', '"', '\n']) => {
            let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
        }
        Cell::Text(s) => out.push_str(s),
        Cell::Blank => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Table {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let head: Vec<Cell> = self.header.iter().map(|h| Cell::Text(h.clone())).collect();
        for row in std::iter::once(&head).chain(&self.rows) {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_cell(&mut out, cell);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, WriteError> {
    let path = dir.join(name);
    let wrap = |source| WriteError {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(wrap)?;
    std::fs::write(&path, contents).map_err(wrap)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1.16609e-7, 2.0f64.sqrt() * 1e12, -0.0] {
            let s = format_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert_eq!(digits, 17);
        }
        assert_eq!(format_num(f64::INFINITY), "inf");
    }

    #[test]
    fn render_quotes_only_when_needed() {
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec![1.5.into(), "x,y".into(), Cell::Blank]);
        t.push(vec![Cell::Int(3), "plain".into(), true.into()]);
        assert_eq!(t.render(), "a,b,c\n1.5000000000000000e0,\"x,y\",\n3,plain,1\n");
    }
}
