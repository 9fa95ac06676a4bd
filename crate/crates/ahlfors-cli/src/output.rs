//! CSV tables and atomic file writes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ahlfors::geometry::Position;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Position> for Cell {
    fn from(p: Position) -> Self {
        match p {
            Position::Finite(x) => Cell::Float(x),
            Position::Infinity => Cell::Float(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    command: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Table {
            command: command.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = format!("# tool=ahlfors version={VERSION} command={}\n", self.command);
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// Parsed CSV produced by this tool.
#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub command: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn floats(&self, idx: usize) -> Result<Vec<f64>, CliError> {
        self.rows
            .iter()
            .map(|r| {
                let s = r.get(idx).ok_or_else(|| CliError::Format("short row".into()))?;
                match s.as_str() {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    _ => s.parse::<f64>().map_err(|_| CliError::Format(format!("not a number: {s:?}"))),
                }
            })
            .collect()
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv, CliError> {
    let mut command = None;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = None;
    for l in lines.by_ref() {
        if let Some(meta) = l.strip_prefix('#') {
            if !meta.contains("tool=ahlfors") {
                return Err(CliError::Format("not an ahlfors CSV".into()));
            }
            command = meta.split_whitespace().find_map(|kv| kv.strip_prefix("command=")).map(String::from);
        } else {
            header = Some(l);
            break;
        }
    }
    if command.is_none() {
        return Err(CliError::Format("missing '# tool=ahlfors' header line".into()));
    }
    let header = header.ok_or_else(|| CliError::Format("missing column header".into()))?;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for l in lines {
        let r: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
        if r.len() != columns.len() {
            return Err(CliError::Format(format!("row has {} fields, header has {}", r.len(), columns.len())));
        }
        rows.push(r);
    }
    Ok(ParsedCsv { command, columns, rows })
}
