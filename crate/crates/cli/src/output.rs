use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Table { columns: Vec<String>, rows: Vec<Vec<Cell>> },
    /// `key=value` lines in text form, an object in structured form.
    Report(Vec<(String, Cell)>),
}

/// One output document; `name` is a file suffix used when several documents
/// share one `--out` path.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub name: Option<String>,
    pub body: Body,
}

impl Document {
    pub fn table(columns: &[&str], rows: Vec<Vec<Cell>>) -> Self {
        Self {
            name: None,
            body: Body::Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows },
        }
    }

    pub fn report(entries: Vec<(String, Cell)>) -> Self {
        Self { name: None, body: Body::Report(entries) }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn render_text(&self, config: &Value) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# otoc {VERSION}");
        let _ = writeln!(out, "# config {config}");
        match &self.body {
            Body::Table { columns, rows } => {
                let _ = writeln!(out, "{}", columns.join(","));
                for row in rows {
                    let line: Vec<String> = row.iter().map(Cell::render).collect();
                    let _ = writeln!(out, "{}", line.join(","));
                }
            }
            Body::Report(entries) => {
                for (k, v) in entries {
                    let _ = writeln!(out, "{k}={}", v.render());
                }
            }
        }
        out
    }

    pub fn render_structured(&self, config: &Value) -> String {
        let data = match &self.body {
            Body::Table { columns, rows } => json!({
                "columns": columns,
                "rows": rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            Body::Report(entries) => {
                Value::Object(entries.iter().map(|(k, v)| (k.clone(), v.json())).collect())
            }
        };
        let doc = json!({ "version": VERSION, "config": config, "data": data });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// `dir/stem_name.ext`, or the path itself for unnamed documents.
pub fn target_path(base: &Path, name: Option<&str>) -> PathBuf {
    match name {
        None => base.to_path_buf(),
        Some(name) => {
            let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            let file = match base.extension().and_then(|e| e.to_str()) {
                Some(ext) => format!("{stem}_{name}.{ext}"),
                None => format!("{stem}_{name}"),
            };
            base.with_file_name(file)
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn write_stdout(text: &str) -> CliResult<()> {
    io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}
