//! Plain-text matrix files: `# key=value` comment lines, an optional header
//! row of column names, then one comma-separated row per frame. Values use
//! the shortest representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub meta: BTreeMap<String, String>,
    pub header: Option<Vec<String>>,
    pub data: Array2<f64>,
}

pub fn format_matrix(meta: &[(&str, String)], header: Option<&[&str]>, data: &Array2<f64>) -> String {
    let mut out = String::new();
    if !meta.is_empty() {
        let fields: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("# {}\n", fields.join(" ")));
    }
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(
    path: &Path,
    meta: &[(&str, String)],
    header: Option<&[&str]>,
    data: &Array2<f64>,
) -> Result<()> {
    fs::write(path, format_matrix(meta, header, data)).map_err(|e| Error::io(path, e))
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile> {
    let mut meta = BTreeMap::new();
    let mut header = None;
    let mut values = Vec::new();
    let mut cols = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for field in comment.split_whitespace() {
                if let Some((k, v)) = field.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.is_none() && header.is_none() && fields[0].parse::<f64>().is_err() {
            header = Some(fields.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            continue;
        }
        let n = *cols.get_or_insert(fields.len());
        if fields.len() != n {
            return Err(Error::Schema(format!(
                "line {}: {} fields, expected {n}",
                lineno + 1,
                fields.len()
            )));
        }
        for f in fields {
            values.push(f.parse::<f64>().map_err(|_| {
                Error::Schema(format!("line {}: `{f}` is not a number", lineno + 1))
            })?);
        }
    }
    let n_cols = cols.or(header.as_ref().map(Vec::len)).unwrap_or(0);
    if let (Some(h), Some(c)) = (&header, cols) {
        if h.len() != c {
            return Err(Error::Schema(format!("header has {} names for {c} columns", h.len())));
        }
    }
    let rows = if n_cols == 0 { 0 } else { values.len() / n_cols };
    let data = Array2::from_shape_vec((rows, n_cols), values).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(MatrixFile { meta, header, data })
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}
