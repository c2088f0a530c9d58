//! Plain-text tables: `#`-prefixed metadata lines, a header row, then one
//! comma-separated row per sample.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn write_table(
    mut w: impl Write,
    meta: &[(&str, String)],
    headers: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::input("header and column counts differ"));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::input("table columns differ in length"));
    }
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "{}", headers.join(","))?;
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&c[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonTable<'a> {
    meta: BTreeMap<&'a str, &'a str>,
    headers: &'a [&'a str],
    columns: &'a [&'a [f64]],
}

/// The same table as JSON: `meta`, `headers`, and one array per column.
/// Non-finite values become `null`.
pub fn write_table_json(
    mut w: impl Write,
    meta: &[(&str, String)],
    headers: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::input("header and column counts differ"));
    }
    let t = JsonTable {
        meta: meta.iter().map(|(k, v)| (*k, v.as_str())).collect(),
        headers,
        columns,
    };
    serde_json::to_writer_pretty(&mut w, &t)?;
    writeln!(w)?;
    Ok(())
}

/// A table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn read_table(r: impl BufRead) -> Result<Table> {
    let mut meta = Vec::new();
    let mut headers: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        match &headers {
            None => {
                let h: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
                columns = vec![Vec::new(); h.len()];
                headers = Some(h);
            }
            Some(h) => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != h.len() {
                    return Err(Error::Format(format!(
                        "line {}: expected {} fields, found {}",
                        no + 1,
                        h.len(),
                        fields.len()
                    )));
                }
                for (c, f) in columns.iter_mut().zip(fields) {
                    let v = f
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: `{f}`: {e}", no + 1)))?;
                    c.push(v);
                }
            }
        }
    }
    let headers = headers.ok_or_else(|| Error::Format("table has no header row".into()))?;
    Ok(Table {
        meta,
        headers,
        columns,
    })
}

#[derive(Deserialize)]
struct OwnedJsonTable {
    meta: BTreeMap<String, String>,
    headers: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

/// Inverse of [`write_table_json`]; `null` reads back as NaN.
pub fn read_table_json(r: impl std::io::Read) -> Result<Table> {
    let t: OwnedJsonTable =
        serde_json::from_reader(r).map_err(|e| Error::Format(format!("table: {e}")))?;
    if t.headers.len() != t.columns.len() {
        return Err(Error::Format("header and column counts differ".into()));
    }
    Ok(Table {
        meta: t.meta.into_iter().collect(),
        headers: t.headers,
        columns: t
            .columns
            .into_iter()
            .map(|c| c.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
            .collect(),
    })
}

/// Reads a CSV or JSON table, chosen by the file extension.
pub fn read_table_file(path: &Path) -> Result<Table> {
    let f = BufReader::new(std::fs::File::open(path)?);
    if path.extension().is_some_and(|e| e == "json") {
        read_table_json(f)
    } else {
        read_table(f)
    }
}
