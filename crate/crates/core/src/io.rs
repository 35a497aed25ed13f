//! CSV and JSON outputs. Every CSV starts with `#`-prefixed manifest lines so a
//! file records how it was produced.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RawConfig;

/// Everything needed to reproduce one output file.
///
/// Wall-clock timing is kept out of the manifest so that identical inputs
/// give byte-identical files; it goes to a separate run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: Option<RawConfig>,
    /// Grid parameters as given.
    pub grid: serde_json::Value,
    /// Solver or analysis options.
    pub options: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            tool: "sigma-vortex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config: None,
            grid: serde_json::Value::Null,
            options: serde_json::Value::Null,
            seed,
            outputs: Vec::new(),
        }
    }

    /// The manifest as `#` comment lines.
    pub fn header(&self) -> String {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.lines().map(|l| format!("# {l}\n")).collect()
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // shortest representation that round-trips
            Cell::Num(x) => write!(f, "{x:?}"),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

/// Writes the manifest header, a column line and the rows.
pub fn write_csv<W: Write>(
    mut out: W,
    manifest: &RunManifest,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> std::io::Result<()> {
    out.write_all(manifest.header().as_bytes())?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(ToString::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub fn write_csv_file(
    path: &Path,
    manifest: &RunManifest,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> std::io::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(file, manifest, columns, rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json_file<S: Serialize>(path: &Path, value: &S) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Reads numeric columns by name, skipping `#` lines.
pub fn read_columns<R: Read>(input: R, names: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| headers.iter().position(|h| h == *n).ok_or_else(|| format!("missing column {n:?}")))
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let x: f64 = field
                .parse()
                .map_err(|_| format!("row {}: column {:?} is not a number: {field:?}", line + 1, names[c]))?;
            cols[c].push(x);
        }
    }
    Ok(cols)
}

/// Whether a CSV has a column of this name.
pub fn has_column<R: Read>(input: R, name: &str) -> Result<bool, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    Ok(reader.headers().map_err(|e| e.to_string())?.iter().any(|h| h == name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_skips_the_manifest() {
        let mut m = RunManifest::new("convolve", 7);
        m.options = serde_json::json!({"h": 0.1});
        let mut buf = Vec::new();
        let rows = vec![vec![Cell::Num(0.1), Cell::Num(-2.5e-17)], vec![Cell::Num(3.0), Cell::Missing]];
        write_csv(&mut buf, &m, &["x", "value"], rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {"));
        assert!(text.contains("\"seed\": 7"));
        let err = read_columns(&buf[..], &["x", "value"]).unwrap_err();
        assert!(err.contains("row 2"), "{err}");
        let cols = read_columns(&buf[..], &["x"]).unwrap();
        assert_eq!(cols[0], vec![0.1, 3.0]);
        assert!(has_column(&buf[..], "value").unwrap());
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -1e-300, 6.02e23] {
            let s = Cell::Num(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
