//! Self-describing CSV and JSON artifacts.
//!
//! Every artifact opens with the tool version and the full resolved
//! configuration, including the command line that regenerates it. Nothing
//! time- or host-dependent is written, so identical configurations produce
//! identical bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata<C> {
    pub tool: String,
    pub version: String,
    /// Command line reproducing the artifact.
    pub command: String,
    pub config: C,
}

impl<C> Metadata<C> {
    pub fn new(command: String, config: C) -> Self {
        Metadata { tool: TOOL.to_string(), version: VERSION.to_string(), command, config }
    }
}

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn fmt_opt_int(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// A CSV body plus `# key: value` summary lines emitted after the metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), ..Table::default() }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

pub fn render_csv<C: Serialize>(meta: &Metadata<C>, table: &Table) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# {} {}", meta.tool, meta.version)?;
    writeln!(out, "# command: {}", meta.command)?;
    writeln!(out, "# config: {}", serde_json::to_string(&meta.config)?)?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&table.header)?;
    for row in &table.rows {
        writer.write_record(row)?;
    }
    writer.into_inner().map_err(|e| e.into_error())
}

#[derive(Serialize)]
struct Document<'a, C, R> {
    metadata: &'a Metadata<C>,
    result: &'a R,
}

pub fn render_json<C: Serialize, R: Serialize>(meta: &Metadata<C>, result: &R) -> std::io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Document { metadata: meta, result })?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let meta = Metadata::new("arccover simulate".into(), serde_json::json!({"seed": 1}));
        let mut t = Table::new(&["a", "b"]);
        t.note("trials", 2);
        t.row(vec!["1".into(), fmt_float(0.5)]);
        let text = String::from_utf8(render_csv(&meta, &t).unwrap()).unwrap();
        let expected = format!(
            "# arccover {VERSION}\n# command: arccover simulate\n# config: {{\"seed\":1}}\n# trials: 2\na,b\n1,5.0000000000000000e-1\n"
        );
        assert_eq!(text, expected);
    }

    #[test]
    fn json_layout() {
        let meta = Metadata::new("x".into(), 3);
        let v: serde_json::Value = serde_json::from_slice(&render_json(&meta, &[1.5]).unwrap()).unwrap();
        assert_eq!(v["metadata"]["config"], 3);
        assert_eq!(v["result"][0], 1.5);
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
