use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Format, OutputArgs};
use crate::error::{CliError, Result};
use crate::ingest::IngestSummary;

/// Version of the JSON and CSV layouts written by every command.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Everything a command produces; rendering is separate so commands stay testable.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub input: Option<IngestSummary>,
    pub seed: Option<u64>,
    pub result: Value,
    pub table: Table,
    /// Extra fields for the metadata sidecar.
    pub meta: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize, result: Value, table: Table) -> Self {
        Report {
            command,
            config: serde_json::to_value(config).expect("serializable config"),
            input: None,
            seed: None,
            result,
            table,
            meta: Value::Null,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "input": self.input,
            "seed": self.seed,
            "result": self.result,
        })
    }

    pub fn meta_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "irdd",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "input": self.input,
            "seed": self.seed,
            "summary": self.meta,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => pretty(&self.to_json()),
            Format::Csv => self.table.to_csv(),
        }
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

/// `<file>.meta.json` next to `file`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the report to `--output` plus its sidecar, or to stdout.
pub fn emit(report: &Report, out: &OutputArgs) -> Result<()> {
    let body = report.render(out.format);
    match &out.output {
        Some(path) => {
            write_file(path, &body)?;
            write_file(&sidecar_path(path), &pretty(&report.meta_json()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/table.csv")), PathBuf::from("out/table.csv.meta.json"));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-9, 1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_fields() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
    }
}
