//! Report assembly: CSV grids with provenance header comments, JSON
//! verdict reports with a schema version. Payloads are byte-reproducible
//! for a fixed configuration and seed (no timestamps).

use std::io::Write;
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV report: `# key = value` comment lines, a header row, data rows.
pub struct Csv {
    comments: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            comments: vec![("schema_version".into(), SCHEMA_VERSION.to_string())],
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) {
        self.comments.push((key.into(), value.to_string()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "ragged CSV row");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new() // not-applicable cells stay empty
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes to `--out` or stdout.
pub fn emit(out: &Option<PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())
        }
    }
}

/// JSON verdict report used by the verify subcommands.
#[derive(serde::Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: String,
    pub mode: String,
    pub terms: usize,
    pub checked_assignments: usize,
    pub max_abs_error: f64,
    pub exact: bool,
    pub verdict: String,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
