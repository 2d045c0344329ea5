use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Bumped on any breaking change to the report layout.
pub const SCHEMA: u32 = 1;

#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch; not part of the reproducible content.
    pub timestamp: u64,
    pub config: Value,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, seed: Option<u64>, config: Value, result: Value) -> Self {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            config,
            result,
        }
    }
}

/// A numeric table with a header row.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn emit(report: &Report, table: Option<&Table>, out: Option<&Path>) -> Result<(), CliError> {
    let is_csv = out
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    match (out, is_csv) {
        (Some(path), true) => {
            let table = table.ok_or_else(|| {
                CliError::InvalidParameter(format!(
                    "`{}` produces no table; use a .json output",
                    report.command
                ))
            })?;
            table.write_csv(std::fs::File::create(path)?)
        }
        (Some(path), false) => {
            let mut f = std::fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut f, report)?;
            writeln!(f)?;
            Ok(())
        }
        (None, _) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, report)?;
            writeln!(lock)?;
            Ok(())
        }
    }
}
