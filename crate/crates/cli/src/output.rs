//! Result files: `results.jsonl`, `summary.csv` and the `timings.jsonl`
//! sidecar.
//!
//! Result and summary files depend only on the config and seed. Wall-clock
//! times live in the sidecar so the other two stay byte-identical across
//! runs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: &str = "relfk.result/1";

/// Identifies the run every record belongs to.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub horizon: Option<f64>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n_samples: Option<usize>,
    pub reference: Option<f64>,
    pub sigmas: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    command: &'a str,
    label: &'a str,
    horizon: Option<f64>,
    value: f64,
    stderr: Option<f64>,
    n_samples: Option<usize>,
    reference: Option<f64>,
    sigmas: Option<f64>,
    pass: Option<bool>,
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
}

/// Collects everything a subcommand emits; [`Sink::write`] is the only place
/// files are written.
#[derive(Debug)]
pub struct Sink {
    pub provenance: Provenance,
    records: Vec<Value>,
    rows: Vec<SummaryRow>,
    timings: Vec<Value>,
}

impl Sink {
    pub fn new(provenance: Provenance) -> Self {
        Self { provenance, records: Vec::new(), rows: Vec::new(), timings: Vec::new() }
    }

    pub fn record(&mut self, label: &str, n_samples: usize, data: Value) {
        let p = &self.provenance;
        self.records.push(json!({
            "schema": SCHEMA,
            "command": p.command,
            "label": label,
            "config_hash": p.config_hash,
            "seed": p.seed,
            "version": p.version,
            "n_samples": n_samples,
            "data": data,
        }));
    }

    pub fn summary(&mut self, row: SummaryRow) {
        self.rows.push(row);
    }

    pub fn timing(&mut self, label: &str, n_samples: usize, seconds: f64) {
        let p = &self.provenance;
        self.timings.push(json!({
            "command": p.command,
            "label": label,
            "config_hash": p.config_hash,
            "seed": p.seed,
            "version": p.version,
            "n_samples": n_samples,
            "wall_clock_s": seconds,
        }));
    }

    pub fn records(&self) -> &[Value] {
        &self.records
    }

    pub fn rows(&self) -> &[SummaryRow] {
        &self.rows
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        write_lines(&dir.join("results.jsonl"), &self.records)?;
        write_lines(&dir.join("timings.jsonl"), &self.timings)?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        let p = &self.provenance;
        for row in &self.rows {
            w.serialize(CsvRow {
                command: &p.command,
                label: &row.label,
                horizon: row.horizon,
                value: row.value,
                stderr: row.stderr,
                n_samples: row.n_samples,
                reference: row.reference,
                sigmas: row.sigmas,
                pass: row.pass,
                config_hash: &p.config_hash,
                seed: p.seed,
                version: &p.version,
            })?;
        }
        w.flush()
    }
}

fn write_lines(path: &Path, values: &[Value]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for v in values {
        writeln!(f, "{v}")?;
    }
    f.flush()
}
