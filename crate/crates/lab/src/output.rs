//! CSV tables with a `#` metadata header, and the run manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::{LabError, Outcome, RunRequest};

/// A table ready to be written; cells are preformatted.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        let row: Vec<String> = row.into_iter().collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest text that parses back to the same value, with exponents for
/// very large or small magnitudes; `-0` is written as `0`.
pub fn num(x: f64) -> String {
    let s = format!("{:?}", x + 0.0);
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

/// Metadata lines common to every file of a run.
pub fn run_meta(req: &RunRequest) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("command".into(), req.command.name().into());
    m.insert("spec_hash".into(), req.spec.hash(req.command));
    m.insert("seed".into(), req.spec.seed.to_string());
    m
}

pub fn write_table(path: &Path, table: &Table, meta: &BTreeMap<String, String>) -> Result<(), LabError> {
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    spec: &'a crate::ExperimentSpec,
    spec_hash: String,
    seed: u64,
    chains: usize,
    resumed_from: Option<String>,
    passed: bool,
    summary: &'a [String],
    files: &'a [String],
    wall_time_s: f64,
}

pub fn write_manifest(req: &RunRequest, outcome: &Outcome, wall: f64) -> Result<(), LabError> {
    let m = Manifest {
        command: req.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        spec: &req.spec,
        spec_hash: req.spec.hash(req.command),
        seed: req.spec.seed,
        chains: req.spec.chains,
        resumed_from: req.resume.as_ref().map(|p| p.display().to_string()),
        passed: outcome.passed,
        summary: &outcome.lines,
        files: &outcome.files,
        wall_time_s: wall,
    };
    let f = BufWriter::new(File::create(req.out.join("manifest.json"))?);
    serde_json::to_writer_pretty(f, &m)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push([num(0.1), num(1e-300)]);
        t.push([num(-0.0), num(42.0)]);
        let mut meta = BTreeMap::new();
        meta.insert("seed".to_string(), "3".to_string());
        let p = dir.path().join("t.csv");
        write_table(&p, &t, &meta).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "# seed=3\na,b\n0.1,1e-300\n0,42\n");
    }
}
