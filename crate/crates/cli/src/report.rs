use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use nfplace::ingest::InstanceDocument;
use nfplace::NodeId;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const REPORT_FORMAT: &str = "nfplace-report";
pub const REPORT_VERSION: u32 = 1;

/// Hex SHA-256 of the canonical instance JSON.
pub fn digest(doc: &InstanceDocument) -> String {
    hex::encode(Sha256::digest(doc.to_json().as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentEntry {
    /// Index into the instance's pairs or requests.
    pub request: usize,
    pub nodes: Vec<NodeId>,
    pub demand: f64,
    /// `None` only for requests rejected because their demand exceeds κ.
    pub middlebox: Option<NodeId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadEntry {
    pub middlebox: NodeId,
    pub load: f64,
    /// `load / κ`.
    pub relative_load: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics {
    pub requests: usize,
    pub capacity: f64,
    pub max_relative_load: f64,
    pub capacity_exceeded: bool,
    pub oracle_middleboxes: Option<usize>,
    pub approximation_ratio: Option<f64>,
    /// Worst-case ratio guaranteed for this algorithm and instance.
    pub approximation_bound: Option<f64>,
    /// `(φ_opt(n) − φ_greedy(n)) / φ_opt(n)` for `n = 0..=middlebox_count`.
    pub relative_difference: Option<Vec<f64>>,
    pub fractional_objective: Option<f64>,
    pub rejected_requests: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub solve_ms: f64,
    pub oracle_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub format: &'static str,
    pub version: u32,
    pub instance: String,
    pub instance_digest: String,
    pub algorithm: &'static str,
    pub middlebox_count: usize,
    pub middleboxes: Vec<NodeId>,
    pub assignment: Vec<AssignmentEntry>,
    pub loads: Vec<LoadEntry>,
    pub metrics: Metrics,
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn load_entries(middleboxes: &[NodeId], loads: &[f64], capacity: f64) -> Vec<LoadEntry> {
    middleboxes
        .iter()
        .zip(loads)
        .map(|(&m, &load)| LoadEntry {
            middlebox: m,
            load,
            relative_load: load / capacity,
        })
        .collect()
}

pub fn millis(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Writes `text` to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

pub fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}
