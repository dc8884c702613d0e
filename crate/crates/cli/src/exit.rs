use std::process::ExitCode;

use nfplace::ingest::IngestError;
use nfplace::{GraphError, GreedyError, InstanceError, OracleError, WeightedError};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Other = 1,
    Infeasible = 2,
    Parse = 3,
    TooLarge = 4,
}

impl Failure {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Failure::Other => "error",
            Failure::Infeasible => "infeasible",
            Failure::Parse => "parse",
            Failure::TooLarge => "too-large",
        }
    }
}

fn classify_instance(e: &InstanceError) -> Failure {
    match e {
        InstanceError::InfeasiblePair { .. } | InstanceError::Infeasible { .. } => {
            Failure::Infeasible
        }
        _ => Failure::Parse,
    }
}

fn classify_weighted(e: &WeightedError) -> Failure {
    match e {
        WeightedError::Infeasible { .. } => Failure::Infeasible,
        WeightedError::Instance(i) => classify_instance(i),
        WeightedError::RoundingFailed(_) => Failure::Other,
        _ => Failure::Parse,
    }
}

fn classify_one(cause: &(dyn std::error::Error + 'static)) -> Option<Failure> {
    if let Some(e) = cause.downcast_ref::<OracleError>() {
        return Some(match e {
            OracleError::TooLarge { .. } => Failure::TooLarge,
            OracleError::Infeasible => Failure::Infeasible,
            OracleError::InvalidCount { .. } => Failure::Other,
        });
    }
    if cause.downcast_ref::<GreedyError>().is_some() {
        return Some(Failure::Infeasible);
    }
    if let Some(e) = cause.downcast_ref::<WeightedError>() {
        return Some(classify_weighted(e));
    }
    if let Some(e) = cause.downcast_ref::<InstanceError>() {
        return Some(classify_instance(e));
    }
    if let Some(e) = cause.downcast_ref::<IngestError>() {
        return Some(match e {
            IngestError::Instance(i) => classify_instance(i),
            IngestError::Weighted(w) => classify_weighted(w),
            _ => Failure::Parse,
        });
    }
    if cause.downcast_ref::<GraphError>().is_some()
        || cause.downcast_ref::<serde_json::Error>().is_some()
        || cause.downcast_ref::<toml::de::Error>().is_some()
    {
        return Some(Failure::Parse);
    }
    if let Some(e) = cause.downcast_ref::<Explicit>() {
        return Some(e.0);
    }
    None
}

pub fn classify(err: &anyhow::Error) -> Failure {
    err.chain().find_map(classify_one).unwrap_or(Failure::Other)
}

/// Forces a specific exit status for an error built in the CLI itself.
#[derive(Debug)]
pub struct Explicit(pub Failure, pub String);

impl std::fmt::Display for Explicit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Explicit {}

pub fn fail(kind: Failure, message: impl Into<String>) -> anyhow::Error {
    Explicit(kind, message.into()).into()
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    exit_code: u8,
    message: String,
    causes: Vec<String>,
}

pub fn report_failure(err: &anyhow::Error) -> ExitCode {
    let kind = classify(err);
    let body = ErrorReport {
        error: kind.name(),
        exit_code: kind.code(),
        message: err.to_string(),
        causes: err.chain().skip(1).map(|c| c.to_string()).collect(),
    };
    eprintln!(
        "{}",
        serde_json::to_string(&body).expect("error report serializes")
    );
    ExitCode::from(kind.code())
}
