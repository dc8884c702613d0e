//! Reading topologies and demand sets, generating random scenarios, and the
//! instance interchange format.

mod graphml;
mod json;
mod scenario;
mod sndlib;

use thiserror::Error;

use crate::graph::GraphError;
use crate::instance::InstanceError;
use crate::weighted::WeightedError;

pub use graphml::{parse_graphml, write_graphml};
pub use json::{
    EdgeRecord, InstanceDocument, NodeRecord, RequestRecord, ScenarioMeta, INSTANCE_FORMAT,
    INSTANCE_VERSION,
};
pub use scenario::{
    capacity_for, generate_unweighted_scenario, generate_weighted_scenario, sample_pairs,
    scenario_rng, stretch_grid, uniform_f64, weighted_capacity, ScenarioConfig, WeightedScenario,
    STRETCH_GRID_LEN,
};
pub use sndlib::{parse_sndlib, Demand, SndlibInstance};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: edge endpoint `{endpoint}` is not a declared node")]
    MissingEndpoint { line: usize, endpoint: String },
    #[error("demand `{id}` has negative value {value}")]
    NegativeDemand { id: String, value: f64 },
    #[error("invalid instance document: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Weighted(#[from] WeightedError),
}

impl IngestError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}
