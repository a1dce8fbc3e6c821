//! Scenario ingestion, synthetic scenarios and result persistence.

mod results;
mod scenario;
mod synthetic;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::{ScenarioData, ValidationError};

pub use results::{read_results, write_results, write_rows, Format, SummaryRow, SUMMARY_COLUMNS};
pub use scenario::{load_scenario, parse_scenario, read_series, write_series, SeriesRow, SERIES_COLUMNS};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("series file is missing column `{0}`")]
    MissingColumn(String),
    #[error("series hour {found} at row {row}, expected {expected}")]
    NonConsecutiveHours { row: usize, expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("no result rows to write")]
    EmptyResults,
}

impl IoError {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::File { path: path.into(), source }
    }
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse(e.to_string())
    }
}

/// Source of the bundled three-hour toy scenario.
pub const TOY_SCENARIO_JSON: &str = include_str!("../../assets/toy.json");

/// The bundled three-hour toy scenario, validated.
pub fn toy_scenario() -> ScenarioData {
    parse_scenario(TOY_SCENARIO_JSON, None, None).expect("bundled toy scenario is valid")
}
