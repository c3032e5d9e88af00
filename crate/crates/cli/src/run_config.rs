//! Fully resolved settings of one invocation, written next to its output.

use std::path::PathBuf;

use nlnoise::{AnalysisOptions, GridConfig};
use serde::Serialize;
use serde_json::Value;

use crate::OutputArgs;

#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub argv: Vec<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub target: Option<String>,
    pub variables: Option<String>,
    pub analysis: Option<AnalysisOptions>,
    /// Grid limits after auto-ranging.
    pub resolved_grid: Option<GridConfig>,
    pub lags_up_to: Option<usize>,
    pub threshold: Option<f64>,
    pub subsets: Option<Vec<String>>,
    pub plateau: Option<bool>,
    pub seed: Option<u64>,
    pub generator: Option<Value>,
    pub json: bool,
    pub full_precision: bool,
}

impl RunConfig {
    pub fn new(subcommand: &'static str, out: &OutputArgs) -> Self {
        Self {
            tool: "nlnoise",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            argv: std::env::args().collect(),
            input: None,
            output: out.out.clone(),
            target: None,
            variables: None,
            analysis: None,
            resolved_grid: None,
            lags_up_to: None,
            threshold: None,
            subsets: None,
            plateau: None,
            seed: None,
            generator: None,
            json: false,
            full_precision: out.full_precision,
        }
    }
}
