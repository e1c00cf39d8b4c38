use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Settings shared by every subcommand, echoed into each output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub hbar: f64,
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub paper_time_scale: bool,
}

impl RunConfig {
    pub fn metadata(&self) -> Value {
        json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config": self,
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    /// Flow time as used by the library: doubled under `--paper-time-scale`.
    pub fn flow_time(&self, t: f64) -> f64 {
        if self.paper_time_scale {
            2.0 * t
        } else {
            t
        }
    }
}
