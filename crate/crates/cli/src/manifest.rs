use std::path::PathBuf;

use serde::Serialize;

/// Everything needed to replay a randomized run.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub wall_time_ms: u64,
    pub best_weight: u64,
    pub artifacts: Artifacts,
}

#[derive(Debug, Default, Serialize)]
pub struct Artifacts {
    pub certificate: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests serialize") + "\n"
    }
}
