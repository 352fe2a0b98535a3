use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use pcaac_core::cloud::write_atomic;

/// Written as `<output>.manifest.json` next to every command's output.
/// `timing` is the only field that varies between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub configuration: Value,
    pub version: String,
    pub timing: Timing,
}

#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub wall_ms: f64,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        configuration: Value,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs,
            outputs,
            configuration,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timing: Timing::default(),
        }
    }

    pub fn finish(mut self, start: Instant) -> Self {
        self.timing = Timing {
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            threads: rayon::current_num_threads(),
        };
        self
    }

    pub fn write_for(&self, output: &Path) -> anyhow::Result<()> {
        let path = crate::sidecar(output, "manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(())
    }
}
