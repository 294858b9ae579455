//! Run configuration: one flat JSON object holding every training option plus
//! the input manifest and output directory. Layers apply in the order
//! defaults, config file, command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use mvsc_core::TrainConfig;
use serde_json::{Map, Value};

use crate::CliError;

/// Keys of the config file that are not training options.
const PATH_KEYS: [&str; 2] = ["manifest", "out"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(base: TrainConfig) -> Self {
        Self {
            train: base,
            manifest: None,
            out: None,
        }
    }

    /// Overlays the keys present in a config file. Unknown keys are errors.
    pub fn apply_file(mut self, path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut overlay: Map<String, Value> = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {} is not a JSON object: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for key in PATH_KEYS {
            if let Some(v) = overlay.remove(key) {
                let s = v
                    .as_str()
                    .ok_or_else(|| CliError::usage(format!("config key {key:?} must be a string")))?;
                // Relative paths in a config file resolve against the file.
                let p = base.join(s);
                match key {
                    "manifest" => self.manifest = Some(p),
                    _ => self.out = Some(p),
                }
            }
        }
        let Value::Object(mut merged) = serde_json::to_value(&self.train).expect("config serializes") else {
            unreachable!("TrainConfig serializes to an object")
        };
        merged.extend(overlay);
        self.train = serde_json::from_value(Value::Object(merged))
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        Ok(self)
    }
}
