//! TOML scenario files.

use std::path::Path;

use gtphd::scenario::ScenarioConfig;

use crate::{HarnessError, Result};

/// Parses and validates a scenario. Unknown or mistyped keys are reported with
/// their TOML location; semantic errors with the field path.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    cfg.validate().map_err(|e| match e {
        gtphd::Error::Config(msg) => HarnessError::Config(msg),
        other => HarnessError::Config(other.to_string()),
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string_pretty(cfg).expect("scenario serializes to TOML")
}
