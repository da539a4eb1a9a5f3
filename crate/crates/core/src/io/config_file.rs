use std::path::Path;

use crate::channel::Scene;
use crate::config::SystemConfig;

use super::{read_text, IoError};

/// Name accepted by [`load_config`] in place of a path.
pub const PAPER_DEFAULTS: &str = "paper-defaults";

/// Parse and validate a configuration document. Missing keys take their
/// default values.
pub fn parse_config(text: &str) -> Result<SystemConfig, IoError> {
    let cfg: SystemConfig = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    Ok(cfg.validate()?)
}

pub fn config_to_string(cfg: &SystemConfig) -> String {
    toml::to_string(cfg).expect("configuration serialises to TOML")
}

/// `paper-defaults` or a path to a TOML document.
pub fn load_config(spec: &str) -> Result<SystemConfig, IoError> {
    if spec == PAPER_DEFAULTS {
        return Ok(SystemConfig::paper_defaults().validate()?);
    }
    parse_config(&read_text(Path::new(spec))?)
}

/// Scenes are checked against a configuration when simulated, not here.
pub fn parse_scene(text: &str) -> Result<Scene, IoError> {
    toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn scene_to_string(scene: &Scene) -> String {
    toml::to_string(scene).expect("scene serialises to TOML")
}

pub fn load_scene(path: &Path) -> Result<Scene, IoError> {
    parse_scene(&read_text(path)?)
}
