//! Run configuration: a strict JSON document, merged with command-line flags.

use crate::designer::{DesignResult, DesignSpec, SweepSpec};
use crate::impedance::{FrequencyGrid, Method};
use crate::metrics::OscMetricsInput;
use crate::tank::TankParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Modes,
    Sweep,
    Design,
    Fom,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Modes => "modes",
            Command::Sweep => "sweep",
            Command::Design => "design",
            Command::Fom => "fom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tank: Option<TankParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<FrequencyGrid>,
    /// Impedance evaluation path for `analyze`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fom: Option<OscMetricsInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    /// Reserved. Every algorithm in the tool is deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("{path}: key `{key}`: {reason}")]
    Parse { path: String, key: String, reason: String },
    #[error("config for `{command}` is missing the `{section}` section")]
    MissingSection { command: &'static str, section: &'static str },
    #[error("no command given")]
    NoCommand,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Parse { path: origin.to_string(), key, reason: e.into_inner().to_string() }
    })
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })
}

pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    parse_json(text, origin)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config(&read(path)?, &path.display().to_string())
}

/// Reads either a bare tank or a design result (whose `params` is the tank).
pub fn load_tank(path: &Path) -> Result<TankParams, ConfigError> {
    let text = read(path)?;
    let origin = path.display().to_string();
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: origin.clone(),
        key: ".".into(),
        reason: e.to_string(),
    })?;
    if value.get("params").is_some() {
        let result: DesignResult = parse_json(&text, &origin)?;
        Ok(result.params)
    } else {
        parse_json(&text, &origin)
    }
}

impl RunConfig {
    /// Checks that the sections `command` needs are present.
    pub fn require(&self, command: Command) -> Result<(), ConfigError> {
        let missing = |section| Err(ConfigError::MissingSection { command: command.name(), section });
        match command {
            Command::Analyze => {
                if self.tank.is_none() {
                    return missing("tank");
                }
                if self.grid.is_none() {
                    return missing("grid");
                }
            }
            Command::Modes if self.tank.is_none() => return missing("tank"),
            Command::Sweep if self.sweep.is_none() => return missing("sweep"),
            Command::Design if self.design.is_none() => return missing("design"),
            Command::Fom if self.fom.is_none() => return missing("fom"),
            _ => {}
        }
        Ok(())
    }
}
