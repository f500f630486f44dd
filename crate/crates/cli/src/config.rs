//! Config file, settings files and the error → exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};

use boolebell::algebra::AlgebraError;
use boolebell::feasibility::FeasibilityError;
use boolebell::model::Setting;
use boolebell::simulator::CoincidenceWindow;
use boolebell::{ConfigError, IoError, StatsError};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input files describing the run.
    #[error("{0}")]
    Config(String),
    /// The data itself is unusable or fails validation.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Config(c) => c.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::IncompatibleMeasurements(_) | AlgebraError::MissingData(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FeasibilityError> for CliError {
    fn from(e: FeasibilityError) -> Self {
        match e {
            FeasibilityError::Stats(s) => s.into(),
            FeasibilityError::Solver(_) => CliError::Data(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Values a config file may supply; every key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub model: Option<String>,
    pub encoding: Option<String>,
    pub settings: Option<SettingsSource>,
    pub angles: Option<Vec<f64>>,
    pub schedule: Option<String>,
    pub explicit_schedule: Option<bool>,
    pub pairs: Option<u64>,
    pub window: Option<WindowValue>,
    pub pairing: Option<String>,
    pub delay_max: Option<f64>,
    pub delay_exponent: Option<f64>,
    pub base_interval: Option<f64>,
    pub delta: Option<f64>,
    pub windows: Option<String>,
    pub bell: Option<bool>,
    pub no_reuse: Option<bool>,
}

/// A path to a settings file, or the settings inline.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SettingsSource {
    Path(PathBuf),
    Inline(Vec<SettingSpec>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WindowValue {
    Number(f64),
    Text(String),
}

impl WindowValue {
    pub fn as_text(&self) -> String {
        match self {
            WindowValue::Number(x) => x.to_string(),
            WindowValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SettingSpec {
    Direction {
        label: String,
        x: f64,
        y: f64,
        z: f64,
    },
    Angle {
        label: String,
        angle: f64,
    },
}

impl SettingSpec {
    fn build(&self) -> Result<Setting, ConfigError> {
        match self {
            SettingSpec::Direction { label, x, y, z } => Setting::new(label.clone(), [*x, *y, *z]),
            SettingSpec::Angle { label, angle } => Ok(Setting::planar(label.clone(), *angle)),
        }
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = read_text(path, "config file")?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

pub fn load_settings_file(path: &Path) -> Result<Vec<Setting>, CliError> {
    let text = read_text(path, "settings file")?;
    let specs: Vec<SettingSpec> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("settings file {}: {e}", path.display())))?;
    build_settings(&specs)
}

pub fn build_settings(specs: &[SettingSpec]) -> Result<Vec<Setting>, CliError> {
    let settings = specs
        .iter()
        .map(SettingSpec::build)
        .collect::<Result<Vec<_>, _>>()?;
    boolebell::model::check_settings(&settings)?;
    Ok(settings)
}

/// Labels a, b, c, ... (then s26, s27, ... past z).
pub fn settings_from_angles(angles: &[f64]) -> Result<Vec<Setting>, CliError> {
    if angles.is_empty() {
        return Err(CliError::Config("--angles needs at least one value".into()));
    }
    Ok(angles
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let label = if i < 26 {
                char::from(b'a' + i as u8).to_string()
            } else {
                format!("s{i}")
            };
            Setting::planar(label, a)
        })
        .collect())
}

pub fn parse_window(text: Option<&str>) -> Result<CoincidenceWindow, CliError> {
    match text.map(str::trim) {
        None => Ok(CoincidenceWindow::Infinite),
        Some(t) if t.eq_ignore_ascii_case("inf") => Ok(CoincidenceWindow::Infinite),
        Some(t) => {
            let w: f64 = t
                .parse()
                .map_err(|_| CliError::Config(format!("window `{t}` is not a number")))?;
            Ok(CoincidenceWindow::new(w)?)
        }
    }
}

/// Fail early when an input path is missing.
pub fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_specs() {
        let specs: Vec<SettingSpec> =
            serde_json::from_str(r#"[{"label":"a","x":1,"y":0,"z":0},{"label":"b","angle":1.0}]"#)
                .unwrap();
        let s = build_settings(&specs).unwrap();
        assert_eq!(s[1].label(), "b");
        assert!((s[1].angle() - 1.0).abs() < 1e-12);
        let bad: Vec<SettingSpec> =
            serde_json::from_str(r#"[{"label":"a","x":2,"y":0,"z":0}]"#).unwrap();
        assert!(build_settings(&bad).is_err());
        let dup: Vec<SettingSpec> =
            serde_json::from_str(r#"[{"label":"a","angle":0},{"label":"a","angle":1}]"#).unwrap();
        assert!(build_settings(&dup).is_err());
    }

    #[test]
    fn windows_and_config() {
        assert_eq!(parse_window(None).unwrap(), CoincidenceWindow::Infinite);
        assert_eq!(
            parse_window(Some("1e-3")).unwrap(),
            CoincidenceWindow::Finite(1e-3)
        );
        assert!(parse_window(Some("-1")).is_err());
        let c: FileConfig =
            serde_json::from_str(r#"{"seed": 3, "window": 0.5, "settings": "s.json"}"#).unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.window.unwrap().as_text(), "0.5");
        assert!(matches!(c.settings, Some(SettingsSource::Path(_))));
        assert!(serde_json::from_str::<FileConfig>(r#"{"sede": 3}"#).is_err());
    }
}
