use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::market::{validate_model, Arc, MarketModel, Node, Period, ServiceSpec, Trader};
use crate::scenario::YearUpdate;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a model, optionally with calibration data and yearly
/// updates. Flows in mcm/d, prices and costs in k€/mcm, durations in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub periods: Vec<Period>,
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub arcs: Vec<Arc>,
    pub services: Vec<ServiceSpec>,
    pub traders: Vec<Trader>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationData>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updates: Vec<YearUpdate>,
}

/// A standalone list of yearly updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatesFile {
    pub schema_version: u32,
    pub updates: Vec<YearUpdate>,
}

/// Standalone calibration data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub schema_version: u32,
    pub calibration: CalibrationData,
}

impl ModelFile {
    pub fn from_model(model: &MarketModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            periods: model.periods.clone(),
            nodes: model.nodes.clone(),
            arcs: model.arcs.clone(),
            services: model.services.clone(),
            traders: model.traders.clone(),
            calibration: None,
            updates: Vec::new(),
        }
    }

    pub fn model(&self) -> MarketModel {
        MarketModel {
            periods: self.periods.clone(),
            nodes: self.nodes.clone(),
            arcs: self.arcs.clone(),
            services: self.services.clone(),
            traders: self.traders.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Deserialize `text`, checking the schema version first. Under `strict`,
/// fields the schema does not know are an error; otherwise they are logged
/// and skipped.
fn parse_versioned<T: DeserializeOwned>(text: &str, strict: bool) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(Error::SchemaVersion {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing integer field `schema_version`".into(),
            })
        }
    }
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed: T = serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string())).map_err(parse_error)?;
    if !unknown.is_empty() {
        if strict {
            return Err(Error::UnknownFields(unknown));
        }
        for path in &unknown {
            log::warn!("ignoring unknown field {path}");
        }
    }
    Ok(parsed)
}

/// Parse a model file without validating the model.
pub fn parse_model_file(text: &str, strict: bool) -> Result<ModelFile> {
    parse_versioned(text, strict)
}

pub fn parse_updates(text: &str, strict: bool) -> Result<UpdatesFile> {
    parse_versioned(text, strict)
}

/// Read, parse and validate a model file (strict mode).
pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelFile> {
    let file = parse_model_file(&fs::read_to_string(path)?, true)?;
    let errors: Vec<_> = validate_model(&file.model()).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    Ok(file)
}

/// Read a model file and return the validated model.
pub fn load_model(path: impl AsRef<Path>) -> Result<MarketModel> {
    load_model_file(path).map(|f| f.model())
}

/// Read yearly updates: either an updates file or a model file carrying an
/// `updates` section.
pub fn load_updates(path: impl AsRef<Path>) -> Result<Vec<YearUpdate>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_error)?;
    if value.get("nodes").is_some() {
        Ok(parse_model_file(&text, true)?.updates)
    } else {
        Ok(parse_updates(&text, true)?.updates)
    }
}

/// Read calibration data: either a calibration file or a model file
/// carrying a `calibration` section.
pub fn load_calibration_data(path: impl AsRef<Path>) -> Result<CalibrationData> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_error)?;
    if value.get("nodes").is_some() {
        parse_model_file(&text, true)?
            .calibration
            .ok_or_else(|| Error::InvalidInput("model file has no calibration section".into()))
    } else {
        Ok(parse_versioned::<CalibrationFile>(&text, true)?.calibration)
    }
}

pub fn save_model_file(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    let mut text = file.to_json();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
