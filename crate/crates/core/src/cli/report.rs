//! Scenario report: JSON summary plus CSV plot data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StructureInfo {
    pub n_dof: usize,
    pub n_structure: usize,
    pub n_active: usize,
    pub n_passive: usize,
    pub mass_ratio: f64,
    /// Order of the augmented Lyapunov equation.
    pub augmented_dimension: usize,
    pub first_frequency_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingCell {
    /// m.
    pub level: f64,
    pub count: f64,
    /// Standard error of an ensemble count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// Measures at one dof; all values in m, m/s², counts over the horizon.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DofCell {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement_rms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration_rms: Option<f64>,
    #[serde(default)]
    pub crossings: Vec<CrossingCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DofCell {
    pub fn failed(message: impl Into<String>) -> Self {
        Self {
            error: Some(message.into()),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodReport {
    /// `ok` or `error`.
    pub status: String,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Keyed by dof label.
    pub dofs: BTreeMap<String, DofCell>,
    /// Method-specific details such as grid size or retained modes.
    #[serde(default)]
    pub details: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanSummary {
    pub period: f64,
    /// Static part, m.
    pub static_term: f64,
    /// `|u_k|`, m, per harmonic.
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    /// Mean displacement at 32 equally spaced times over one period, m.
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub tool: ToolInfo,
    pub scenario: Scenario,
    pub structure: StructureInfo,
    pub methods: BTreeMap<String, MethodReport>,
    pub mean: BTreeMap<String, MeanSummary>,
    pub warnings: Vec<String>,
}

/// Checks `report` against the shipped schema.
pub fn validate_report(report: &serde_json::Value) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA)?;
    let compiled = jsonschema::JSONSchema::compile(&schema).map_err(|e| Error::Parse(format!("report schema: {e}")))?;
    if let Err(errors) = compiled.validate(report) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        return Err(Error::Parse(format!("report violates its schema: {}", msgs.join("; "))));
    }
    Ok(())
}

/// File-name safe version of a dof label or functional name.
pub fn file_tag(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}
