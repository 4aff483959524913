//! JSON documents: factor specs and calibrated models, FX specs and
//! cross-asset correlations. Output is canonical so that save, load and save
//! again reproduces the same bytes.

use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationMode;
use crate::error::{CurveError, Result};
use crate::factor_model::{CalibratedModel, CrossCorrelation, FactorSpec};
use crate::pricing::FxSpec;
use crate::termstructure::ContractSchedule;

/// Version written into model documents; loading any other is refused.
pub const MODEL_DOCUMENT_VERSION: u32 = 1;

/// Calibrated scalings stored next to the spec they were solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub mode: CalibrationMode,
    pub schedule: ContractSchedule,
    pub alpha_knots: Vec<f64>,
    pub lambda_samples: Vec<f64>,
}

/// `model/<asset>.json`: the factor spec and, once calibrated, its scalings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_of: Option<NaiveDate>,
    pub spec: FactorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
}

impl ModelDocument {
    pub fn from_spec(spec: FactorSpec, as_of: Option<NaiveDate>) -> Self {
        ModelDocument {
            version: MODEL_DOCUMENT_VERSION,
            as_of,
            spec,
            calibration: None,
        }
    }

    pub fn from_model(m: &CalibratedModel, mode: CalibrationMode, as_of: Option<NaiveDate>) -> Self {
        ModelDocument {
            version: MODEL_DOCUMENT_VERSION,
            as_of,
            spec: m.spec().clone(),
            calibration: Some(CalibrationRecord {
                mode,
                schedule: m.schedule().clone(),
                alpha_knots: m.alpha_knots().to_vec(),
                lambda_samples: m.lambda_samples().to_vec(),
            }),
        }
    }

    /// The calibrated model; fails if the document holds only a spec.
    pub fn model(&self) -> Result<CalibratedModel> {
        let c = self
            .calibration
            .as_ref()
            .ok_or_else(|| CurveError::MissingData("model document has no calibration section".into()))?;
        CalibratedModel::new(self.spec.clone(), c.schedule.clone(), c.alpha_knots.clone(), c.lambda_samples.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents serialize");
        s.push('\n');
        s
    }
}

/// `fx/<pair>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FxDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_of: Option<NaiveDate>,
    /// Commodity asset the FX correlations refer to.
    pub asset: String,
    pub fx: FxSpec,
}

/// `cross/<name>.json`: factor cross-correlations of two assets, rows for the
/// first asset's factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_of: Option<NaiveDate>,
    pub first: String,
    pub second: String,
    pub correlation: CrossCorrelation,
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CurveError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CurveError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

/// Reads a model document, refusing other versions before anything else.
pub fn load_model_document(path: &Path) -> Result<ModelDocument> {
    let probe: VersionProbe = read_json(path)?;
    if probe.version != MODEL_DOCUMENT_VERSION {
        return Err(CurveError::IncompatibleVersion {
            found: probe.version,
            expected: MODEL_DOCUMENT_VERSION,
        });
    }
    read_json(path)
}

pub fn save_model_document(doc: &ModelDocument, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CurveError::io(dir, e))?;
    }
    std::fs::write(path, doc.to_json()).map_err(|e| CurveError::io(path, e))
}

/// Writes a calibrated model with its mode.
pub fn save_model(m: &CalibratedModel, mode: CalibrationMode, path: &Path) -> Result<()> {
    save_model_document(&ModelDocument::from_model(m, mode, None), path)
}

/// Reads a calibrated model; every model invariant is re-checked.
pub fn load_model(path: &Path) -> Result<CalibratedModel> {
    load_model_document(path)?.model()
}
