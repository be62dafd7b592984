use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};
use crate::model::AttentionRecord;

/// One scored test instance from one seed's run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub seed: u64,
    pub id: String,
    pub text: String,
    pub gold: f64,
    /// Raw (unclamped) prediction of each component model, keyed by id.
    pub predictions: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<f64>,
    /// The reported score, clamped to [-1, 1].
    #[serde(rename = "final")]
    pub final_prediction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionRecord>,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<()> {
        let finite = self.gold.is_finite()
            && self.final_prediction.is_finite()
            && self.predictions.values().all(|v| v.is_finite())
            && self.ensemble.is_none_or(f64::is_finite);
        if !finite {
            return Err(Error::NonFinite("prediction record"));
        }
        if self.final_prediction.abs() > 1.0 {
            return Err(Error::invalid(format!(
                "record {}: final prediction {} outside [-1, 1]",
                self.id, self.final_prediction
            )));
        }
        Ok(())
    }
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut buf = String::new();
    for r in records {
        r.validate()?;
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: PredictionRecord =
            serde_json::from_str(line).map_err(|e| parse_error(path, no + 1, e.to_string()))?;
        r.validate().map_err(|e| parse_error(path, no + 1, e.to_string()))?;
        out.push(r);
    }
    Ok(out)
}
