//! Serialized models.
//!
//! A checkpoint is a versioned JSON document holding the schema, scaling
//! statistics, training configuration, both networks and the per-epoch loss
//! trace. Floats are written in shortest round-trip form, so
//! `save -> load -> save` is byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{standardize, ScalingStats, Schema, Table};
use crate::error::{Error, Result};
use crate::model::{train, DistVae, LossBreakdown, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;

/// Training-set summary of one continuous/ordinal column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub column: usize,
    /// 1% and 99% quantiles, standardized units.
    pub q01: f64,
    pub q99: f64,
    /// Distinct observed values (native units), ordinal columns only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ordinal_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: DistVae,
    pub scaling: ScalingStats,
    pub config: TrainConfig,
    pub columns: Vec<ColumnInfo>,
    pub loss_trace: Vec<LossBreakdown>,
}

impl Checkpoint {
    /// Standardizes a raw table and trains on it.
    pub fn fit(raw: &Table, config: &TrainConfig) -> Result<Self> {
        let (scaled, _) = standardize(raw)?;
        train(&scaled, config)
    }

    pub fn schema(&self) -> &Schema {
        &self.model.schema
    }

    pub fn column_info(&self, column: usize) -> Option<&ColumnInfo> {
        self.columns.iter().find(|c| c.column == column)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: Option<u32>,
        }
        let version: Version =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))?;
        match version.format_version {
            Some(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Checkpoint(format!(
                    "unsupported format version {v} (this build reads version {FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Checkpoint("missing format_version".into())),
        }
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("corrupt version {FORMAT_VERSION} checkpoint: {e}")))?;
        ckpt.model.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.config.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
