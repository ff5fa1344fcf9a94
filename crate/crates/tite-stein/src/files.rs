//! Configuration, scenario and dataset documents on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tite_stein_core::presets::STANDARD_ACCRUAL_RATE;
use tite_stein_core::{AccrualModel, ConfigError, DesignParams, FinalData, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: at `{path}`: {message}")]
    Parse {
        file: PathBuf,
        path: String,
        message: String,
    },
}

impl LoadError {
    pub fn invalid(file: &Path, e: ConfigError) -> Self {
        LoadError::Parse {
            file: file.to_path_buf(),
            path: e.field,
            message: e.reason,
        }
    }

    /// JSON key path of the offending value, when known.
    pub fn key_path(&self) -> Option<&str> {
        match self {
            LoadError::Parse { path, .. } => Some(path),
            LoadError::Io { .. } => None,
        }
    }
}

/// Parses a JSON value, reporting the key path of the first error.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, (String, String)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        (path, e.into_inner().to_string())
    })
}

pub fn read_json<T: DeserializeOwned>(file: &Path) -> Result<T, LoadError> {
    let text = fs::read_to_string(file).map_err(|source| LoadError::Io {
        file: file.to_path_buf(),
        source,
    })?;
    from_json_str(&text).map_err(|(path, message)| LoadError::Parse {
        file: file.to_path_buf(),
        path,
        message,
    })
}

pub fn load_design(file: &Path) -> Result<DesignParams, LoadError> {
    let params: DesignParams = read_json(file)?;
    params.validate().map_err(|e| LoadError::invalid(file, e))?;
    Ok(params)
}

fn standard_accrual() -> AccrualModel {
    AccrualModel::new(STANDARD_ACCRUAL_RATE)
}

/// A scenario document: true curves plus the accrual model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    #[serde(default = "standard_accrual")]
    pub accrual: AccrualModel,
}

pub fn load_scenario(file: &Path, params: &DesignParams) -> Result<ScenarioFile, LoadError> {
    let mut doc: ScenarioFile = read_json(file)?;
    let prefix = |e: ConfigError, top: &str| ConfigError::new(format!("{top}.{}", e.field), e.reason);
    doc.scenario
        .validate(params)
        .map_err(|e| LoadError::invalid(file, prefix(e, "scenario")))?;
    doc.accrual
        .validate()
        .map_err(|e| LoadError::invalid(file, prefix(e, "accrual")))?;
    if doc.scenario.name.is_empty() {
        doc.scenario.name = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(doc)
}

pub fn load_final_data(file: &Path, params: &DesignParams) -> Result<FinalData, LoadError> {
    let data: FinalData = read_json(file)?;
    check_final_data(&data, params).map_err(|e| LoadError::invalid(file, e))?;
    Ok(data)
}

pub fn check_final_data(data: &FinalData, params: &DesignParams) -> Result<(), ConfigError> {
    data.check().map_err(|e| ConfigError::new("doses", e))?;
    if data.doses.len() != params.num_doses {
        return Err(ConfigError::new("doses", "length must equal num_doses"));
    }
    if data.doses.iter().all(|d| d.n == 0) {
        return Err(ConfigError::new("doses", "no patients"));
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of the design, lowercase hex.
pub fn config_hash(params: &DesignParams) -> String {
    let bytes = serde_json::to_vec(params).expect("design serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes through a temporary sibling so readers never see half a file.
pub fn write_atomic(file: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = file.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, file)
}
