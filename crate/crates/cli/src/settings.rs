//! Parameter resolution: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flowlab::geometry::io::{read_mesh, KeyValues};
use flowlab::geometry::SimplicialMesh;
use serde_json::Value;

use crate::output::CliError;
use crate::Common;

/// Resolved parameters of one run. Every value looked up is recorded for
/// the manifest.
pub struct Settings {
    config: KeyValues,
    pub common: Common,
    resolved: BTreeMap<String, Value>,
}

impl Settings {
    pub fn load(common: &Common) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
                KeyValues::parse(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?
            }
            None => KeyValues::default(),
        };
        Ok(Self {
            config,
            common: common.clone(),
            resolved: BTreeMap::new(),
        })
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.config
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Invalid(format!("config key `{key}` has invalid value `{v}`")))
            })
            .transpose()
    }

    pub fn f64(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self.parsed(key)?.unwrap_or(default),
        };
        if !v.is_finite() {
            return Err(CliError::Invalid(format!("`{key}` must be finite, got {v}")));
        }
        self.resolved.insert(key.into(), Value::from(v));
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self.parsed(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.into(), Value::from(v));
        Ok(v)
    }

    pub fn bool(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        let v = self.parsed(key)?.unwrap_or(default);
        self.resolved.insert(key.into(), Value::from(v));
        Ok(v)
    }

    /// One of `choices`, by name.
    pub fn choice(&mut self, key: &str, choices: &[&str], default: &str) -> Result<String, CliError> {
        let v = self.config.get(key).unwrap_or(default).to_string();
        if !choices.contains(&v.as_str()) {
            return Err(CliError::Invalid(format!(
                "`{key}` must be one of {}, got `{v}`",
                choices.join(", ")
            )));
        }
        self.resolved.insert(key.into(), Value::from(v.clone()));
        Ok(v)
    }

    pub fn seed(&mut self) -> Result<u64, CliError> {
        let v = match self.common.seed {
            Some(v) => v,
            None => self.parsed("seed")?.unwrap_or(0),
        };
        self.resolved.insert("seed".into(), Value::from(v));
        Ok(v)
    }

    pub fn out_dir(&mut self) -> Option<PathBuf> {
        let out = self.common.out.clone().or_else(|| self.config.get("out").map(PathBuf::from));
        if let Some(o) = &out {
            self.resolved.insert("out".into(), Value::from(o.display().to_string()));
        }
        out
    }

    /// The input mesh, from `--mesh` or the `mesh` config key.
    pub fn mesh(&mut self) -> Result<SimplicialMesh, CliError> {
        let path = self
            .common
            .mesh
            .clone()
            .or_else(|| self.config.get("mesh").map(PathBuf::from))
            .ok_or_else(|| CliError::Invalid("an input mesh is required (--mesh FILE)".into()))?;
        self.resolved.insert("mesh".into(), Value::from(path.display().to_string()));
        load_mesh(&path)
    }

    pub fn record(&mut self, key: &str, value: impl Into<Value>) {
        self.resolved.insert(key.into(), value.into());
    }

    pub fn resolved(&self) -> &BTreeMap<String, Value> {
        &self.resolved
    }
}

pub fn load_mesh(path: &Path) -> Result<SimplicialMesh, CliError> {
    read_mesh(path).map_err(|e| CliError::Invalid(format!("mesh {}: {e}", path.display())))
}
