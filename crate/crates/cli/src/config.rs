//! Run configuration: one JSON document, overridable by `--set key=value`.

use std::path::Path;

use cgrg_core::mc::{Event, ExperimentConfig, Observable, Sampler};
use cgrg_core::{Geometry, ModelParameters};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub params: ModelParameters,
    /// Vertex count for `generate`.
    pub n: usize,
    /// Seed for `generate`, master seed for experiments and suites.
    pub seed: u64,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub observable: Observable,
    pub event: Option<Event>,
    pub sampler: Sampler,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            params: ModelParameters::monochrome(2, 1.0, Geometry::Torus).expect("default parameters are valid"),
            n: 1000,
            seed: 0,
            experiment: ExperimentSection {
                n_grid: vec![1000],
                replicas: 100,
                observable: Observable::IsolatedFraction,
                event: None,
                sampler: Sampler::Null,
            },
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from the defaults), applies the overrides in
    /// order, then validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(RunConfig::default()).expect("defaults serialise"),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        self.experiment_config().validate()?;
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let e = &self.experiment;
        let mut cfg = ExperimentConfig::new(self.params.clone(), e.n_grid.clone(), e.replicas, self.seed, e.observable)
            .with_sampler(e.sampler.clone());
        cfg.event = e.event;
        cfg
    }
}

/// `a.b.c=value`: the value is parsed as JSON when it parses, else taken as
/// a string. Array elements are addressed by index. Missing object keys are
/// created, so a misspelt key fails later against the schema.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not of the form key=value")))?;
    if path.is_empty() {
        return Err(CliError::Config(format!("override {spec:?} has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.entry(key.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| CliError::Config(format!("{path}: {key:?} is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| CliError::Config(format!("{path}: index {i} out of range for length {len}")))?
            }
            Value::Null => {
                *cur = Value::Object(Default::default());
                match cur {
                    Value::Object(map) => map.entry(key.to_string()).or_insert(Value::Null),
                    _ => unreachable!(),
                }
            }
            _ => return Err(CliError::Config(format!("{path}: cannot descend into a scalar at {key:?}"))),
        };
    }
    *cur = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = RunConfig::load(None, &["params.d=3".into(), "experiment.n_grid.0=50".into(), "seed=9".into()]).unwrap();
        assert_eq!(cfg.params.d(), 3);
        assert_eq!(cfg.experiment.n_grid, vec![50]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::load(None, &["colours=3".into()]).is_err());
        assert!(RunConfig::load(None, &["params.bogus=1".into()]).is_err());
        assert!(RunConfig::load(None, &["noequals".into()]).is_err());
        assert!(RunConfig::load(None, &["schema_version=2".into()]).is_err());
    }
}
