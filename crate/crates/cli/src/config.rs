//! Flat run configuration shared by every subcommand.
//!
//! Resolution order, later wins: built-in defaults, `--config` file,
//! subcommand flags, `--set key=value` pairs, `--seed`.

use std::path::Path;
use std::sync::Arc;

use galign::engine::{BootstrapConfig, CanonicalizerSpec, Selection};
use galign::world::DatasetSpec;
use galign::{GroupManifold, PoseDistribution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CanonicalizerKind {
    Identity,
    Oracle,
    Noisy,
    Template,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateMode {
    /// Per-class means of the training set aligned by the evaluated canonicalizer.
    Fit,
    /// The generator's upright class shapes.
    Prototype,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,

    pub manifold: String,
    pub classes: usize,
    pub per_class: usize,
    pub pose: String,
    pub jitter: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,

    pub alpha: f64,
    pub interval_n: usize,
    pub steps: usize,
    pub selection: Selection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub canonicalizer: CanonicalizerKind,
    pub noise_kappa: f64,
    pub noise_bias: Vec<f64>,
    pub noise_wrapped: bool,
    pub template_rate: f64,
    pub template_per_class: bool,
    pub temperature: f64,
    pub grid_resolution: usize,
    pub scale_resolution: usize,
    pub refine: bool,
    pub variance_floor: f64,

    pub rotation_order: usize,
    pub scales: Vec<f64>,
    pub templates: TemplateMode,
    pub test_per_class: usize,

    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let engine = BootstrapConfig::default();
        RunConfig {
            seed: 0,
            manifold: "so2*logscale:0.5:2".into(),
            classes: 10,
            per_class: 50,
            pose: "vonmises:0:1;dirac:0".into(),
            jitter: galign::world::DEFAULT_JITTER,
            dataset: None,
            alpha: engine.alpha,
            interval_n: engine.interval_n,
            steps: engine.steps,
            selection: engine.selection,
            beta: None,
            canonicalizer: CanonicalizerKind::Template,
            noise_kappa: 100.0,
            noise_bias: vec![],
            noise_wrapped: false,
            template_rate: 0.1,
            template_per_class: false,
            temperature: engine.temperature,
            grid_resolution: engine.grid_resolution,
            scale_resolution: engine.scale_resolution,
            refine: engine.refine,
            variance_floor: engine.variance_floor,
            rotation_order: 17,
            scales: vec![1.0, 1.125, 1.25],
            templates: TemplateMode::Fit,
            test_per_class: 10,
            plot: true,
        }
    }
}

/// Parses one `key=value` override into a TOML key/value pair. Values that
/// are not valid TOML are taken as bare strings.
fn parse_override(text: &str) -> Result<(String, toml::Value), CliError> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{text}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{text}` has an empty key")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Layered configuration before deserialization.
#[derive(Default)]
pub struct Layers {
    table: toml::Table,
}

impl Layers {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Layers::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let table =
            toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Layers { table })
    }

    pub fn set(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.table.insert(key.to_string(), value.into());
    }

    pub fn set_opt<V: Into<toml::Value>>(&mut self, key: &str, value: Option<V>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for text in overrides {
            let (k, v) = parse_override(text)?;
            self.table.insert(k, v);
        }
        Ok(())
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let config: RunConfig = toml::Value::Table(self.table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    #[cfg(test)]
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn manifold(&self) -> Result<Arc<GroupManifold>, CliError> {
        self.manifold
            .parse::<GroupManifold>()
            .map(Arc::new)
            .map_err(|e| CliError::field("manifold", e))
    }

    pub fn canonicalizer_spec(&self) -> CanonicalizerSpec {
        match self.canonicalizer {
            CanonicalizerKind::Identity => CanonicalizerSpec::Identity,
            CanonicalizerKind::Oracle => CanonicalizerSpec::Oracle,
            CanonicalizerKind::Noisy => CanonicalizerSpec::Noisy {
                kappa: self.noise_kappa,
                bias: self.noise_bias.clone(),
                wrapped: self.noise_wrapped,
            },
            CanonicalizerKind::Template => CanonicalizerSpec::Template {
                rate: self.template_rate,
                per_class: self.template_per_class,
            },
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            alpha: self.alpha,
            interval_n: self.interval_n,
            steps: self.steps,
            selection: self.selection,
            seed: self.seed,
            beta: self.beta,
            grid_resolution: self.grid_resolution,
            scale_resolution: self.scale_resolution,
            refine: self.refine,
            temperature: self.temperature,
            canonicalizer: self.canonicalizer_spec(),
            variance_floor: self.variance_floor,
        }
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec, CliError> {
        let pose = PoseDistribution::parse(self.manifold()?, &self.pose).map_err(|e| CliError::field("pose", e))?;
        let mut spec = DatasetSpec::new(self.classes, self.per_class, pose, self.seed);
        spec.jitter = self.jitter;
        Ok(spec)
    }

    /// Field-level checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        self.manifold()?;
        if self.classes == 0 {
            return Err(CliError::field("classes", "must be >= 1"));
        }
        if self.per_class == 0 {
            return Err(CliError::field("per_class", "must be >= 1"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(CliError::field("jitter", "must be a finite value >= 0"));
        }
        if self.rotation_order == 0 {
            return Err(CliError::field("rotation_order", "must be >= 1"));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(CliError::field("scales", "must be a non-empty list of positive values"));
        }
        if self.test_per_class == 0 {
            return Err(CliError::field("test_per_class", "must be >= 1"));
        }
        self.bootstrap().validate().map_err(|e| CliError::Config(e.to_string()))
    }
}
