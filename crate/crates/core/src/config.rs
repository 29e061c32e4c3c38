//! TOML experiment configuration.
//!
//! Every section is optional and falls back to its defaults; unknown keys are
//! rejected. The master seed may be overridden through [`SEED_ENV`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{NeuralSpec, ToyBackend};
use crate::coev::{Method, TrainConfig};
use crate::error::{Error, Result};
use crate::experiments::{AblationSpec, DiscHeatmapSpec, ModeHeatmapSpec};
use crate::grid::{GridConfig, NEIGHBORHOOD_SIZE};
use crate::mixture::MixtureEvolutionConfig;
use crate::runtime::{ExecutionMode, RunSpec};
use crate::toy::ToyTarget;

/// Environment variable that replaces `experiment.seed`.
pub const SEED_ENV: &str = "CELLGAN_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Toy,
    Neural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub method: Method,
    pub backend: BackendKind,
    pub grid_dim: usize,
    pub mode: ExecutionMode,
    /// Master seed.
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            method: Method::Lipizzaner,
            backend: BackendKind::Toy,
            grid_dim: 3,
            mode: ExecutionMode::Lockstep,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySection {
    pub target: [f64; 2],
    pub step: f64,
    pub init_range: f64,
}

impl Default for ToySection {
    fn default() -> Self {
        Self {
            target: [-3.0, 3.0],
            step: 1.0,
            init_range: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSection {
    pub methods: Vec<Method>,
    pub grid_dims: Vec<usize>,
    /// Added to the master seed, one run per entry.
    pub seeds: Vec<u64>,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            grid_dims: vec![3],
            seeds: (0..5).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    /// Side length in pixels of one heatmap cell.
    pub cell_px: usize,
}

impl Default for RenderSection {
    fn default() -> Self {
        Self { cell_px: 8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub train: TrainConfig,
    pub mixture: MixtureEvolutionConfig,
    pub toy: ToySection,
    pub neural: NeuralSpec,
    pub heatmap_mode: ModeHeatmapSpec,
    pub heatmap_disc: DiscHeatmapSpec,
    pub ablation: AblationSection,
    pub render: RenderSection,
}

/// Dotted key (`section.key`) of the line containing byte `offset`.
fn field_at(text: &str, offset: usize) -> Option<String> {
    let mut section = String::new();
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if offset < start + line.len() {
            let key = trimmed.split('=').next()?.trim();
            if trimmed.starts_with('[') || key.is_empty() {
                return Some(section);
            }
            return Some(if section.is_empty() { key.to_string() } else { format!("{section}.{key}") });
        }
        start += line.len();
    }
    None
}

impl ExperimentConfig {
    /// Parses and validates without consulting the environment.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|s| field_at(text, s.start))
                .unwrap_or_else(|| "config".to_string());
            Error::config(field, e.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Reads a file, applies the seed override and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.experiment.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned integer: {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.grid_dim == 0 {
            return Err(Error::config("experiment.grid_dim", "must be at least 1"));
        }
        if self.experiment.output_dir.as_os_str().is_empty() {
            return Err(Error::config("experiment.output_dir", "must not be empty"));
        }
        self.train.validate(NEIGHBORHOOD_SIZE)?;
        self.mixture.validate()?;
        if !self.toy.target.iter().all(|t| t.is_finite()) {
            return Err(Error::config("toy.target", "must be finite"));
        }
        if !(self.toy.step >= 0.0 && self.toy.step.is_finite()) {
            return Err(Error::config("toy.step", "must be finite and non-negative"));
        }
        if !(self.toy.init_range > 0.0 && self.toy.init_range.is_finite()) {
            return Err(Error::config("toy.init_range", "must be positive"));
        }
        self.neural.validate()?;
        self.heatmap_mode.axis.validate("heatmap_mode.axis")?;
        self.heatmap_mode.coevolution.validate()?;
        if self.heatmap_mode.repetitions == 0 {
            return Err(Error::config("heatmap_mode.repetitions", "must be at least 1"));
        }
        if !(self.heatmap_mode.threshold > 0.0) {
            return Err(Error::config("heatmap_mode.threshold", "must be positive"));
        }
        self.heatmap_disc.axis.validate("heatmap_disc.axis")?;
        self.heatmap_disc.coevolution.validate()?;
        if self.heatmap_disc.repetitions == 0 {
            return Err(Error::config("heatmap_disc.repetitions", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.heatmap_disc.escape_threshold) {
            return Err(Error::config("heatmap_disc.escape_threshold", "must be in [0, 1]"));
        }
        if self.render.cell_px == 0 {
            return Err(Error::config("render.cell_px", "must be at least 1"));
        }
        self.ablation_spec().validate()
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        let spec = RunSpec {
            grid: GridConfig::new(self.experiment.grid_dim)?,
            method: self.experiment.method,
            train: self.train.clone(),
            mixture: self.mixture.clone(),
            mode: self.experiment.mode,
            seed: self.experiment.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn toy_backend(&self) -> ToyBackend {
        ToyBackend {
            target: ToyTarget::new(self.toy.target[0], self.toy.target[1]),
            step: self.toy.step,
            init_range: self.toy.init_range,
        }
    }

    pub fn ablation_spec(&self) -> AblationSpec {
        AblationSpec {
            methods: self.ablation.methods.clone(),
            grid_dims: self.ablation.grid_dims.clone(),
            seeds: self
                .ablation
                .seeds
                .iter()
                .map(|s| self.experiment.seed.wrapping_add(*s))
                .collect(),
            mode: self.experiment.mode,
            train: self.train.clone(),
            mixture: self.mixture.clone(),
            neural: self.neural.clone(),
        }
    }
}
