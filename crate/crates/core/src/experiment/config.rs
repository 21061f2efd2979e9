//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! methods = ["tsuae", "tssae", "sae", "pca", "pls", "rr"]
//!
//! [data]
//! source = "generator"
//!
//! [model]
//! iterations = 2000
//!
//! [method.sae]
//! iterations = 1000
//!
//! [[fault]]
//! name = "fault1"
//! target = "x10"
//! magnitude = 1.5
//! start = 201
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{
    MethodId, MethodSettings, DEFAULT_CV_FOLDS, DEFAULT_LAMBDA_GRID, DEFAULT_MAX_COMPONENTS,
    DEFAULT_VARIANCE_FRACTION,
};
use crate::data::{CsvSchema, FaultSpec, FaultTarget, GeneratorSpec};
use crate::error::{Error, Result};
use crate::monitor::Subspace;
use crate::tsuae::{LearningRateSchedule, ModelConfig};

pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_NF_GRID: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub nf_grid: Vec<f64>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub baselines: BaselineSection,
    /// Per-method overrides of `[model]` keys.
    #[serde(default)]
    pub method: BTreeMap<String, ModelSection>,
    #[serde(default, rename = "fault")]
    pub faults: Vec<FaultConfig>,
}

fn default_methods() -> Vec<String> {
    MethodId::REPORT_ORDER
        .iter()
        .map(|m| m.to_string())
        .collect()
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "source", rename_all = "lowercase")]
pub enum DataConfig {
    Generator {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_process_vars")]
        process_vars: usize,
        #[serde(default = "default_latent_dim")]
        latent_dim: usize,
        #[serde(default = "default_noise_variance")]
        noise_variance: f64,
    },
    Csv {
        /// Normal-operation training data; paths are relative to the config file.
        train: PathBuf,
        process: Vec<String>,
        #[serde(default)]
        quality: Vec<String>,
    },
}

fn default_samples() -> usize {
    GeneratorSpec::default().samples
}

fn default_process_vars() -> usize {
    GeneratorSpec::default().m
}

fn default_latent_dim() -> usize {
    GeneratorSpec::default().latent_dim
}

fn default_noise_variance() -> f64 {
    GeneratorSpec::default().noise_variance
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Generator {
            samples: default_samples(),
            process_vars: default_process_vars(),
            latent_dim: default_latent_dim(),
            noise_variance: default_noise_variance(),
        }
    }
}

/// Optional overrides of [`ModelConfig`] fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub v: Option<usize>,
    pub n_h: Option<usize>,
    pub iterations: Option<usize>,
    pub student_learning_rate: Option<f64>,
    pub teacher_learning_rate: Option<f64>,
    pub initial_sigma2: Option<f64>,
    pub sigma2_floor: Option<f64>,
    pub stop_tolerance: Option<f64>,
    pub stop_window: Option<usize>,
    pub batch_size: Option<usize>,
    /// "constant" or "cosine".
    pub schedule: Option<String>,
    pub final_fraction: Option<f64>,
}

impl ModelSection {
    /// Settings used for the numerical example: mini-batches of 128, a cosine
    /// decay from 1e-2 and a fixed budget of 20000 iterations.
    pub fn benchmark() -> Self {
        Self {
            n_h: Some(32),
            iterations: Some(20_000),
            student_learning_rate: Some(1e-2),
            teacher_learning_rate: Some(1e-2),
            stop_tolerance: Some(0.0),
            batch_size: Some(128),
            schedule: Some("cosine".into()),
            final_fraction: Some(0.02),
            ..Self::default()
        }
    }

    fn apply(&self, cfg: &mut ModelConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            v,
            n_h,
            iterations,
            student_learning_rate,
            teacher_learning_rate,
            initial_sigma2,
            sigma2_floor,
            stop_tolerance,
            stop_window
        );
        if self.batch_size.is_some() {
            cfg.batch_size = self.batch_size;
        }
        match (self.schedule.as_deref(), self.final_fraction) {
            (None, None) => {}
            (Some("constant"), None) => cfg.schedule = LearningRateSchedule::Constant,
            (Some("cosine"), f) | (None, f @ Some(_)) => {
                let current = match cfg.schedule {
                    LearningRateSchedule::Cosine { final_fraction } => final_fraction,
                    LearningRateSchedule::Constant => 0.0,
                };
                cfg.schedule = LearningRateSchedule::Cosine {
                    final_fraction: f.unwrap_or(current),
                };
            }
            (Some(other), _) => {
                return Err(Error::Config(format!(
                    "unknown schedule `{other}` (expected constant or cosine, final_fraction needs cosine)"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default = "default_variance_fraction")]
    pub pca_variance_fraction: f64,
    #[serde(default = "default_pls_max")]
    pub pls_max_components: usize,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_lambdas")]
    pub ridge_lambdas: Vec<f64>,
}

fn default_variance_fraction() -> f64 {
    DEFAULT_VARIANCE_FRACTION
}

fn default_pls_max() -> usize {
    DEFAULT_MAX_COMPONENTS
}

fn default_cv_folds() -> usize {
    DEFAULT_CV_FOLDS
}

fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDA_GRID.to_vec()
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            pca_variance_fraction: DEFAULT_VARIANCE_FRACTION,
            pls_max_components: DEFAULT_MAX_COMPONENTS,
            cv_folds: DEFAULT_CV_FOLDS,
            ridge_lambdas: DEFAULT_LAMBDA_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub name: String,
    /// Column name, `process:<k>` or `quality:<k>` (1-based).
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub magnitude: f64,
    #[serde(default = "default_start")]
    pub start: usize,
    #[serde(default)]
    pub units: FaultUnits,
    /// Monitoring series to read (CSV source); generated when absent.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// "process" or "quality": the affected subspace of a fault already
    /// present in `file`. Derived from `target` when that is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<String>,
}

fn default_start() -> usize {
    201
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultUnits {
    /// Multiples of the training standard deviation of the target column.
    #[default]
    Std,
    Raw,
}

impl FaultConfig {
    pub fn spec(&self) -> Result<Option<FaultSpec>> {
        let Some(target) = &self.target else {
            return Ok(None);
        };
        let parse_index = |s: &str| {
            s.parse::<usize>().map_err(|_| {
                Error::Config(format!("fault `{}`: bad column number `{s}`", self.name))
            })
        };
        let target = if let Some(k) = target.strip_prefix("process:") {
            FaultTarget::Process(parse_index(k)?)
        } else if let Some(k) = target.strip_prefix("quality:") {
            FaultTarget::Quality(parse_index(k)?)
        } else {
            FaultTarget::Named(target.clone())
        };
        Ok(Some(FaultSpec::step(target, self.magnitude, self.start)))
    }

    pub fn declared_subspace(&self) -> Result<Option<Subspace>> {
        match self.subspace.as_deref() {
            None => Ok(None),
            Some("process") => Ok(Some(Subspace::Process)),
            Some("quality") => Ok(Some(Subspace::Quality)),
            Some(other) => Err(Error::Config(format!(
                "fault `{}`: subspace `{other}` is neither process nor quality",
                self.name
            ))),
        }
    }
}

impl ExperimentConfig {
    /// The numerical-example setup: generated data, faults 1 and 2, all methods.
    pub fn numerical_example(seed: u64) -> Self {
        Self {
            seed,
            methods: default_methods(),
            confidence: DEFAULT_CONFIDENCE,
            nf_grid: DEFAULT_NF_GRID.to_vec(),
            data: DataConfig::default(),
            model: ModelSection::benchmark(),
            baselines: BaselineSection::default(),
            method: BTreeMap::new(),
            faults: Self::generated_faults(),
        }
    }

    fn generated_faults() -> Vec<FaultConfig> {
        vec![
            FaultConfig {
                name: "fault1".into(),
                target: Some("x10".into()),
                magnitude: 1.5,
                start: 201,
                units: FaultUnits::Std,
                file: None,
                subspace: None,
            },
            FaultConfig {
                name: "fault2".into(),
                target: Some("y".into()),
                magnitude: 0.7,
                start: 201,
                units: FaultUnits::Std,
                file: None,
                subspace: None,
            },
        ]
    }

    /// Missing `nf_grid` and, for generated data, missing faults take the
    /// numerical-example values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.nf_grid.is_empty() {
            cfg.nf_grid = DEFAULT_NF_GRID.to_vec();
        }
        if cfg.faults.is_empty() && matches!(cfg.data, DataConfig::Generator { .. }) {
            cfg.faults = Self::generated_faults();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataConfig::Csv { train, .. } = &mut self.data {
            fix(train);
        }
        for f in &mut self.faults {
            if let Some(file) = &mut f.file {
                fix(file);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for m in &self.methods {
            m.parse::<MethodId>()?;
        }
        for key in self.method.keys().filter(|k| k.as_str() != "tssae-nf") {
            key.parse::<MethodId>()?;
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if let Some(k) = self.nf_grid.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            return Err(Error::Config(format!(
                "negative feedback rate {k} must be finite and >= 0"
            )));
        }
        for (i, f) in self.faults.iter().enumerate() {
            if self.faults[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Config(format!("fault `{}` defined twice", f.name)));
            }
            if f.name.is_empty() || f.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid fault name `{}`", f.name)));
            }
            if f.start == 0 {
                return Err(Error::Config(format!(
                    "fault `{}`: start is 1-based",
                    f.name
                )));
            }
            if matches!(self.data, DataConfig::Csv { .. }) && f.file.is_none() {
                return Err(Error::Config(format!(
                    "fault `{}` needs a file for CSV data",
                    f.name
                )));
            }
            f.spec()?;
            f.declared_subspace()?;
        }
        if let DataConfig::Csv { process, .. } = &self.data {
            if process.is_empty() {
                return Err(Error::Config(
                    "CSV data needs at least one process column".into(),
                ));
            }
        }
        for id in self.method_ids()? {
            self.settings_for(id)?.model.validate()?;
        }
        self.generator_spec().map(|g| g.validate()).transpose()?;
        Ok(())
    }

    pub fn method_ids(&self) -> Result<Vec<MethodId>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn generator_spec(&self) -> Option<GeneratorSpec> {
        match &self.data {
            DataConfig::Generator {
                samples,
                process_vars,
                latent_dim,
                noise_variance,
            } => Some(GeneratorSpec {
                latent_dim: *latent_dim,
                m: *process_vars,
                noise_variance: *noise_variance,
                samples: *samples,
                seed: self.seed,
            }),
            DataConfig::Csv { .. } => None,
        }
    }

    pub fn csv_schema(&self) -> Option<CsvSchema> {
        match &self.data {
            DataConfig::Csv {
                process, quality, ..
            } => Some(CsvSchema::new(process.clone(), quality.clone())),
            DataConfig::Generator { .. } => None,
        }
    }

    /// Model dimensions are filled in from the data once it is loaded; here
    /// `m`/`p` come from the data section when known, else 1.
    pub fn settings_for(&self, id: MethodId) -> Result<MethodSettings> {
        let (m, p) = match &self.data {
            DataConfig::Generator { process_vars, .. } => (*process_vars, 1),
            DataConfig::Csv {
                process, quality, ..
            } => (process.len(), quality.len().max(1)),
        };
        let mut model = ModelConfig::new(m, p);
        model.seed = self.seed;
        self.model.apply(&mut model)?;
        // Overrides keyed by the canonical id, e.g. "tssae-nf:0.1", fall back to the family key.
        let family = match id {
            MethodId::TssaeNf(_) => Some("tssae-nf"),
            _ => None,
        };
        if let Some(section) = family.and_then(|f| self.method.get(f)) {
            section.apply(&mut model)?;
        }
        for (key, section) in &self.method {
            if key.parse::<MethodId>().ok() == Some(id) {
                section.apply(&mut model)?;
            }
        }
        let mut settings = MethodSettings::new(model);
        settings.pca_variance_fraction = self.baselines.pca_variance_fraction;
        settings.pls_max_components = self.baselines.pls_max_components;
        settings.cv_folds = self.baselines.cv_folds;
        settings.ridge_lambdas = self.baselines.ridge_lambdas.clone();
        Ok(settings)
    }
}
