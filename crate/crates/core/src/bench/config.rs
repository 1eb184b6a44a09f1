use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::classifiers::ClassifierSpec;
use crate::error::{QencError, Result};
use crate::preprocess::SynthConfig;
use crate::readout::ReadoutSpec;
use crate::types::{EmbeddingKind, EmbeddingSpec, Granularity, KeyPolicy, StrategyKind};

/// Where the experiment's rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// Raw table with categorical and numeric columns.
    Csv {
        path: PathBuf,
        target: String,
        /// Columns forced to numeric (parse failures are reported).
        #[serde(default)]
        numeric_columns: Vec<String>,
    },
    /// Already numeric matrix; labels in `label_column` (default `__label__`).
    Matrix {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<String>,
    },
    /// Generated churn-shaped table.
    Synthetic {
        #[serde(default = "default_synth_rows")]
        rows: usize,
        #[serde(default = "default_churn_rate")]
        churn_rate: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_synth_rows() -> usize {
    SynthConfig::default().rows
}

fn default_churn_rate() -> f64 {
    SynthConfig::default().churn_rate
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::Synthetic {
            rows: default_synth_rows(),
            churn_rate: default_churn_rate(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaMode {
    Elbow,
    None,
}

/// `"elbow"`, `"none"`, or a fixed component count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PcaComponents {
    Fixed(usize),
    Mode(PcaMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default = "default_drop_columns")]
    pub drop_columns: Vec<String>,
    /// `null` disables the correlation filter.
    #[serde(default = "default_correlation")]
    pub correlation_threshold: Option<f64>,
    /// `null` disables the VIF filter.
    #[serde(default = "default_vif")]
    pub vif_threshold: Option<f64>,
    #[serde(default = "default_true")]
    pub balance: bool,
    #[serde(default = "default_pca")]
    pub pca_components: PcaComponents,
    /// Upper bound on the elbow-selected component count.
    #[serde(default = "default_max_components")]
    pub max_components: usize,
    /// `null` leaves values unscaled.
    #[serde(default = "default_interval")]
    pub scale_interval: Option<[f64; 2]>,
}

fn default_drop_columns() -> Vec<String> {
    vec!["customerID".into()]
}
fn default_correlation() -> Option<f64> {
    Some(0.8)
}
fn default_vif() -> Option<f64> {
    Some(5.0)
}
fn default_true() -> bool {
    true
}
fn default_pca() -> PcaComponents {
    PcaComponents::Mode(PcaMode::Elbow)
}
fn default_max_components() -> usize {
    8
}
fn default_interval() -> Option<[f64; 2]> {
    Some([0.0, std::f64::consts::PI])
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            drop_columns: default_drop_columns(),
            correlation_threshold: default_correlation(),
            vif_threshold: default_vif(),
            balance: true,
            pca_components: default_pca(),
            max_components: default_max_components(),
            scale_interval: default_interval(),
        }
    }
}

/// An embedding to benchmark. Without a granularity, each strategy runs at
/// the granularity it requires and DE runs at both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingEntry {
    pub kind: EmbeddingKind,
    #[serde(default)]
    pub granularity: Option<Granularity>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub qaoa_params: Vec<f64>,
    #[serde(default = "default_embedding_seed")]
    pub rng_seed: u64,
}

fn default_layers() -> usize {
    1
}
fn default_embedding_seed() -> u64 {
    7
}

impl EmbeddingEntry {
    pub fn new(kind: EmbeddingKind, granularity: Option<Granularity>) -> Self {
        Self {
            kind,
            granularity,
            layers: default_layers(),
            qaoa_params: Vec::new(),
            rng_seed: default_embedding_seed(),
        }
    }

    pub fn spec(&self, granularity: Granularity) -> EmbeddingSpec {
        EmbeddingSpec::new(self.kind, granularity)
            .with_layers(self.layers)
            .with_qaoa_params(self.qaoa_params.clone())
            .with_seed(self.rng_seed)
    }

    /// Granularities at which `strategy` runs for this entry.
    pub fn granularities_for(&self, strategy: StrategyKind) -> Vec<Granularity> {
        match (self.granularity, strategy.required_granularity()) {
            (Some(g), _) => vec![g],
            (None, Some(g)) => vec![g],
            (None, None) => vec![Granularity::Cell, Granularity::Row],
        }
    }
}

/// Settings for the single-encoding `encode` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeConfig {
    #[serde(default = "default_encode_strategy")]
    pub strategy: StrategyKind,
    #[serde(default = "default_encode_embedding")]
    pub embedding: EmbeddingEntry,
}

fn default_encode_strategy() -> StrategyKind {
    StrategyKind::GlobalDiscrete
}

fn default_encode_embedding() -> EmbeddingEntry {
    EmbeddingEntry::new(EmbeddingKind::Angle, Some(Granularity::Cell))
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            strategy: default_encode_strategy(),
            embedding: default_encode_embedding(),
        }
    }
}

impl EncodeConfig {
    pub fn spec(&self) -> EmbeddingSpec {
        let g = self
            .embedding
            .granularities_for(self.strategy)
            .into_iter()
            .next()
            .expect("at least one granularity");
        self.embedding.spec(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub input: InputSpec,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default = "default_embeddings")]
    pub embeddings: Vec<EmbeddingEntry>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub readout: ReadoutSpec,
    #[serde(default = "ClassifierSpec::defaults")]
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Share of each class used for training; `null` trains and evaluates
    /// on the full prepared matrix.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Timed repetitions of each training-set encoding.
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    #[serde(default)]
    pub key_policy: KeyPolicy,
    /// Artificial cost per embed call, in microseconds (0 = off).
    #[serde(default)]
    pub per_call_delay_us: u64,
    /// Embed distinct items on the thread pool.
    #[serde(default)]
    pub parallel_embedding: bool,
    /// Run grid cells concurrently; timings are then flagged non-comparable.
    #[serde(default)]
    pub parallel_cells: bool,
    /// Accuracy deltas beyond this magnitude are flagged.
    #[serde(default = "default_accuracy_bound")]
    pub accuracy_bound: f64,
    #[serde(default)]
    pub encode: EncodeConfig,
}

fn default_embeddings() -> Vec<EmbeddingEntry> {
    vec![EmbeddingEntry::new(EmbeddingKind::Angle, None)]
}
fn default_strategies() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}
fn default_seed() -> u64 {
    42
}
fn default_train_fraction() -> Option<f64> {
    Some(0.8)
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("reports")
}
fn default_repeat() -> usize {
    1
}
fn default_accuracy_bound() -> f64 {
    0.02
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

/// One (embedding, granularity, strategy) combination of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub embedding_index: usize,
    pub spec: EmbeddingSpec,
    pub strategy: StrategyKind,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text).map_err(config_error)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(config_error)
    }

    /// Reads a config file and applies `key=value` overrides (dotted paths)
    /// before validation.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QencError::io(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(config_error)?;
        Self::resolve(value, overrides)
    }

    /// Applies overrides to a parsed document, then deserializes and validates.
    pub fn resolve(mut value: Value, overrides: &[String]) -> Result<Self> {
        let defaults = serde_json::to_value(Self::default())?;
        for o in overrides {
            fill_parents(&mut value, &defaults, o);
            apply_override(&mut value, o)?;
        }
        let config = Self::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.embeddings.is_empty() {
            return Err(QencError::Config("embedding list is empty".into()));
        }
        if self.strategies.is_empty() {
            return Err(QencError::Config("strategy list is empty".into()));
        }
        if self.classifiers.is_empty() {
            return Err(QencError::Config("classifier list is empty".into()));
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            c.validate()?;
            if self.classifiers[..i].iter().any(|o| o.kind() == c.kind()) {
                return Err(QencError::Config(format!(
                    "classifier {} listed twice",
                    c.kind()
                )));
            }
        }
        self.readout.validate()?;
        if self.repeat == 0 {
            return Err(QencError::Config("repeat must be at least 1".into()));
        }
        if let Some(f) = self.train_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(QencError::Config(format!(
                    "train_fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        if self.accuracy_bound.is_nan() || self.accuracy_bound < 0.0 {
            return Err(QencError::Config(
                "accuracy_bound must be non-negative".into(),
            ));
        }
        if let Some([lo, hi]) = self.preprocess.scale_interval {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(QencError::Config(format!(
                    "invalid scale interval [{lo}, {hi}]"
                )));
            }
        }
        if let PcaComponents::Fixed(0) = self.preprocess.pca_components {
            return Err(QencError::Config(
                "pca_components must be at least 1".into(),
            ));
        }
        if self.preprocess.max_components == 0 {
            return Err(QencError::Config(
                "max_components must be at least 1".into(),
            ));
        }
        if let InputSpec::Synthetic {
            rows,
            churn_rate,
            seed,
        } = &self.input
        {
            self.synth_config(*rows, *churn_rate, *seed).validate()?;
        }
        for e in &self.embeddings {
            for &s in &self.strategies {
                for g in e.granularities_for(s) {
                    s.check_granularity(g).map_err(|_| {
                        QencError::Config(format!(
                            "strategy {s} is incompatible with {} at {g} granularity",
                            e.kind
                        ))
                    })?;
                    e.spec(g).validate()?;
                }
            }
        }
        self.encode
            .strategy
            .check_granularity(self.encode.spec().granularity)?;
        Ok(())
    }

    pub(crate) fn synth_config(
        &self,
        rows: usize,
        churn_rate: f64,
        seed: Option<u64>,
    ) -> SynthConfig {
        SynthConfig {
            rows,
            churn_rate,
            seed: seed.unwrap_or(self.seed),
        }
    }

    /// Grid in report order: embeddings as configured, then strategies in
    /// canonical order, cell before row.
    pub fn grid(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for (i, e) in self.embeddings.iter().enumerate() {
            for s in StrategyKind::ALL {
                if !self.strategies.contains(&s) {
                    continue;
                }
                for g in e.granularities_for(s) {
                    cells.push(GridCell {
                        embedding_index: i,
                        spec: e.spec(g),
                        strategy: s,
                    });
                }
            }
        }
        cells
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// the output directory cleared so relocating reports keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn config_error(e: serde_json::Error) -> QencError {
    QencError::Config(e.to_string())
}

/// Copies missing parent objects of an override path from the defaults, so
/// `input.rows=600` keeps the default input's other fields.
fn fill_parents(doc: &mut Value, defaults: &Value, assignment: &str) {
    let Some((path, _)) = assignment.split_once('=') else {
        return;
    };
    let segments: Vec<&str> = path.trim().split('.').collect();
    let (mut at, mut def) = (doc, defaults);
    for seg in &segments[..segments.len().saturating_sub(1)] {
        let (Value::Object(map), Some(d)) = (at, def.get(*seg)) else {
            return;
        };
        let slot = map.entry((*seg).to_string()).or_insert(Value::Null);
        if slot.is_null() {
            *slot = d.clone();
        }
        at = slot;
        def = d;
    }
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise; numeric segments index
/// arrays, and missing objects are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| QencError::Config(format!("override '{assignment}' is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(QencError::Config(format!(
            "override '{assignment}' has an empty key"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let mut at = doc;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if at.is_null() {
            *at = Value::Object(Default::default());
        }
        at = match at {
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), value);
                    return Ok(());
                }
                map.entry((*seg).to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| {
                    QencError::Config(format!("override '{path}': '{seg}' is not an array index"))
                })?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    QencError::Config(format!(
                        "override '{path}': index {idx} out of range ({len})"
                    ))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(QencError::Config(format!(
                    "override '{path}': '{seg}' is not inside an object"
                )))
            }
        };
    }
    unreachable!("loop returns on the last segment")
}
