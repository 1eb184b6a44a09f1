//! Shared domain types: the feature matrix, value-identity keys, and the
//! embedding/strategy configuration model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QencError, Result};

/// Dense `n x d` real matrix with optional integer class labels.
///
/// Values are stored row-major. Construction validates that every value is
/// finite and that labels (when present) have one entry per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Option<Vec<u32>>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        rows: usize,
        cols: usize,
        labels: Option<Vec<u32>>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(QencError::Validation(format!(
                "matrix has {} values, expected {rows} x {cols}",
                values.len()
            )));
        }
        if column_names.len() != cols {
            return Err(QencError::Validation(format!(
                "{} column names for {cols} columns",
                column_names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(QencError::Validation(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != rows {
                return Err(QencError::Validation(format!(
                    "{} labels for {rows} rows",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            values,
            rows,
            cols,
            labels,
            column_names,
        })
    }

    /// Builds a matrix from nested rows with generated column names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<u32>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(QencError::Validation(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        let values = rows.iter().flatten().copied().collect();
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        Self::new(values, rows.len(), cols, labels, names)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Labels or a configuration error naming the caller's requirement.
    pub fn require_labels(&self, what: &str) -> Result<&[u32]> {
        self.labels()
            .ok_or_else(|| QencError::Config(format!("{what} requires class labels")))
    }

    pub fn with_labels(mut self, labels: Option<Vec<u32>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.rows {
                return Err(QencError::Validation(format!(
                    "{} labels for {} rows",
                    l.len(),
                    self.rows
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// New matrix holding the given rows (in the given order), labels included.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        FeatureMatrix {
            values,
            rows: indices.len(),
            cols: self.cols,
            labels,
            column_names: self.column_names.clone(),
        }
    }

    /// New matrix keeping only the given columns (in the given order).
    pub fn select_columns(&self, keep: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            let row = self.row(i);
            values.extend(keep.iter().map(|&j| row[j]));
        }
        FeatureMatrix {
            values,
            rows: self.rows,
            cols: keep.len(),
            labels: self.labels.clone(),
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
        }
    }

    /// Same shape and labels, values replaced by `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<FeatureMatrix> {
        let cols = self.cols;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k / cols, k % cols, v))
            .collect();
        FeatureMatrix::new(
            values,
            self.rows,
            cols,
            self.labels.clone(),
            self.column_names.clone(),
        )
    }
}

/// How real values are canonicalized before being compared for identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KeyPolicy {
    /// Bit-pattern identity after mapping `-0.0` to `+0.0`.
    #[default]
    Exact,
    /// Values are rounded to the given number of decimals first.
    Round { decimals: u32 },
}

/// Hashable identity of a value (one word) or a row (one word per cell).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(Box<[u64]>);

impl DedupKey {
    pub fn canonical_bits(&self) -> &[u64] {
        &self.0
    }
}

fn canonical_bits(value: f64, policy: KeyPolicy) -> Result<u64> {
    if !value.is_finite() {
        return Err(QencError::Validation(format!(
            "cannot key non-finite value {value}"
        )));
    }
    let v = match policy {
        KeyPolicy::Exact => value,
        KeyPolicy::Round { decimals } => {
            let scale = 10f64.powi(decimals as i32);
            let rounded = (value * scale).round() / scale;
            if rounded.is_finite() {
                rounded
            } else {
                value
            }
        }
    };
    // -0.0 == 0.0 numerically; fold onto one bit pattern.
    let v = if v == 0.0 { 0.0 } else { v };
    Ok(v.to_bits())
}

pub fn dedup_key(value: f64, policy: KeyPolicy) -> Result<DedupKey> {
    Ok(DedupKey(Box::new([canonical_bits(value, policy)?])))
}

pub fn row_key(row: &[f64], policy: KeyPolicy) -> Result<DedupKey> {
    let bits = row
        .iter()
        .map(|&v| canonical_bits(v, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(DedupKey(bits.into_boxed_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Basis,
    Angle,
    Iqp,
    Qaoa,
    Displacement,
    Squeezing,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 6] = [
        EmbeddingKind::Basis,
        EmbeddingKind::Angle,
        EmbeddingKind::Iqp,
        EmbeddingKind::Qaoa,
        EmbeddingKind::Displacement,
        EmbeddingKind::Squeezing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmbeddingKind::Basis => "basis",
            EmbeddingKind::Angle => "angle",
            EmbeddingKind::Iqp => "iqp",
            EmbeddingKind::Qaoa => "qaoa",
            EmbeddingKind::Displacement => "displacement",
            EmbeddingKind::Squeezing => "squeezing",
        }
    }

    /// Continuous-variable (Gaussian) rather than qubit embedding.
    pub fn is_gaussian(self) -> bool {
        matches!(self, EmbeddingKind::Displacement | EmbeddingKind::Squeezing)
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmbeddingKind {
    type Err = QencError;

    fn from_str(s: &str) -> Result<Self> {
        EmbeddingKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| QencError::Config(format!("unknown embedding kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Cell,
    Row,
}

impl Granularity {
    pub fn name(self) -> &'static str {
        match self {
            Granularity::Cell => "cell",
            Granularity::Row => "row",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Granularity {
    type Err = QencError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cell" => Ok(Granularity::Cell),
            "row" => Ok(Granularity::Row),
            _ => Err(QencError::Config(format!("unknown granularity '{s}'"))),
        }
    }
}

fn default_layers() -> usize {
    1
}

fn default_embedding_seed() -> u64 {
    7
}

/// Which embedding to run and how it is applied to the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    pub granularity: Granularity,
    /// Circuit depth for IQP and QAOA.
    #[serde(default = "default_layers")]
    pub layers: usize,
    /// Fixed QAOA angles; empty means "draw from `rng_seed`".
    #[serde(default)]
    pub qaoa_params: Vec<f64>,
    #[serde(default = "default_embedding_seed")]
    pub rng_seed: u64,
}

impl EmbeddingSpec {
    pub fn new(kind: EmbeddingKind, granularity: Granularity) -> Self {
        Self {
            kind,
            granularity,
            layers: default_layers(),
            qaoa_params: Vec::new(),
            rng_seed: default_embedding_seed(),
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn with_qaoa_params(mut self, params: Vec<f64>) -> Self {
        self.qaoa_params = params;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(QencError::Config("layers must be at least 1".into()));
        }
        if let Some(bad) = self.qaoa_params.iter().find(|p| !p.is_finite()) {
            return Err(QencError::Config(format!(
                "non-finite QAOA parameter {bad}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "DE")]
    Direct,
    #[serde(rename = "ILS")]
    InstanceLevel,
    #[serde(rename = "GDS")]
    GlobalDiscrete,
    #[serde(rename = "CC_ILS")]
    ClassInstanceLevel,
    #[serde(rename = "CC_GDS")]
    ClassGlobalDiscrete,
}

impl StrategyKind {
    /// Report order.
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Direct,
        StrategyKind::InstanceLevel,
        StrategyKind::GlobalDiscrete,
        StrategyKind::ClassInstanceLevel,
        StrategyKind::ClassGlobalDiscrete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Direct => "DE",
            StrategyKind::InstanceLevel => "ILS",
            StrategyKind::GlobalDiscrete => "GDS",
            StrategyKind::ClassInstanceLevel => "CC_ILS",
            StrategyKind::ClassGlobalDiscrete => "CC_GDS",
        }
    }

    pub fn is_class_conditional(self) -> bool {
        matches!(
            self,
            StrategyKind::ClassInstanceLevel | StrategyKind::ClassGlobalDiscrete
        )
    }

    /// The only granularity the strategy is defined over, if restricted.
    pub fn required_granularity(self) -> Option<Granularity> {
        match self {
            StrategyKind::Direct => None,
            StrategyKind::InstanceLevel | StrategyKind::ClassInstanceLevel => {
                Some(Granularity::Row)
            }
            StrategyKind::GlobalDiscrete | StrategyKind::ClassGlobalDiscrete => {
                Some(Granularity::Cell)
            }
        }
    }

    pub fn check_granularity(self, granularity: Granularity) -> Result<()> {
        match self.required_granularity() {
            Some(required) if required != granularity => Err(QencError::Config(format!(
                "strategy {} is defined over {} granularity, got {}",
                self.name(),
                required,
                granularity
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = QencError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| QencError::Config(format!("unknown strategy '{s}'")))
    }
}

/// Cost accounting for one encoding run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub embed_calls: u64,
    pub cache_hits: u64,
    pub unique_keys: u64,
    pub wall_seconds: f64,
    pub cells_total: u64,
    pub rows_total: u64,
}

impl CacheStats {
    /// Total encode requests issued (one per cell or per row).
    pub fn requests(&self) -> u64 {
        self.embed_calls + self.cache_hits
    }

    pub(crate) fn absorb(&mut self, other: &CacheStats) {
        self.embed_calls += other.embed_calls;
        self.cache_hits += other.cache_hits;
        self.unique_keys += other.unique_keys;
        self.wall_seconds += other.wall_seconds;
        self.cells_total += other.cells_total;
        self.rows_total += other.rows_total;
    }
}
