use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridCell, InputSpec, PcaComponents, PcaMode};
use super::report::{
    Accuracy, BenchReport, ClassCount, ClassifierEntry, Environment, ReportData, ReportRow,
    TimingRow,
};
use crate::classifiers::accuracy;
use crate::error::Result;
use crate::preprocess::{
    self, detect_elbow, drop_correlated, generate_churn, load_csv, one_hot, pca_fit, pca_transform,
    read_matrix_csv, undersample_balance, vif_filter, Binarizer, ColumnType, MinMaxScaler,
    RawTable, Schema,
};
use crate::strategies::{EncodedDataset, Encoder, EncoderOptions};
use crate::types::{EmbeddingKind, FeatureMatrix};

/// What the preparation stages did, recorded in every report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepSummary {
    pub input_rows: usize,
    pub dropped_blank_rows: usize,
    pub expanded_width: usize,
    pub dropped_correlated: Vec<String>,
    pub dropped_vif: Vec<String>,
    pub rows_after_balance: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// False when training rows double as evaluation rows.
    pub held_out: bool,
    pub elbow_index: Option<usize>,
    pub pca_components: Option<usize>,
    pub feature_columns: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub summary: PrepSummary,
}

fn table_to_matrix(
    mut table: RawTable,
    target: &str,
    config: &ExperimentConfig,
    summary: &mut PrepSummary,
) -> Result<FeatureMatrix> {
    summary.dropped_blank_rows = table.dropped_rows();
    for missing in table.drop_columns(&config.preprocess.drop_columns) {
        summary
            .warnings
            .push(format!("drop column '{missing}' not present"));
    }
    let oh = one_hot(&table, target)?;
    summary.warnings.extend(oh.warnings);
    Ok(oh.matrix)
}

/// Loads the configured input and returns a labelled numeric matrix.
pub fn load_input(config: &ExperimentConfig, summary: &mut PrepSummary) -> Result<FeatureMatrix> {
    let matrix = match &config.input {
        InputSpec::Csv {
            path,
            target,
            numeric_columns,
        } => {
            let schema: Schema = numeric_columns
                .iter()
                .map(|c| (c.clone(), ColumnType::Numeric))
                .collect();
            let table = load_csv(path, Some(&schema))?;
            summary.input_rows = table.row_count() + table.dropped_rows();
            table_to_matrix(table, target, config, summary)?
        }
        InputSpec::Synthetic {
            rows,
            churn_rate,
            seed,
        } => {
            let (table, _) = generate_churn(&config.synth_config(*rows, *churn_rate, *seed))?;
            summary.input_rows = table.row_count();
            table_to_matrix(table, preprocess::synth::TARGET, config, summary)?
        }
        InputSpec::Matrix { path, label_column } => {
            let m = read_matrix_csv(path, label_column.as_deref())?;
            m.require_labels("an experiment input matrix")?;
            summary.input_rows = m.n_rows();
            m
        }
    };
    summary.expanded_width = matrix.n_cols();
    Ok(matrix)
}

/// Runs every preparation stage. With `split`, fitted stages (PCA,
/// scaling) see only the training part.
pub fn prepare(config: &ExperimentConfig, split: bool) -> Result<PreparedData> {
    let p = &config.preprocess;
    let mut summary = PrepSummary::default();
    let mut m = load_input(config, &mut summary)?;
    if let Some(t) = p.correlation_threshold {
        let f = drop_correlated(&m, t)?;
        summary.dropped_correlated = f.dropped;
        m = f.matrix;
    }
    if let Some(t) = p.vif_threshold {
        let f = vif_filter(&m, t)?;
        summary.dropped_vif = f.dropped;
        m = f.matrix;
    }
    if p.balance {
        m = undersample_balance(&m, config.seed)?;
    }
    summary.rows_after_balance = m.n_rows();

    let (mut train, mut test) = match (split, config.train_fraction) {
        (true, Some(f)) => {
            summary.held_out = true;
            crate::classifiers::train_test_split(&m, f, config.seed)?
        }
        _ => (m.clone(), m),
    };

    let k = match p.pca_components {
        PcaComponents::Mode(PcaMode::None) => None,
        PcaComponents::Fixed(k) => Some(k),
        PcaComponents::Mode(PcaMode::Elbow) => {
            let full = pca_fit(&train, train.n_rows().min(train.n_cols()))?;
            let ratios = &full.explained_variance_ratio;
            let keep = if ratios.len() >= 3 {
                let e = detect_elbow(ratios)?;
                summary.elbow_index = Some(e);
                e + 1
            } else {
                ratios.len()
            };
            Some(keep.min(p.max_components))
        }
    };
    if let Some(k) = k {
        let model = pca_fit(&train, k)?;
        train = pca_transform(&model, &train)?;
        test = pca_transform(&model, &test)?;
        summary.pca_components = Some(k);
    }
    if let Some([lo, hi]) = p.scale_interval {
        let scaler = MinMaxScaler::fit(&train, (lo, hi))?;
        train = scaler.transform(&train)?;
        test = scaler.transform(&test)?;
    }
    summary.train_rows = train.n_rows();
    summary.test_rows = test.n_rows();
    summary.feature_columns = train.column_names().to_vec();
    Ok(PreparedData {
        train,
        test,
        summary,
    })
}

pub fn encoder_options(config: &ExperimentConfig) -> EncoderOptions {
    EncoderOptions {
        policy: config.key_policy,
        parallel: config.parallel_embedding,
        per_call_delay: (config.per_call_delay_us > 0)
            .then(|| Duration::from_micros(config.per_call_delay_us)),
        class_conditioner: None,
    }
}

/// Encodes a prepared matrix with the `encode` section of the config.
/// Basis encoding binarizes at the column medians first.
pub fn encode_matrix(config: &ExperimentConfig, matrix: &FeatureMatrix) -> Result<EncodedDataset> {
    let spec = config.encode.spec();
    let input = if spec.kind == EmbeddingKind::Basis {
        Binarizer::fit_median(matrix)?.transform(matrix)?
    } else {
        matrix.clone()
    };
    Encoder::new(spec, config.encode.strategy, encoder_options(config))?.fit_encode(&input)
}

/// Report label of each configured embedding: the kind name, suffixed with
/// the list position when a kind occurs more than once.
pub(crate) fn embedding_labels(config: &ExperimentConfig) -> Vec<String> {
    config
        .embeddings
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let dup = config
                .embeddings
                .iter()
                .filter(|o| o.kind == e.kind)
                .count()
                > 1;
            if dup {
                format!("{}#{i}", e.kind)
            } else {
                e.kind.to_string()
            }
        })
        .collect()
}

struct CellOutcome {
    row: ReportRow,
    timing: TimingRow,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn run_cell(
    config: &ExperimentConfig,
    label: &str,
    cell: &GridCell,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
) -> CellOutcome {
    let mut row = ReportRow::empty(label, cell.spec.granularity, cell.strategy);
    let mut timing = TimingRow {
        embedding: label.to_string(),
        granularity: cell.spec.granularity,
        strategy: cell.strategy,
        median_seconds: 0.0,
        runs: Vec::new(),
        test_seconds: 0.0,
    };
    let result = (|| -> Result<()> {
        let mut encoded = None;
        let mut encoder = None;
        for _ in 0..config.repeat {
            let mut enc = Encoder::new(cell.spec.clone(), cell.strategy, encoder_options(config))?;
            let e = enc.fit_encode(train)?;
            timing.runs.push(e.stats.wall_seconds);
            encoded = Some(e);
            encoder = Some(enc);
        }
        let (encoded, mut encoder) = (encoded.expect("repeat >= 1"), encoder.expect("repeat >= 1"));
        timing.median_seconds = median(&timing.runs);
        let s = &encoded.stats;
        row.embed_calls = s.embed_calls;
        row.cache_hits = s.cache_hits;
        row.unique_keys = s.unique_keys;
        row.cells = s.cells_total;
        row.rows = s.rows_total;
        row.class_stats = encoded
            .class_stats
            .iter()
            .map(|c| ClassCount {
                class: c.class,
                embed_calls: c.stats.embed_calls,
                cache_hits: c.stats.cache_hits,
                unique_keys: c.stats.unique_keys,
            })
            .collect();

        let encoded_test = encoder.transform(test)?;
        timing.test_seconds = encoded_test.stats.wall_seconds;
        row.test_embed_calls = encoded_test.stats.embed_calls;
        row.test_cache_hits = encoded_test.stats.cache_hits;
        row.test_fallback_rows = encoded_test.fallback_rows as u64;

        let train_f = encoded.features(&config.readout)?;
        let test_f = encoded_test.features(&config.readout)?;
        row.feature_width = train_f.n_cols();
        let train_y = train.require_labels("classifier training")?;
        let test_y = test.require_labels("classifier evaluation")?;
        for spec in &config.classifiers {
            let model = spec.fit(&train_f, train_y, config.seed)?;
            let pred = model.predict(&test_f)?;
            row.accuracies.push(Accuracy {
                classifier: spec.kind(),
                accuracy: accuracy(&pred.labels, test_y)?,
            });
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.fail(e.to_string());
    }
    CellOutcome { row, timing }
}

/// Runs the configured grid: prepares data once, then encodes, reads out and
/// classifies per cell. A failing cell is recorded with its reason and the
/// remaining cells still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<BenchReport> {
    config.validate()?;
    let prepared = prepare(config, true)?;
    run_prepared(config, &prepared)
}

/// Grid execution on already prepared data.
pub fn run_prepared(config: &ExperimentConfig, prepared: &PreparedData) -> Result<BenchReport> {
    let labels = embedding_labels(config);
    // basis encoding needs bits: thresholds fitted on the training part
    let needs_bits = config
        .embeddings
        .iter()
        .any(|e| e.kind == EmbeddingKind::Basis);
    let bits = if needs_bits {
        let b = Binarizer::fit_median(&prepared.train)?;
        Some((b.transform(&prepared.train)?, b.transform(&prepared.test)?))
    } else {
        None
    };
    let grid = config.grid();
    let run = |cell: &GridCell| {
        let (train, test) = match (&bits, config.embeddings[cell.embedding_index].kind) {
            (Some((tr, te)), EmbeddingKind::Basis) => (tr, te),
            _ => (&prepared.train, &prepared.test),
        };
        run_cell(config, &labels[cell.embedding_index], cell, train, test)
    };
    let outcomes: Vec<CellOutcome> = if config.parallel_cells {
        grid.par_iter().map(run).collect()
    } else {
        grid.iter().map(run).collect()
    };

    let environment = Environment {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        repeat: config.repeat,
        key_policy: config.key_policy,
        per_call_delay_us: config.per_call_delay_us,
        parallel_cells: config.parallel_cells,
        accuracy_bound: config.accuracy_bound,
        readout: config.readout,
        classifiers: config
            .classifiers
            .iter()
            .map(|c| ClassifierEntry {
                kind: c.kind(),
                params: c.describe(),
            })
            .collect(),
        preprocessing: prepared.summary.clone(),
    };
    let (rows, timing): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.row, o.timing)).unzip();
    let unix_time = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(BenchReport {
        data: ReportData { environment, rows },
        timing,
        timings_comparable: !config.parallel_cells,
        unix_time,
    })
}
