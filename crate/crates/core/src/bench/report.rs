use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::compare::{compare_strategies, DeltaSummary};
use super::pipeline::PrepSummary;
use crate::classifiers::ClassifierKind;
use crate::error::{QencError, Result};
use crate::readout::ReadoutSpec;
use crate::types::{Granularity, KeyPolicy, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    pub kind: ClassifierKind,
    pub params: String,
}

/// Run-invariant description of an experiment. Timing and wall-clock time
/// are kept out so that report files are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub repeat: usize,
    pub key_policy: KeyPolicy,
    pub per_call_delay_us: u64,
    pub parallel_cells: bool,
    pub accuracy_bound: f64,
    pub readout: ReadoutSpec,
    pub classifiers: Vec<ClassifierEntry>,
    pub preprocessing: PrepSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCount {
    pub class: u32,
    pub embed_calls: u64,
    pub cache_hits: u64,
    pub unique_keys: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accuracy {
    pub classifier: ClassifierKind,
    pub accuracy: f64,
}

/// One grid cell. Counts describe the training-set encoding; `test_*`
/// fields the held-out encoding through the fitted caches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub embedding: String,
    pub granularity: Granularity,
    pub strategy: StrategyKind,
    /// Set when the cell failed; counts and accuracies are then partial.
    pub error: Option<String>,
    pub embed_calls: u64,
    pub cache_hits: u64,
    pub unique_keys: u64,
    pub cells: u64,
    pub rows: u64,
    pub test_embed_calls: u64,
    pub test_cache_hits: u64,
    /// Test rows encoded through the class-agnostic fallback.
    pub test_fallback_rows: u64,
    pub class_stats: Vec<ClassCount>,
    pub feature_width: usize,
    pub accuracies: Vec<Accuracy>,
}

impl ReportRow {
    pub(crate) fn empty(embedding: &str, granularity: Granularity, strategy: StrategyKind) -> Self {
        Self {
            embedding: embedding.to_string(),
            granularity,
            strategy,
            error: None,
            embed_calls: 0,
            cache_hits: 0,
            unique_keys: 0,
            cells: 0,
            rows: 0,
            test_embed_calls: 0,
            test_cache_hits: 0,
            test_fallback_rows: 0,
            class_stats: Vec::new(),
            feature_width: 0,
            accuracies: Vec::new(),
        }
    }

    pub(crate) fn fail(&mut self, reason: String) {
        self.error = Some(reason);
        self.accuracies.clear();
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn accuracy(&self, kind: ClassifierKind) -> Option<f64> {
        self.accuracies
            .iter()
            .find(|a| a.classifier == kind)
            .map(|a| a.accuracy)
    }
}

/// Deterministic part of a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub environment: Environment,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingRow {
    pub embedding: String,
    pub granularity: Granularity,
    pub strategy: StrategyKind,
    /// Median wall time of the training-set encoding over all repeats.
    pub median_seconds: f64,
    pub runs: Vec<f64>,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub data: ReportData,
    pub timing: Vec<TimingRow>,
    /// False when grid cells ran concurrently.
    pub timings_comparable: bool,
    pub unix_time: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Table,
    Csv,
    Jsonl,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] =
        [ReportFormat::Table, ReportFormat::Csv, ReportFormat::Jsonl];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Table => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Jsonl => "jsonl",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Table => "table",
            ReportFormat::Csv => "csv",
            ReportFormat::Jsonl => "jsonl",
        }
    }

    /// Guesses the format of an existing report from its extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(ReportFormat::Csv),
            Some("jsonl") => Ok(ReportFormat::Jsonl),
            Some("txt") => Ok(ReportFormat::Table),
            _ => Err(QencError::Validation(format!(
                "cannot tell the report format of {}",
                path.display()
            ))),
        }
    }
}

impl FromStr for ReportFormat {
    type Err = QencError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" | "txt" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "json-lines" => Ok(ReportFormat::Jsonl),
            _ => Err(QencError::Config(format!("unknown report format '{s}'"))),
        }
    }
}

const CSV_ENV_PREFIX: &str = "# environment: ";

fn class_stats_text(stats: &[ClassCount]) -> String {
    stats
        .iter()
        .map(|c| {
            format!(
                "{}:{}:{}:{}",
                c.class, c.embed_calls, c.cache_hits, c.unique_keys
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_class_stats(text: &str) -> Result<Vec<ClassCount>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|part| {
            let f: Vec<&str> = part.split(':').collect();
            let num = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| QencError::Validation(format!("bad class statistics '{part}'")))
            };
            if f.len() != 4 {
                return Err(QencError::Validation(format!(
                    "bad class statistics '{part}'"
                )));
            }
            Ok(ClassCount {
                class: num(f[0])? as u32,
                embed_calls: num(f[1])?,
                cache_hits: num(f[2])?,
                unique_keys: num(f[3])?,
            })
        })
        .collect()
}

const CSV_FIXED: [&str; 14] = [
    "embedding",
    "granularity",
    "strategy",
    "status",
    "embed_calls",
    "cache_hits",
    "unique_keys",
    "cells",
    "rows",
    "test_embed_calls",
    "test_cache_hits",
    "test_fallback_rows",
    "class_stats",
    "feature_width",
];

impl ReportData {
    fn classifier_kinds(&self) -> Vec<ClassifierKind> {
        self.environment
            .classifiers
            .iter()
            .map(|c| c.kind)
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(CSV_ENV_PREFIX);
        out.push_str(&serde_json::to_string(&self.environment)?);
        out.push('\n');
        let kinds = self.classifier_kinds();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = CSV_FIXED.iter().map(|s| s.to_string()).collect();
        header.extend(kinds.iter().map(|k| format!("acc_{k}")));
        header.push("error".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.embedding.clone(),
                r.granularity.to_string(),
                r.strategy.to_string(),
                if r.is_ok() { "ok" } else { "failed" }.to_string(),
                r.embed_calls.to_string(),
                r.cache_hits.to_string(),
                r.unique_keys.to_string(),
                r.cells.to_string(),
                r.rows.to_string(),
                r.test_embed_calls.to_string(),
                r.test_cache_hits.to_string(),
                r.test_fallback_rows.to_string(),
                class_stats_text(&r.class_stats),
                r.feature_width.to_string(),
            ];
            rec.extend(
                kinds
                    .iter()
                    .map(|&k| r.accuracy(k).map(|a| a.to_string()).unwrap_or_default()),
            );
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| QencError::Validation(format!("csv buffer: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (first, rest) = text
            .split_once('\n')
            .ok_or_else(|| QencError::Validation("empty report".into()))?;
        let env_json = first
            .strip_prefix(CSV_ENV_PREFIX)
            .ok_or_else(|| QencError::Validation("report lacks the environment line".into()))?;
        let environment: Environment = serde_json::from_str(env_json)?;
        let kinds: Vec<ClassifierKind> = environment.classifiers.iter().map(|c| c.kind).collect();
        let mut reader = csv::Reader::from_reader(rest.as_bytes());
        let header = reader.headers()?.clone();
        let expected = CSV_FIXED.len() + kinds.len() + 1;
        if header.len() != expected {
            return Err(QencError::Validation(format!(
                "report header has {} columns, expected {expected}",
                header.len()
            )));
        }
        let bad = |what: &str| QencError::Validation(format!("bad report field {what}"));
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let u = |i: usize| -> Result<u64> { rec[i].parse().map_err(|_| bad(CSV_FIXED[i])) };
            let error = rec[expected - 1].to_string();
            let status = &rec[3];
            let mut accuracies = Vec::new();
            for (j, &k) in kinds.iter().enumerate() {
                let cell = &rec[CSV_FIXED.len() + j];
                if !cell.is_empty() {
                    accuracies.push(Accuracy {
                        classifier: k,
                        accuracy: cell.parse().map_err(|_| bad(k.name()))?,
                    });
                }
            }
            rows.push(ReportRow {
                embedding: rec[0].to_string(),
                granularity: rec[1].parse()?,
                strategy: rec[2].parse()?,
                error: (status != "ok").then_some(error),
                embed_calls: u(4)?,
                cache_hits: u(5)?,
                unique_keys: u(6)?,
                cells: u(7)?,
                rows: u(8)?,
                test_embed_calls: u(9)?,
                test_cache_hits: u(10)?,
                test_fallback_rows: u(11)?,
                class_stats: parse_class_stats(&rec[12])?,
                feature_width: u(13)? as usize,
                accuracies,
            });
        }
        Ok(Self { environment, rows })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&JsonLine::Environment(self.environment.clone()))?;
        out.push('\n');
        for r in &self.rows {
            out.push_str(&serde_json::to_string(&JsonLine::Row(r.clone()))?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut environment = None;
        let mut rows = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                JsonLine::Environment(e) => {
                    if environment.replace(e).is_some() {
                        return Err(QencError::Validation(
                            "report has two environment lines".into(),
                        ));
                    }
                }
                JsonLine::Row(r) => rows.push(r),
            }
        }
        let environment = environment
            .ok_or_else(|| QencError::Validation("report lacks the environment line".into()))?;
        Ok(Self { environment, rows })
    }

    /// Plain-text table followed by the accuracy-delta summary.
    pub fn to_table(&self) -> String {
        let env = &self.environment;
        let kinds = self.classifier_kinds();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "config {}  seed {}  version {}",
            env.config_hash, env.seed, env.tool_version
        );
        let p = &env.preprocessing;
        let _ = writeln!(
            out,
            "data: {} input rows, {} expanded columns, {} after balancing, train {} / test {}{}",
            p.input_rows,
            p.expanded_width,
            p.rows_after_balance,
            p.train_rows,
            p.test_rows,
            if p.held_out { "" } else { " (same rows)" }
        );
        if let Some(k) = p.pca_components {
            let _ = writeln!(out, "pca: {k} components");
        }
        if env.per_call_delay_us > 0 {
            let _ = writeln!(
                out,
                "artificial delay: {} us per embed call",
                env.per_call_delay_us
            );
        }
        for c in &env.classifiers {
            let _ = writeln!(out, "classifier {}: {}", c.kind, c.params);
        }
        out.push('\n');

        let mut header: Vec<String> = [
            "embedding",
            "granularity",
            "strategy",
            "status",
            "embed_calls",
            "cache_hits",
            "unique",
            "test_calls",
            "fallback",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(kinds.iter().map(|k| format!("acc_{k}")));
        let mut table = vec![header];
        for r in &self.rows {
            let mut cells = vec![
                r.embedding.clone(),
                r.granularity.to_string(),
                r.strategy.to_string(),
                if r.is_ok() { "ok" } else { "failed" }.to_string(),
                r.embed_calls.to_string(),
                r.cache_hits.to_string(),
                r.unique_keys.to_string(),
                r.test_embed_calls.to_string(),
                r.test_fallback_rows.to_string(),
            ];
            cells.extend(kinds.iter().map(|&k| {
                r.accuracy(k)
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "-".into())
            }));
            table.push(cells);
        }
        render_grid(&mut out, &table, 3);

        let failures: Vec<&ReportRow> = self.rows.iter().filter(|r| !r.is_ok()).collect();
        if !failures.is_empty() {
            out.push_str("\nfailed cells:\n");
            for r in failures {
                let _ = writeln!(
                    out,
                    "  {} {} {}: {}",
                    r.embedding,
                    r.granularity,
                    r.strategy,
                    r.error.as_deref().unwrap_or_default()
                );
            }
        }

        out.push('\n');
        match compare_strategies(self) {
            Ok(summary) => out.push_str(&summary.to_table()),
            Err(e) => {
                let _ = writeln!(out, "no accuracy deltas: {e}");
            }
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Table => Ok(self.to_table()),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Jsonl => self.to_jsonl(),
        }
    }

    /// Reads a CSV or JSON-lines report back.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| QencError::io(path, e))?;
        match ReportFormat::from_path(path)? {
            ReportFormat::Csv => Self::from_csv(&text),
            ReportFormat::Jsonl => Self::from_jsonl(&text),
            ReportFormat::Table => Err(QencError::Validation(
                "text tables are not machine-readable; load the .csv or .jsonl report".into(),
            )),
        }
    }

    pub fn deltas(&self) -> Result<DeltaSummary> {
        compare_strategies(self)
    }
}

/// Left-aligns the first `text_cols` columns and right-aligns the rest.
pub(crate) fn render_grid(out: &mut String, table: &[Vec<String>], text_cols: usize) {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| {
            table
                .iter()
                .filter_map(|r| r.get(j))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j < text_cols {
                    format!("{c:<w$}", w = widths[j])
                } else {
                    format!("{c:>w$}", w = widths[j])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum JsonLine {
    Environment(Environment),
    Row(ReportRow),
}

impl BenchReport {
    /// Timing section as JSON lines: a header with the wall-clock time, then
    /// one line per grid cell.
    pub fn timing_jsonl(&self) -> Result<String> {
        let header = serde_json::json!({
            "config_hash": self.data.environment.config_hash,
            "unix_time": self.unix_time,
            "timings_comparable": self.timings_comparable,
            "per_call_delay_us": self.data.environment.per_call_delay_us,
        });
        let mut out = header.to_string();
        out.push('\n');
        for t in &self.timing {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Writes `<hash>.<ext>` for every requested format plus
/// `<hash>.timing.jsonl`; returns the written paths.
pub fn emit_report(
    report: &BenchReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| QencError::io(dir, e))?;
    let hash = &report.data.environment.config_hash;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(format!("{hash}.{}", f.extension()));
        fs::write(&path, report.data.render(f)?).map_err(|e| QencError::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join(format!("{hash}.timing.jsonl"));
    fs::write(&path, report.timing_jsonl()?).map_err(|e| QencError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
