use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::report::{render_grid, ReportData};
use crate::classifiers::ClassifierKind;
use crate::error::{QencError, Result};
use crate::types::{Granularity, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyDelta {
    pub classifier: ClassifierKind,
    /// Strategy accuracy minus the direct-encoding accuracy.
    pub delta: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub embedding: String,
    pub granularity: Granularity,
    pub strategy: StrategyKind,
    pub embed_calls: u64,
    pub baseline_calls: u64,
    /// Baseline calls divided by strategy calls.
    pub call_ratio: f64,
    /// `1 - calls / baseline_calls`.
    pub call_reduction: f64,
    pub deltas: Vec<AccuracyDelta>,
}

impl DeltaRow {
    pub fn flagged(&self) -> bool {
        self.deltas.iter().any(|d| d.flagged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub bound: f64,
    pub rows: Vec<DeltaRow>,
}

/// Compares every successful non-DE row with the DE row of the same
/// embedding and granularity.
pub fn compare_strategies(report: &ReportData) -> Result<DeltaSummary> {
    let bound = report.environment.accuracy_bound;
    let mut rows = Vec::new();
    for r in report
        .rows
        .iter()
        .filter(|r| r.is_ok() && r.strategy != StrategyKind::Direct)
    {
        let base = report
            .rows
            .iter()
            .find(|b| {
                b.strategy == StrategyKind::Direct
                    && b.embedding == r.embedding
                    && b.granularity == r.granularity
            })
            .filter(|b| b.is_ok())
            .ok_or_else(|| {
                QencError::Validation(format!(
                    "missing DE baseline for {} at {} granularity",
                    r.embedding, r.granularity
                ))
            })?;
        let deltas = r
            .accuracies
            .iter()
            .filter_map(|a| {
                base.accuracy(a.classifier).map(|b| {
                    let delta = a.accuracy - b;
                    AccuracyDelta {
                        classifier: a.classifier,
                        delta,
                        flagged: delta.abs() > bound,
                    }
                })
            })
            .collect();
        let (calls, base_calls) = (r.embed_calls, base.embed_calls);
        rows.push(DeltaRow {
            embedding: r.embedding.clone(),
            granularity: r.granularity,
            strategy: r.strategy,
            embed_calls: calls,
            baseline_calls: base_calls,
            call_ratio: if calls == 0 {
                f64::INFINITY
            } else {
                base_calls as f64 / calls as f64
            },
            call_reduction: if base_calls == 0 {
                0.0
            } else {
                1.0 - calls as f64 / base_calls as f64
            },
            deltas,
        });
    }
    Ok(DeltaSummary { bound, rows })
}

impl DeltaSummary {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(DeltaRow::flagged)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            out.push_str("accuracy deltas vs DE: none (no redundancy-aware strategy rows)\n");
            return out;
        }
        let _ = writeln!(out, "accuracy deltas vs DE (bound {}):", self.bound);
        let kinds: Vec<ClassifierKind> = self
            .rows
            .iter()
            .flat_map(|r| r.deltas.iter().map(|d| d.classifier))
            .fold(Vec::new(), |mut acc, k| {
                if !acc.contains(&k) {
                    acc.push(k);
                }
                acc
            });
        let mut header: Vec<String> = [
            "embedding",
            "granularity",
            "strategy",
            "calls",
            "de_calls",
            "reduction",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(kinds.iter().map(|k| format!("d_{k}")));
        header.push("flag".into());
        let mut table = vec![header];
        for r in &self.rows {
            let mut cells = vec![
                r.embedding.clone(),
                r.granularity.to_string(),
                r.strategy.to_string(),
                r.embed_calls.to_string(),
                r.baseline_calls.to_string(),
                format!("{:.1}%", 100.0 * r.call_reduction),
            ];
            for k in &kinds {
                cells.push(
                    r.deltas
                        .iter()
                        .find(|d| d.classifier == *k)
                        .map(|d| format!("{:+.4}", d.delta))
                        .unwrap_or_else(|| "-".into()),
                );
            }
            cells.push(if r.flagged() { "!" } else { "" }.into());
            table.push(cells);
        }
        render_grid(&mut out, &table, 3);
        out
    }
}
