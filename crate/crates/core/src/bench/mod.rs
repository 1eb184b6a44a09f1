//! Experiment orchestration: data preparation, the (embedding x strategy)
//! grid, and deterministic report files.

mod compare;
mod config;
mod pipeline;
mod report;

pub use compare::{compare_strategies, AccuracyDelta, DeltaRow, DeltaSummary};
pub use config::{
    apply_override, EmbeddingEntry, EncodeConfig, ExperimentConfig, GridCell, InputSpec,
    PcaComponents, PcaMode, PreprocessConfig,
};
pub use pipeline::{
    encode_matrix, encoder_options, load_input, prepare, run_experiment, run_prepared, PrepSummary,
    PreparedData,
};
pub use report::{
    emit_report, Accuracy, BenchReport, ClassCount, ClassifierEntry, Environment, ReportData,
    ReportFormat, ReportRow, TimingRow,
};
