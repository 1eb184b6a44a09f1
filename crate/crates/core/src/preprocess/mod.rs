//! Classical data preparation: CSV ingestion, one-hot expansion,
//! multicollinearity filters, class balancing, scaling and PCA.

mod balance;
mod filters;
mod onehot;
mod pca;
mod scale;
pub mod synth;
mod table;

pub use balance::undersample_balance;
pub use filters::{
    correlation_matrix, drop_correlated, vif_filter, vif_scores, Correlation, Filtered,
    VIF_INFINITE,
};
pub use onehot::{one_hot, OneHot};
pub use pca::{detect_elbow, pca_fit, pca_transform, PcaModel};
pub use scale::{min_max_scale, Binarizer, MinMaxScaler};
pub use synth::{generate_churn, write_synthetic, SynthConfig, SynthManifest};
pub use table::{
    encode_labels, load_csv, read_matrix_csv, write_matrix_csv, Column, ColumnData, ColumnType,
    RawTable, Schema, LABEL_COLUMN,
};
