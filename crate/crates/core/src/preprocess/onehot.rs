use std::collections::BTreeSet;

use super::table::{encode_labels, ColumnData, RawTable};
use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Result of one-hot expansion.
#[derive(Debug, Clone)]
pub struct OneHot {
    pub matrix: FeatureMatrix,
    /// Target text per integer label.
    pub label_levels: Vec<String>,
    pub warnings: Vec<String>,
}

/// Expands every categorical feature into one binary column per level
/// (levels in lexicographic order, named `column=level`); numeric columns
/// pass through. The target is mapped to `0, 1, ...` by first appearance.
pub fn one_hot(table: &RawTable, target: &str) -> Result<OneHot> {
    let target_col = table
        .column(target)
        .ok_or_else(|| QencError::Validation(format!("target column '{target}' not found")))?;
    let (labels, label_levels) = encode_labels(&target_col.data);
    if label_levels.len() < 2 {
        return Err(QencError::Validation(format!(
            "target column '{target}' has fewer than two levels"
        )));
    }

    let n = table.row_count();
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut warnings = Vec::new();
    for col in table.columns().iter().filter(|c| c.name != target) {
        match &col.data {
            ColumnData::Numeric(v) => {
                names.push(col.name.clone());
                columns.push(v.clone());
            }
            ColumnData::Categorical(v) => {
                let levels: BTreeSet<&str> = v.iter().map(String::as_str).collect();
                if levels.len() == 1 {
                    warnings.push(format!("categorical column '{}' is constant", col.name));
                }
                for level in levels {
                    names.push(format!("{}={level}", col.name));
                    columns.push(v.iter().map(|s| f64::from(u8::from(s == level))).collect());
                }
            }
        }
    }
    let d = columns.len();
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        values.extend(columns.iter().map(|c| c[i]));
    }
    Ok(OneHot {
        matrix: FeatureMatrix::new(values, n, d, Some(labels), names)?,
        label_levels,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::table::Column;

    fn cat(name: &str, v: &[&str]) -> Column {
        Column {
            name: name.into(),
            data: ColumnData::Categorical(v.iter().map(|s| s.to_string()).collect()),
        }
    }

    fn num(name: &str, v: &[f64]) -> Column {
        Column {
            name: name.into(),
            data: ColumnData::Numeric(v.to_vec()),
        }
    }

    #[test]
    fn three_levels_plus_numeric() {
        let t = RawTable::from_columns(vec![
            cat("c", &["b", "a", "c", "a"]),
            num("x", &[1.0, 2.0, 3.0, 4.0]),
            cat("y", &["No", "Yes", "No", "Yes"]),
        ])
        .unwrap();
        let oh = one_hot(&t, "y").unwrap();
        assert_eq!(oh.matrix.n_cols(), 4);
        assert_eq!(oh.matrix.column_names(), &["c=a", "c=b", "c=c", "x"]);
        assert_eq!(oh.matrix.row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(oh.matrix.labels(), Some(&[0u32, 1, 0, 1][..]));
        assert_eq!(oh.label_levels, vec!["No", "Yes"]);
        assert!(oh.warnings.is_empty());
    }

    #[test]
    fn numeric_only_passthrough() {
        let t = RawTable::from_columns(vec![
            num("x", &[1.0, 2.0]),
            num("z", &[5.0, 6.0]),
            cat("y", &["a", "b"]),
        ])
        .unwrap();
        let oh = one_hot(&t, "y").unwrap();
        assert_eq!(oh.matrix.values(), &[1.0, 5.0, 2.0, 6.0]);
    }

    #[test]
    fn constant_column_warns() {
        let t = RawTable::from_columns(vec![cat("k", &["u", "u"]), cat("y", &["a", "b"])]).unwrap();
        let oh = one_hot(&t, "y").unwrap();
        assert_eq!(oh.matrix.n_cols(), 1);
        assert_eq!(oh.warnings.len(), 1);
    }

    #[test]
    fn target_errors() {
        let t = RawTable::from_columns(vec![num("x", &[1.0, 2.0]), cat("y", &["a", "a"])]).unwrap();
        assert!(one_hot(&t, "y").is_err());
        assert!(one_hot(&t, "missing").is_err());
    }
}
