use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Name of the label column in processed-matrix CSV files.
pub const LABEL_COLUMN: &str = "__label__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical(Vec<String>),
    Numeric(Vec<f64>),
}

impl ColumnData {
    pub fn column_type(&self) -> ColumnType {
        match self {
            ColumnData::Categorical(_) => ColumnType::Categorical,
            ColumnData::Numeric(_) => ColumnType::Numeric,
        }
    }

    fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Declared column types; columns not listed are inferred.
pub type Schema = HashMap<String, ColumnType>;

/// Typed table as read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    row_count: usize,
    dropped_rows: usize,
}

impl RawTable {
    pub fn from_columns(columns: Vec<Column>) -> Result<Self> {
        let row_count = columns.first().map_or(0, |c| c.data.len());
        if let Some(c) = columns.iter().find(|c| c.data.len() != row_count) {
            return Err(QencError::Validation(format!(
                "column '{}' has {} rows, expected {row_count}",
                c.name,
                c.data.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(c) = columns.iter().find(|c| !seen.insert(c.name.as_str())) {
            return Err(QencError::Validation(format!(
                "duplicate column '{}'",
                c.name
            )));
        }
        Ok(Self {
            columns,
            row_count,
            dropped_rows: 0,
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    /// Rows removed during validation because a numeric cell was blank.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Removes the named columns; unknown names are ignored and returned.
    pub fn drop_columns(&mut self, names: &[String]) -> Vec<String> {
        let missing = names
            .iter()
            .filter(|n| self.column(n).is_none())
            .cloned()
            .collect();
        self.columns.retain(|c| !names.contains(&c.name));
        missing
    }
}

fn is_blank(s: &str) -> bool {
    s.trim().is_empty()
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a UTF-8, comma-separated file with a header row.
///
/// Columns are typed from `schema` when declared, otherwise inferred as
/// numeric when every non-blank cell parses as a finite number. Rows with a
/// blank numeric cell are dropped and counted.
pub fn load_csv(path: &Path, schema: Option<&Schema>) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| QencError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(QencError::Validation(format!(
            "malformed header in {}: empty column name",
            path.display()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(QencError::Validation(format!(
            "malformed header in {}: duplicate column '{dup}'",
            path.display()
        )));
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record?;
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_string());
        }
    }
    let n = cells.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(QencError::Validation(format!(
            "{} has no data rows",
            path.display()
        )));
    }

    let mut types = Vec::with_capacity(headers.len());
    for (name, col) in headers.iter().zip(&cells) {
        let declared = schema.and_then(|s| s.get(name)).copied();
        let ty = match declared {
            Some(ColumnType::Numeric) => {
                let bad: Vec<usize> = col
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| !is_blank(s) && parse_number(s).is_none())
                    .map(|(i, _)| i + 1)
                    .collect();
                if !bad.is_empty() {
                    let shown: Vec<String> = bad.iter().take(10).map(usize::to_string).collect();
                    return Err(QencError::Validation(format!(
                        "numeric column '{name}' has unparseable values in data rows {}{}",
                        shown.join(", "),
                        if bad.len() > 10 { ", ..." } else { "" }
                    )));
                }
                ColumnType::Numeric
            }
            Some(t) => t,
            None => {
                let non_blank = col.iter().filter(|s| !is_blank(s));
                let mut any = false;
                let mut all_numeric = true;
                for s in non_blank {
                    any = true;
                    if parse_number(s).is_none() {
                        all_numeric = false;
                        break;
                    }
                }
                if any && all_numeric {
                    ColumnType::Numeric
                } else {
                    ColumnType::Categorical
                }
            }
        };
        types.push(ty);
    }

    let keep: Vec<bool> = (0..n)
        .map(|i| {
            types
                .iter()
                .zip(&cells)
                .all(|(t, col)| *t != ColumnType::Numeric || !is_blank(&col[i]))
        })
        .collect();
    let dropped = keep.iter().filter(|k| !**k).count();
    if dropped == n {
        return Err(QencError::Validation(format!(
            "every row of {} has a blank numeric cell",
            path.display()
        )));
    }

    let columns = headers
        .into_iter()
        .zip(cells)
        .zip(types)
        .map(|((name, col), ty)| {
            let kept = col
                .into_iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(s, _)| s);
            let data = match ty {
                ColumnType::Numeric => ColumnData::Numeric(
                    kept.map(|s| parse_number(&s).expect("validated above"))
                        .collect(),
                ),
                ColumnType::Categorical => {
                    ColumnData::Categorical(kept.map(|s| s.trim().to_string()).collect())
                }
            };
            Column { name, data }
        })
        .collect();
    let mut table = RawTable::from_columns(columns)?;
    table.dropped_rows = dropped;
    Ok(table)
}

/// Writes a processed matrix; labels (if any) go in a trailing `__label__` column.
pub fn write_matrix_csv(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| QencError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = matrix.column_names().iter().map(String::as_str).collect();
    if matrix.labels().is_some() {
        header.push(LABEL_COLUMN);
    }
    w.write_record(&header)?;
    for i in 0..matrix.n_rows() {
        let mut rec: Vec<String> = matrix.row(i).iter().map(|v| format!("{v}")).collect();
        if let Some(l) = matrix.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| QencError::io(path, e))?;
    Ok(())
}

/// Reads an all-numeric matrix CSV. A `__label__` column (or `label_column`,
/// when given) becomes the labels; categorical label text is mapped to
/// integers in first-appearance order.
pub fn read_matrix_csv(path: &Path, label_column: Option<&str>) -> Result<FeatureMatrix> {
    let table = load_csv(path, None)?;
    let label_name = label_column.unwrap_or(LABEL_COLUMN);
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut labels = None;
    for c in table.columns() {
        if c.name == label_name {
            labels = Some(encode_labels(&c.data).0);
            continue;
        }
        match &c.data {
            ColumnData::Numeric(v) => {
                names.push(c.name.clone());
                columns.push(v.clone());
            }
            ColumnData::Categorical(_) => {
                return Err(QencError::Validation(format!(
                    "column '{}' is not numeric; preprocess the table first",
                    c.name
                )))
            }
        }
    }
    if label_column.is_some() && labels.is_none() {
        return Err(QencError::Validation(format!(
            "label column '{label_name}' not found"
        )));
    }
    let n = table.row_count();
    let d = columns.len();
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        values.extend(columns.iter().map(|c| c[i]));
    }
    FeatureMatrix::new(values, n, d, labels, names)
}

/// Maps label cells to integers in first-appearance order; returns the
/// integer labels and the original text per integer.
pub fn encode_labels(data: &ColumnData) -> (Vec<u32>, Vec<String>) {
    let text: Vec<String> = match data {
        ColumnData::Categorical(v) => v.clone(),
        ColumnData::Numeric(v) => v.iter().map(|x| format!("{x}")).collect(),
    };
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut levels = Vec::new();
    let labels = text
        .into_iter()
        .map(|s| {
            *index.entry(s.clone()).or_insert_with(|| {
                levels.push(s);
                (levels.len() - 1) as u32
            })
        })
        .collect();
    (labels, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn toy_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.csv",
            "color,size\nred,1.5\nblue,2\n\"green, light\",3\n",
        );
        let t = load_csv(&p, None).unwrap();
        assert_eq!(t.row_count(), 3);
        assert_eq!(t.columns()[0].data.column_type(), ColumnType::Categorical);
        assert_eq!(
            t.columns()[1].data,
            ColumnData::Numeric(vec![1.5, 2.0, 3.0])
        );
        assert_eq!(
            t.columns()[0].data,
            ColumnData::Categorical(vec!["red".into(), "blue".into(), "green, light".into()])
        );
    }

    #[test]
    fn blank_numeric_drops_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "a,b\nx,1\ny, \nz,3\n");
        let t = load_csv(&p, None).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.dropped_rows(), 1);
    }

    #[test]
    fn declared_numeric_reports_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "a,b\nx,1\ny,oops\nz,nan\n");
        let schema: Schema = [("b".to_string(), ColumnType::Numeric)]
            .into_iter()
            .collect();
        let err = load_csv(&p, Some(&schema)).unwrap_err().to_string();
        assert!(err.contains("rows 2, 3"), "{err}");
        // inferred: becomes categorical instead
        let t = load_csv(&p, None).unwrap();
        assert_eq!(t.columns()[1].data.column_type(), ColumnType::Categorical);
    }

    #[test]
    fn structural_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_csv(&dir.path().join("missing.csv"), None),
            Err(QencError::Io { .. })
        ));
        let p = write(&dir, "h.csv", "a,,c\n1,2,3\n");
        assert!(load_csv(&p, None)
            .unwrap_err()
            .to_string()
            .contains("header"));
        let p = write(&dir, "d.csv", "a,a\n1,2\n");
        assert!(load_csv(&p, None)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let p = write(&dir, "e.csv", "a,b\n");
        assert!(load_csv(&p, None)
            .unwrap_err()
            .to_string()
            .contains("no data rows"));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = FeatureMatrix::from_rows(&[vec![0.1, -2.5], vec![1e-17, 3.0]], Some(vec![1, 0]))
            .unwrap();
        let p = dir.path().join("m.csv");
        write_matrix_csv(&m, &p).unwrap();
        let back = read_matrix_csv(&p, None).unwrap();
        assert_eq!(back.values(), m.values());
        assert_eq!(back.column_names(), m.column_names());
        // labels re-encoded by first appearance: "1" -> 0, "0" -> 1
        assert_eq!(back.labels(), Some(&[0u32, 1][..]));
    }

    #[test]
    fn label_text_first_appearance() {
        let (l, levels) = encode_labels(&ColumnData::Categorical(
            ["No", "Yes", "No", "Maybe"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ));
        assert_eq!(l, vec![0, 1, 0, 2]);
        assert_eq!(levels, vec!["No", "Yes", "Maybe"]);
    }
}
