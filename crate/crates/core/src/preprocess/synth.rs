//! Seeded generator for a telecom-churn-shaped table: a customer id, sixteen
//! categorical and three numeric features, and a binary `Churn` target whose
//! classes differ in tenure, contract type, internet service and payment
//! method.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::table::{Column, ColumnData, ColumnType, RawTable};
use crate::error::{QencError, Result};

pub const DEFAULT_ROWS: usize = 7043;
pub const DEFAULT_POSITIVES: usize = 1869;
pub const TARGET: &str = "Churn";
pub const ID_COLUMN: &str = "customerID";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_rows")]
    pub rows: usize,
    /// Fraction of positive (churn) rows; the count is rounded.
    #[serde(default = "default_churn_rate")]
    pub churn_rate: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_rows() -> usize {
    DEFAULT_ROWS
}

fn default_churn_rate() -> f64 {
    DEFAULT_POSITIVES as f64 / DEFAULT_ROWS as f64
}

fn default_seed() -> u64 {
    7
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: default_rows(),
            churn_rate: default_churn_rate(),
            seed: default_seed(),
        }
    }
}

impl SynthConfig {
    pub fn positives(&self) -> usize {
        (self.rows as f64 * self.churn_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 {
            return Err(QencError::Config(
                "synthetic table needs at least 2 rows".into(),
            ));
        }
        if !(self.churn_rate > 0.0 && self.churn_rate < 1.0) {
            return Err(QencError::Config(format!(
                "churn rate must lie in (0, 1), got {}",
                self.churn_rate
            )));
        }
        let p = self.positives();
        if p == 0 || p == self.rows {
            return Err(QencError::Config("churn rate leaves a class empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnManifest {
    pub name: String,
    pub kind: ColumnType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub rows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub target: String,
    pub id_column: String,
    /// Feature columns (id and target excluded), in file order.
    pub features: Vec<ColumnManifest>,
    /// Width after one-hot expansion with the id column dropped.
    pub one_hot_width: usize,
}

const NO_INTERNET: &str = "No internet service";
const NO_PHONE: &str = "No phone service";

fn pick<'a>(rng: &mut ChaCha8Rng, options: &[(&'a str, f64)]) -> &'a str {
    let mut u: f64 = rng.random();
    for (name, p) in options {
        if u < *p {
            return name;
        }
        u -= p;
    }
    options[options.len() - 1].0
}

fn yes_no(rng: &mut ChaCha8Rng, p_yes: f64) -> &'static str {
    if rng.random_bool(p_yes) {
        "Yes"
    } else {
        "No"
    }
}

fn categorical_levels() -> Vec<(&'static str, Vec<&'static str>)> {
    let yn = vec!["No", "Yes"];
    vec![
        ("gender", vec!["Female", "Male"]),
        ("SeniorCitizen", yn.clone()),
        ("Partner", yn.clone()),
        ("Dependents", yn.clone()),
        ("PhoneService", yn.clone()),
        ("MultipleLines", vec!["No", NO_PHONE, "Yes"]),
        ("InternetService", vec!["DSL", "Fiber optic", "No"]),
        ("OnlineSecurity", yn.clone()),
        ("OnlineBackup", yn.clone()),
        ("DeviceProtection", yn.clone()),
        ("TechSupport", yn.clone()),
        ("StreamingTV", vec!["No", NO_INTERNET, "Yes"]),
        ("StreamingMovies", vec!["No", NO_INTERNET, "Yes"]),
        ("Contract", vec!["Month-to-month", "One year", "Two year"]),
        ("PaperlessBilling", yn),
        (
            "PaymentMethod",
            vec![
                "Bank transfer (automatic)",
                "Credit card (automatic)",
                "Electronic check",
                "Mailed check",
            ],
        ),
    ]
}

const NUMERIC: [&str; 3] = ["tenure", "MonthlyCharges", "TotalCharges"];

pub fn manifest_for(config: &SynthConfig) -> SynthManifest {
    let cats = categorical_levels();
    let mut features: Vec<ColumnManifest> = Vec::new();
    let mut width = 0;
    for (name, levels) in &cats {
        width += levels.len();
        features.push(ColumnManifest {
            name: (*name).into(),
            kind: ColumnType::Categorical,
            levels: Some(levels.iter().map(|s| (*s).to_string()).collect()),
        });
        if *name == "Dependents" {
            features.push(ColumnManifest {
                name: NUMERIC[0].into(),
                kind: ColumnType::Numeric,
                levels: None,
            });
            width += 1;
        }
    }
    for name in &NUMERIC[1..] {
        features.push(ColumnManifest {
            name: (*name).into(),
            kind: ColumnType::Numeric,
            levels: None,
        });
        width += 1;
    }
    let positives = config.positives();
    SynthManifest {
        config: *config,
        rows: config.rows,
        positives,
        negatives: config.rows - positives,
        target: TARGET.into(),
        id_column: ID_COLUMN.into(),
        features,
        one_hot_width: width,
    }
}

/// Builds the table in memory: id, features (manifest order), target.
pub fn generate_churn(config: &SynthConfig) -> Result<(RawTable, SynthManifest)> {
    config.validate()?;
    let manifest = manifest_for(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut churn: Vec<bool> = (0..config.rows).map(|i| i < manifest.positives).collect();
    churn.shuffle(&mut rng);

    let n = config.rows;
    let mut text: Vec<Vec<String>> = vec![Vec::with_capacity(n); manifest.features.len() + 2];
    let mut numbers: [Vec<f64>; 3] = Default::default();
    let short_tenure: Exp<f64> = Exp::new(1.0 / 14.0).expect("positive rate");
    let charge_noise: Normal<f64> = Normal::new(0.0, 4.0).expect("positive sd");

    for (i, &y) in churn.iter().enumerate() {
        let letters: String = (0..5)
            .map(|_| rng.random_range(b'A'..=b'Z') as char)
            .collect();
        let mut row: Vec<&str> = Vec::with_capacity(16);
        row.push(if rng.random_bool(0.5) {
            "Female"
        } else {
            "Male"
        });
        row.push(yes_no(&mut rng, if y { 0.25 } else { 0.13 }));
        row.push(yes_no(&mut rng, if y { 0.36 } else { 0.53 }));
        row.push(yes_no(&mut rng, if y { 0.17 } else { 0.34 }));
        let tenure = if y {
            (1.0 + short_tenure.sample(&mut rng).floor()).min(72.0)
        } else {
            f64::from(rng.random_range(0..=72u32))
        };
        let phone = rng.random_bool(0.9);
        row.push(if phone { "Yes" } else { "No" });
        row.push(if phone {
            yes_no(&mut rng, if y { 0.45 } else { 0.41 })
        } else {
            NO_PHONE
        });
        let internet = if y {
            pick(
                &mut rng,
                &[("Fiber optic", 0.69), ("DSL", 0.25), ("No", 0.06)],
            )
        } else {
            pick(
                &mut rng,
                &[("Fiber optic", 0.35), ("DSL", 0.38), ("No", 0.27)],
            )
        };
        row.push(internet);
        let has_internet = internet != "No";
        let mut add_ons = 0.0;
        for _ in 0..4 {
            let v = if has_internet {
                yes_no(&mut rng, if y { 0.16 } else { 0.33 })
            } else {
                "No"
            };
            add_ons += f64::from(u8::from(v == "Yes"));
            row.push(v);
        }
        for _ in 0..2 {
            let v = if has_internet {
                yes_no(&mut rng, 0.45)
            } else {
                NO_INTERNET
            };
            add_ons += f64::from(u8::from(v == "Yes"));
            row.push(v);
        }
        row.push(if y {
            pick(
                &mut rng,
                &[
                    ("Month-to-month", 0.89),
                    ("One year", 0.09),
                    ("Two year", 0.02),
                ],
            )
        } else {
            pick(
                &mut rng,
                &[
                    ("Month-to-month", 0.43),
                    ("One year", 0.25),
                    ("Two year", 0.32),
                ],
            )
        });
        row.push(yes_no(&mut rng, if y { 0.75 } else { 0.54 }));
        let pay_weights: [f64; 3] = if y {
            [0.57, 0.17, 0.13]
        } else {
            [0.25, 0.25, 0.25]
        };
        row.push(pick(
            &mut rng,
            &[
                ("Electronic check", pay_weights[0]),
                ("Mailed check", pay_weights[1]),
                ("Bank transfer (automatic)", pay_weights[2]),
                ("Credit card (automatic)", 1.0),
            ],
        ));

        let base = match internet {
            "Fiber optic" => 70.0,
            "DSL" => 45.0,
            _ => 20.0,
        };
        let monthly: f64 =
            (base + if phone { 5.0 } else { 0.0 } + 5.0 * add_ons + charge_noise.sample(&mut rng))
                .max(18.25);
        let monthly = (monthly * 100.0).round() / 100.0;
        let total =
            ((tenure.max(1.0) * monthly * rng.random_range(0.9..1.1)) * 100.0).round() / 100.0;

        text[0].push(format!("{i:04}-{letters}"));
        let mut slot = 1;
        for (k, v) in row.into_iter().enumerate() {
            text[slot].push(v.to_string());
            slot += 1;
            if k == 3 {
                slot += 1; // tenure column
            }
        }
        numbers[0].push(tenure);
        numbers[1].push(monthly);
        numbers[2].push(total);
        text.last_mut()
            .expect("target slot")
            .push(if y { "Yes" } else { "No" }.into());
    }

    let mut numbers = numbers.into_iter();
    let mut columns = vec![Column {
        name: ID_COLUMN.into(),
        data: ColumnData::Categorical(std::mem::take(&mut text[0])),
    }];
    for (k, f) in manifest.features.iter().enumerate() {
        let data = match f.kind {
            ColumnType::Numeric => ColumnData::Numeric(numbers.next().expect("numeric column")),
            ColumnType::Categorical => ColumnData::Categorical(std::mem::take(&mut text[k + 1])),
        };
        columns.push(Column {
            name: f.name.clone(),
            data,
        });
    }
    columns.push(Column {
        name: TARGET.into(),
        data: ColumnData::Categorical(text.pop().expect("target column")),
    });
    Ok((RawTable::from_columns(columns)?, manifest))
}

pub fn write_table_csv(table: &RawTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| QencError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(table.columns().iter().map(|c| c.name.as_str()))?;
    for i in 0..table.row_count() {
        w.write_record(table.columns().iter().map(|c| match &c.data {
            ColumnData::Categorical(v) => v[i].clone(),
            ColumnData::Numeric(v) => format!("{}", v[i]),
        }))?;
    }
    w.flush().map_err(|e| QencError::io(path, e))?;
    Ok(())
}

/// Writes `churn.csv` and `churn.manifest.json` into `dir`.
pub fn write_synthetic(dir: &Path, config: &SynthConfig) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| QencError::io(dir, e))?;
    let (table, manifest) = generate_churn(config)?;
    let csv_path = dir.join("churn.csv");
    let manifest_path = dir.join("churn.manifest.json");
    write_table_csv(&table, &csv_path)?;
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&manifest_path, json).map_err(|e| QencError::io(&manifest_path, e))?;
    Ok((csv_path, manifest_path))
}
