//! Adult Census Income (UCI `adult.data` layout) ingestion.
//!
//! Rows with a `?` in any field are dropped. Continuous columns are
//! standardized over the surviving rows with the population standard
//! deviation, categoricals are one-hot encoded against a frozen vocabulary
//! plus one trailing slot for unseen values, and a bias 1 is appended.
//! Feature order: continuous columns, categorical blocks, bias.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    pub vocabulary: Vec<String>,
}

impl CategoricalColumn {
    /// Vocabulary plus the reserved "other" slot.
    pub fn width(&self) -> usize {
        self.vocabulary.len() + 1
    }

    fn slot(&self, value: &str) -> usize {
        self.vocabulary
            .iter()
            .position(|v| v == value)
            .unwrap_or(self.vocabulary.len())
    }
}

/// File layout plus the frozen encoding of every used column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Column names in file order.
    pub columns: Vec<String>,
    pub continuous: Vec<String>,
    pub categorical: Vec<CategoricalColumn>,
    pub label_column: String,
    /// A label field starting with this prefix maps to 1.
    pub positive_prefix: String,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl FeatureSpec {
    pub fn uci_adult() -> Self {
        let cat = |name: &str, vocab: &[&str]| CategoricalColumn {
            name: name.into(),
            vocabulary: strings(vocab),
        };
        FeatureSpec {
            columns: strings(&[
                "age",
                "workclass",
                "fnlwgt",
                "education",
                "education-num",
                "marital-status",
                "occupation",
                "relationship",
                "race",
                "sex",
                "capital-gain",
                "capital-loss",
                "hours-per-week",
                "native-country",
                "income",
            ]),
            continuous: strings(&[
                "age",
                "fnlwgt",
                "education-num",
                "capital-gain",
                "capital-loss",
                "hours-per-week",
            ]),
            categorical: vec![
                cat(
                    "workclass",
                    &[
                        "Private",
                        "Self-emp-not-inc",
                        "Self-emp-inc",
                        "Federal-gov",
                        "Local-gov",
                        "State-gov",
                        "Without-pay",
                        "Never-worked",
                    ],
                ),
                cat(
                    "education",
                    &[
                        "Bachelors",
                        "Some-college",
                        "11th",
                        "HS-grad",
                        "Prof-school",
                        "Assoc-acdm",
                        "Assoc-voc",
                        "9th",
                        "7th-8th",
                        "12th",
                        "Masters",
                        "1st-4th",
                        "10th",
                        "Doctorate",
                        "5th-6th",
                        "Preschool",
                    ],
                ),
                cat(
                    "marital-status",
                    &[
                        "Married-civ-spouse",
                        "Divorced",
                        "Never-married",
                        "Separated",
                        "Widowed",
                        "Married-spouse-absent",
                        "Married-AF-spouse",
                    ],
                ),
                cat(
                    "occupation",
                    &[
                        "Tech-support",
                        "Craft-repair",
                        "Other-service",
                        "Sales",
                        "Exec-managerial",
                        "Prof-specialty",
                        "Handlers-cleaners",
                        "Machine-op-inspct",
                        "Adm-clerical",
                        "Farming-fishing",
                        "Transport-moving",
                        "Priv-house-serv",
                        "Protective-serv",
                        "Armed-Forces",
                    ],
                ),
                cat(
                    "relationship",
                    &[
                        "Wife",
                        "Own-child",
                        "Husband",
                        "Not-in-family",
                        "Other-relative",
                        "Unmarried",
                    ],
                ),
                cat(
                    "race",
                    &[
                        "White",
                        "Asian-Pac-Islander",
                        "Amer-Indian-Eskimo",
                        "Other",
                        "Black",
                    ],
                ),
                cat("sex", &["Female", "Male"]),
                cat(
                    "native-country",
                    &[
                        "United-States",
                        "Cambodia",
                        "England",
                        "Puerto-Rico",
                        "Canada",
                        "Germany",
                        "Outlying-US(Guam-USVI-etc)",
                        "India",
                        "Japan",
                        "Greece",
                        "South",
                        "China",
                        "Cuba",
                        "Iran",
                        "Honduras",
                        "Philippines",
                        "Italy",
                        "Poland",
                        "Jamaica",
                        "Vietnam",
                        "Mexico",
                        "Portugal",
                        "Ireland",
                        "France",
                        "Dominican-Republic",
                        "Laos",
                        "Ecuador",
                        "Taiwan",
                        "Haiti",
                        "Columbia",
                        "Hungary",
                        "Guatemala",
                        "Nicaragua",
                        "Scotland",
                        "Thailand",
                        "Yugoslavia",
                        "El-Salvador",
                        "Trinadad&Tobago",
                        "Peru",
                        "Hong",
                        "Holand-Netherlands",
                    ],
                ),
            ],
            label_column: "income".into(),
            positive_prefix: ">50K".into(),
        }
    }

    /// Encoded dimension, bias included.
    pub fn dim(&self) -> usize {
        self.continuous.len()
            + self
                .categorical
                .iter()
                .map(CategoricalColumn::width)
                .sum::<usize>()
            + 1
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            Error::InvalidConfig(format!("feature spec uses unknown column `{name}`"))
        })
    }
}

struct Layout {
    continuous: Vec<usize>,
    categorical: Vec<usize>,
    label: usize,
}

pub fn load_adult_csv(path: impl AsRef<Path>, spec: &FeatureSpec) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let layout = Layout {
        continuous: spec
            .continuous
            .iter()
            .map(|c| spec.position(c))
            .collect::<Result<_>>()?,
        categorical: spec
            .categorical
            .iter()
            .map(|c| spec.position(&c.name))
            .collect::<Result<_>>()?,
        label: spec.position(&spec.label_column)?,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let mut raw: Vec<f64> = Vec::new();
    let mut slots: Vec<usize> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() as usize;
        let more = reader
            .read_record(&mut record)
            .map_err(|e| Error::MalformedRow {
                line,
                reason: e.to_string(),
            })?;
        if !more {
            break;
        }
        let line = record.position().map_or(line, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != spec.columns.len() {
            return Err(Error::MalformedRow {
                line,
                reason: format!(
                    "expected {} fields, found {}",
                    spec.columns.len(),
                    record.len()
                ),
            });
        }
        if record.iter().any(|f| f == "?") {
            continue;
        }
        for (&col, name) in layout.continuous.iter().zip(&spec.continuous) {
            let v: f64 = record[col].parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("`{name}` is not numeric: {:?}", &record[col]),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("`{name}` is not finite"),
                });
            }
            raw.push(v);
        }
        for (&col, cat) in layout.categorical.iter().zip(&spec.categorical) {
            slots.push(cat.slot(&record[col]));
        }
        labels.push(record[layout.label].starts_with(&spec.positive_prefix) as u8);
    }
    if labels.is_empty() {
        return Err(Error::EmptyAfterFiltering);
    }

    let n = labels.len();
    let n_cont = spec.continuous.len();
    let cols = &raw;
    let column = |j: usize| (0..n).map(move |i| cols[i * n_cont + j]);
    let mean: Vec<f64> = (0..n_cont)
        .map(|j| column(j).sum::<f64>() / n as f64)
        .collect();
    // Constant columns are only centered.
    let std: Vec<f64> = (0..n_cont)
        .map(|j| {
            let var = column(j).map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let d = spec.dim();
    let n_cat = spec.categorical.len();
    let mut data = Dataset::new(d);
    let mut row = vec![0.0; d];
    for i in 0..n {
        row.fill(0.0);
        for j in 0..n_cont {
            row[j] = (raw[i * n_cont + j] - mean[j]) / std[j];
        }
        let mut offset = n_cont;
        for (j, cat) in spec.categorical.iter().enumerate() {
            row[offset + slots[i * n_cat + j]] = 1.0;
            offset += cat.width();
        }
        row[d - 1] = 1.0;
        data.push(&row, labels[i])?;
    }
    Ok(data)
}
