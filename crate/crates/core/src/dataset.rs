//! Tabular data model, CSV ingestion, categorical-domain cleaning and seeded sampling.
//!
//! A [`Dataset`] is a list of [`DataPoint`]s that conform to a [`FeatureSchema`].
//! Each column is either a legitimate feature (fed to the classifier), a
//! sensitive attribute (kept for auditing, never trained on) or the label.
//! Labels are remapped on ingestion so that the favorable outcome is always `1`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("cannot sample {requested} points from a dataset of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("unknown sensitive column `{0}`")]
    UnknownSensitive(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Legitimate,
    Sensitive,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    /// Integer-coded column; values outside `valid` are domain violations.
    Categorical {
        valid: BTreeSet<i64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl Column {
    pub fn continuous(name: &str, role: ColumnRole) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Continuous,
            role,
        }
    }

    pub fn categorical(name: &str, role: ColumnRole, valid: &[i64]) -> Self {
        Self {
            name: name.to_string(),
            kind: ColumnKind::Categorical {
                valid: valid.iter().copied().collect(),
            },
            role,
        }
    }

    fn admits(&self, value: i64) -> bool {
        match &self.kind {
            ColumnKind::Continuous => true,
            ColumnKind::Categorical { valid } => valid.contains(&value),
        }
    }
}

/// Ordered column list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let schema = Self { columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let count = |role: ColumnRole| self.columns.iter().filter(|c| c.role == role).count();
        if count(ColumnRole::Label) != 1 {
            return Err(DatasetError::Schema(
                "exactly one column must have role `label`".into(),
            ));
        }
        if count(ColumnRole::Sensitive) == 0 {
            return Err(DatasetError::Schema(
                "at least one column must have role `sensitive`".into(),
            ));
        }
        if count(ColumnRole::Legitimate) == 0 {
            return Err(DatasetError::Schema(
                "at least one column must have role `legitimate`".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for column in &self.columns {
            if !seen.insert(column.name.as_str()) {
                return Err(DatasetError::Schema(format!(
                    "duplicate column `{}`",
                    column.name
                )));
            }
            if let ColumnKind::Categorical { valid } = &column.kind {
                if valid.is_empty() {
                    return Err(DatasetError::Schema(format!(
                        "categorical column `{}` has an empty valid-values set",
                        column.name
                    )));
                }
            }
        }
        let label = self.label_column();
        match &label.kind {
            ColumnKind::Categorical { valid } if valid.len() == 2 => Ok(()),
            _ => Err(DatasetError::Schema(format!(
                "label column `{}` must be categorical with exactly two valid values",
                label.name
            ))),
        }
    }

    pub fn legitimate(&self) -> impl Iterator<Item = &Column> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Legitimate)
    }

    pub fn sensitive(&self) -> impl Iterator<Item = &Column> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Sensitive)
    }

    pub fn label_column(&self) -> &Column {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Label)
            .expect("validated schema has a label column")
    }

    pub fn legitimate_names(&self) -> Vec<String> {
        self.legitimate().map(|c| c.name.clone()).collect()
    }

    pub fn feature_count(&self) -> usize {
        self.legitimate().count()
    }

    pub fn sensitive_position(&self, name: &str) -> Option<usize> {
        self.sensitive().position(|c| c.name == name)
    }

    /// Schema of the two-feature synthetic datasets: `x1, x2, s, y`.
    pub fn synthetic() -> Self {
        Self {
            columns: vec![
                Column::continuous("x1", ColumnRole::Legitimate),
                Column::continuous("x2", ColumnRole::Legitimate),
                Column::categorical("s", ColumnRole::Sensitive, &[0, 1]),
                Column::categorical("y", ColumnRole::Label, &[0, 1]),
            ],
        }
    }
}

/// Maps raw label codes onto the internal favorable (1) / unfavorable (0) encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub favorable_raw: i64,
    pub unfavorable_raw: i64,
}

impl LabelMap {
    pub fn for_schema(schema: &FeatureSchema, favorable_raw: i64) -> Result<Self> {
        let label = schema.label_column();
        let ColumnKind::Categorical { valid } = &label.kind else {
            return Err(DatasetError::Schema(
                "label column must be categorical".into(),
            ));
        };
        if !valid.contains(&favorable_raw) {
            return Err(DatasetError::Schema(format!(
                "favorable label {favorable_raw} is not a valid value of `{}`",
                label.name
            )));
        }
        let unfavorable_raw = *valid
            .iter()
            .find(|&&v| v != favorable_raw)
            .ok_or_else(|| DatasetError::Schema("label needs two values".into()))?;
        Ok(Self {
            favorable_raw,
            unfavorable_raw,
        })
    }

    pub fn to_internal(&self, raw: i64) -> Option<u8> {
        if raw == self.favorable_raw {
            Some(1)
        } else if raw == self.unfavorable_raw {
            Some(0)
        } else {
            None
        }
    }

    pub fn to_raw(&self, internal: u8) -> i64 {
        if internal == 1 {
            self.favorable_raw
        } else {
            self.unfavorable_raw
        }
    }
}

/// One row: legitimate features `x`, sensitive codes (schema order) and label `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub sensitive: Vec<i64>,
    pub y: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub points: Vec<DataPoint>,
    pub favorable_label_raw: i64,
    /// Which sensitive column (index among sensitive columns) is audited.
    pub audited: usize,
}

/// Result of [`clean`]: the surviving dataset plus the number of removed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cleaned {
    pub dataset: Dataset,
    pub removed: usize,
}

/// Column-wise view used for training: features, audited sensitive codes and labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub features: Vec<Vec<f64>>,
    pub sensitive: Vec<i64>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label_map(&self) -> LabelMap {
        LabelMap::for_schema(&self.schema, self.favorable_label_raw)
            .expect("dataset schema was validated on construction")
    }

    pub fn audited_column(&self) -> &Column {
        self.schema
            .sensitive()
            .nth(self.audited)
            .expect("audited index within sensitive columns")
    }

    /// Select the audited sensitive attribute by column name.
    pub fn with_audited(mut self, name: &str) -> Result<Self> {
        self.audited = self
            .schema
            .sensitive_position(name)
            .ok_or_else(|| DatasetError::UnknownSensitive(name.to_string()))?;
        Ok(self)
    }

    pub fn sensitive_values(&self) -> Vec<i64> {
        self.points
            .iter()
            .map(|p| p.sensitive[self.audited])
            .collect()
    }

    /// Per-feature observed `(min, max)`; empty when there are no points.
    pub fn feature_extent(&self) -> Vec<(f64, f64)> {
        let Some(first) = self.points.first() else {
            return Vec::new();
        };
        let mut extent: Vec<(f64, f64)> = first.x.iter().map(|&v| (v, v)).collect();
        for point in &self.points[1..] {
            for (range, &v) in extent.iter_mut().zip(&point.x) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        extent
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Schema file layout: `favorable_label` plus a `[[columns]]` table array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub favorable_label: i64,
    pub columns: Vec<Column>,
}

impl SchemaFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let file: SchemaFile =
            toml::from_str(&text).map_err(|e| DatasetError::Schema(e.to_string()))?;
        FeatureSchema {
            columns: file.columns.clone(),
        }
        .validate()?;
        Ok(file)
    }

    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema {
            columns: self.columns.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes to toml")
    }
}

/// Read a headered CSV into a [`Dataset`].
///
/// The header must name every schema column exactly once (any order, no
/// extras). Blank cells are parse errors. Row numbers in diagnostics are
/// 1-based data rows (the header is row 0).
pub fn load_csv(path: &Path, schema: &FeatureSchema, favorable_label_raw: i64) -> Result<Dataset> {
    schema.validate()?;
    let labels = LabelMap::for_schema(schema, favorable_label_raw)?;
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader
        .headers()
        .map_err(|e| DatasetError::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let header: Vec<&str> = header.iter().collect();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for column in &schema.columns {
        let matches: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| **h == column.name)
            .map(|(i, _)| i)
            .collect();
        match matches.as_slice() {
            [single] => positions.push(*single),
            [] => {
                return Err(DatasetError::HeaderMismatch(format!(
                    "column `{}` missing from header",
                    column.name
                )))
            }
            _ => {
                return Err(DatasetError::HeaderMismatch(format!(
                    "column `{}` appears more than once",
                    column.name
                )))
            }
        }
    }
    if header.len() != schema.columns.len() {
        let extras: Vec<&str> = header
            .iter()
            .filter(|h| !schema.columns.iter().any(|c| c.name == **h))
            .copied()
            .collect();
        return Err(DatasetError::HeaderMismatch(format!(
            "header has columns not in the schema: {}",
            extras.join(", ")
        )));
    }

    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DatasetError::Csv {
            row,
            message: e.to_string(),
        })?;
        let mut x = Vec::new();
        let mut sensitive = Vec::new();
        let mut y = None;
        for (column, &pos) in schema.columns.iter().zip(&positions) {
            let cell = record.get(pos).unwrap_or("");
            let parse_err = |message: String| DatasetError::Parse {
                row,
                column: column.name.clone(),
                message,
            };
            if cell.is_empty() {
                return Err(parse_err("blank cell".into()));
            }
            match column.role {
                ColumnRole::Legitimate => {
                    let value: f64 = cell
                        .parse()
                        .map_err(|_| parse_err(format!("`{cell}` is not a number")))?;
                    if !value.is_finite() {
                        return Err(parse_err(format!("`{cell}` is not finite")));
                    }
                    if matches!(column.kind, ColumnKind::Categorical { .. }) && value.fract() != 0.0
                    {
                        return Err(parse_err(format!("`{cell}` is not an integer code")));
                    }
                    x.push(value);
                }
                ColumnRole::Sensitive => sensitive.push(parse_code(cell).map_err(parse_err)?),
                ColumnRole::Label => {
                    let raw = parse_code(cell).map_err(parse_err)?;
                    y = Some(labels.to_internal(raw).ok_or_else(|| {
                        parse_err(format!(
                            "label {raw} is neither {} nor {}",
                            labels.favorable_raw, labels.unfavorable_raw
                        ))
                    })?);
                }
            }
        }
        points.push(DataPoint {
            x,
            sensitive,
            y: y.expect("schema has a label column"),
        });
    }

    Ok(Dataset {
        schema: schema.clone(),
        points,
        favorable_label_raw,
        audited: 0,
    })
}

fn parse_code(cell: &str) -> std::result::Result<i64, String> {
    if let Ok(v) = cell.parse::<i64>() {
        return Ok(v);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v as i64),
        _ => Err(format!("`{cell}` is not an integer code")),
    }
}

/// Write a dataset as CSV in schema column order, with raw label codes.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let labels = dataset.label_map();
    let mut writer = csv::Writer::from_path(path).map_err(|e| DatasetError::Csv {
        row: 0,
        message: e.to_string(),
    })?;
    let header: Vec<&str> = dataset
        .schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    let csv_err = |e: csv::Error| DatasetError::Csv {
        row: 0,
        message: e.to_string(),
    };
    writer.write_record(&header).map_err(csv_err)?;
    for point in &dataset.points {
        let mut x = point.x.iter();
        let mut s = point.sensitive.iter();
        let record: Vec<String> = dataset
            .schema
            .columns
            .iter()
            .map(|c| match c.role {
                ColumnRole::Legitimate => x.next().expect("feature").to_string(),
                ColumnRole::Sensitive => s.next().expect("sensitive").to_string(),
                ColumnRole::Label => labels.to_raw(point.y).to_string(),
            })
            .collect();
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Drop every point holding a categorical code outside its column's valid set.
///
/// Continuous columns are never grounds for removal.
pub fn clean(dataset: &Dataset) -> Cleaned {
    let legit: Vec<&Column> = dataset.schema.legitimate().collect();
    let sens: Vec<&Column> = dataset.schema.sensitive().collect();
    let keep = |p: &DataPoint| {
        legit
            .iter()
            .zip(&p.x)
            .all(|(c, &v)| matches!(c.kind, ColumnKind::Continuous) || c.admits(v as i64))
            && sens.iter().zip(&p.sensitive).all(|(c, &v)| c.admits(v))
    };
    let points: Vec<DataPoint> = dataset.points.iter().filter(|p| keep(p)).cloned().collect();
    let removed = dataset.points.len() - points.len();
    Cleaned {
        dataset: Dataset {
            points,
            ..dataset.clone()
        },
        removed,
    }
}

/// Uniform sample of `n` points without replacement, in sampled order.
///
/// The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`, and
/// index selection uses `rand::seq::index::sample`, so a seed reproduces the
/// same sample on every platform.
pub fn sample(dataset: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > dataset.len() {
        return Err(DatasetError::SampleTooLarge {
            requested: n,
            available: dataset.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, dataset.len(), n);
    Ok(Dataset {
        points: picked.iter().map(|i| dataset.points[i].clone()).collect(),
        ..dataset.clone()
    })
}

pub fn split(dataset: &Dataset) -> Split {
    let mut out = Split::default();
    for point in &dataset.points {
        out.features.push(point.x.clone());
        out.sensitive.push(point.sensitive[dataset.audited]);
        out.labels.push(point.y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn taiwan_like_schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            Column::continuous("limit", ColumnRole::Legitimate),
            Column::categorical("sex", ColumnRole::Sensitive, &[1, 2]),
            Column::categorical("education", ColumnRole::Sensitive, &[1, 2, 3, 4]),
            Column::continuous("bill", ColumnRole::Legitimate),
            Column::categorical("default", ColumnRole::Label, &[0, 1]),
        ])
        .unwrap()
    }

    #[test]
    fn favorable_raw_zero_maps_to_one() {
        let f = write_tmp("limit,sex,education,bill,default\n1000,2,1,50,0\n2000,1,2,60,1\n");
        let ds = load_csv(f.path(), &taiwan_like_schema(), 0).unwrap();
        assert_eq!(ds.points[0].y, 1);
        assert_eq!(ds.points[1].y, 0);
    }

    #[test]
    fn empty_csv_with_header() {
        let f = write_tmp("x1,x2,s,y\n");
        let ds = load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn three_row_fixture_matches_hand_parse() {
        let f = write_tmp("x1,x2,s,y\n1.5,-2.25,0,1\n0,9,1,0\n3.125,4e2,1,1\n");
        let ds = load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap();
        let expected = [
            (vec![1.5, -2.25], 0, 1),
            (vec![0.0, 9.0], 1, 0),
            (vec![3.125, 400.0], 1, 1),
        ];
        assert_eq!(ds.len(), 3);
        for (p, (x, s, y)) in ds.points.iter().zip(expected) {
            assert_eq!(p.x, x);
            assert_eq!(p.sensitive, vec![s]);
            assert_eq!(p.y, y);
        }
    }

    #[test]
    fn header_columns_may_be_reordered() {
        let f = write_tmp("y,s,x2,x1\n1,0,2.0,1.0\n");
        let ds = load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap();
        assert_eq!(ds.points[0].x, vec![1.0, 2.0]);
    }

    #[test]
    fn load_errors_name_row_and_column() {
        let missing = load_csv(
            Path::new("/nonexistent/data.csv"),
            &FeatureSchema::synthetic(),
            1,
        );
        assert!(matches!(missing, Err(DatasetError::Io { .. })));

        let f = write_tmp("x1,x2,y\n1,2,0\n");
        let err = load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap_err();
        assert!(matches!(err, DatasetError::HeaderMismatch(_)), "{err}");

        let f = write_tmp("x1,x2,s,y,extra\n1,2,0,1,5\n");
        let err = load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap_err();
        assert!(matches!(err, DatasetError::HeaderMismatch(_)), "{err}");

        let f = write_tmp("x1,x2,s,y\n1,2,0,1\n1,abc,0,1\n");
        match load_csv(f.path(), &FeatureSchema::synthetic(), 1).unwrap_err() {
            DatasetError::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x2");
            }
            other => panic!("unexpected {other}"),
        }

        let f = write_tmp("x1,x2,s,y\n1,,0,1\n");
        assert!(matches!(
            load_csv(f.path(), &FeatureSchema::synthetic(), 1),
            Err(DatasetError::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn schema_invariants() {
        assert!(FeatureSchema::new(vec![
            Column::continuous("a", ColumnRole::Legitimate),
            Column::categorical("y", ColumnRole::Label, &[0, 1]),
        ])
        .is_err());
        assert!(FeatureSchema::new(vec![
            Column::continuous("a", ColumnRole::Legitimate),
            Column::categorical("s", ColumnRole::Sensitive, &[]),
            Column::categorical("y", ColumnRole::Label, &[0, 1]),
        ])
        .is_err());
        assert!(FeatureSchema::new(vec![
            Column::continuous("a", ColumnRole::Legitimate),
            Column::categorical("s", ColumnRole::Sensitive, &[0]),
            Column::categorical("y", ColumnRole::Label, &[0, 1]),
            Column::categorical("z", ColumnRole::Label, &[0, 1]),
        ])
        .is_err());
        assert!(FeatureSchema::new(FeatureSchema::synthetic().columns).is_ok());
    }

    #[test]
    fn schema_file_round_trips_through_toml() {
        let file = SchemaFile {
            favorable_label: 0,
            columns: taiwan_like_schema().columns,
        };
        let text = file.to_toml();
        let f = write_tmp(&text);
        let back = SchemaFile::load(f.path()).unwrap();
        assert_eq!(back.schema(), taiwan_like_schema());
        assert_eq!(back.favorable_label, 0);
    }

    #[test]
    fn clean_removes_out_of_domain_gender() {
        let f = write_tmp("limit,sex,education,bill,default\n1,1,1,1,0\n2,3,1,1,0\n3,2,1,1,1\n");
        let cleaned = clean(&load_csv(f.path(), &taiwan_like_schema(), 0).unwrap());
        assert_eq!(cleaned.removed, 1);
        let limits: Vec<f64> = cleaned.dataset.points.iter().map(|p| p.x[0]).collect();
        assert_eq!(limits, vec![1.0, 3.0]);
    }

    #[test]
    fn clean_without_violations_is_identity() {
        let f = write_tmp("limit,sex,education,bill,default\n1,1,1,1,0\n3,2,4,1,1\n");
        let ds = load_csv(f.path(), &taiwan_like_schema(), 0).unwrap();
        let cleaned = clean(&ds);
        assert_eq!(cleaned.removed, 0);
        assert_eq!(cleaned.dataset, ds);
    }

    #[test]
    fn clean_ten_row_fixture() {
        // Rows 2, 5 violate sex; rows 7, 9 violate education. Row 6 has a huge
        // continuous value, which is never grounds for removal.
        let csv = "limit,sex,education,bill,default\n\
                   1,1,1,10,0\n\
                   2,0,2,10,1\n\
                   3,2,3,10,0\n\
                   4,1,4,10,1\n\
                   5,3,1,10,0\n\
                   6,2,2,1e12,1\n\
                   7,1,0,10,0\n\
                   8,2,3,10,1\n\
                   9,1,6,10,0\n\
                   10,2,1,-5,1\n";
        let f = write_tmp(csv);
        let cleaned = clean(&load_csv(f.path(), &taiwan_like_schema(), 0).unwrap());
        assert_eq!(cleaned.removed, 4);
        let kept: Vec<f64> = cleaned.dataset.points.iter().map(|p| p.x[0]).collect();
        assert_eq!(kept, vec![1.0, 3.0, 4.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn clean_checks_categorical_legitimate_columns() {
        let schema = FeatureSchema::new(vec![
            Column::categorical("pay", ColumnRole::Legitimate, &[-1, 0, 1]),
            Column::categorical("s", ColumnRole::Sensitive, &[0, 1]),
            Column::categorical("y", ColumnRole::Label, &[0, 1]),
        ])
        .unwrap();
        let f = write_tmp("pay,s,y\n-1,0,1\n2,1,0\n0,1,1\n");
        let cleaned = clean(&load_csv(f.path(), &schema, 1).unwrap());
        assert_eq!(cleaned.removed, 1);
    }

    fn numbered(n: usize) -> Dataset {
        Dataset {
            schema: FeatureSchema::synthetic(),
            points: (0..n)
                .map(|i| DataPoint {
                    x: vec![i as f64, 0.0],
                    sensitive: vec![(i % 2) as i64],
                    y: (i % 3 == 0) as u8,
                })
                .collect(),
            favorable_label_raw: 1,
            audited: 0,
        }
    }

    #[test]
    fn exhaustive_sample_is_permutation() {
        let ds = numbered(50);
        let s = sample(&ds, 50, 9).unwrap();
        let mut ids: Vec<usize> = s.points.iter().map(|p| p.x[0] as usize).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn sample_is_seed_deterministic() {
        let ds = numbered(100);
        assert_eq!(sample(&ds, 10, 3).unwrap(), sample(&ds, 10, 3).unwrap());
        assert_ne!(sample(&ds, 10, 3).unwrap(), sample(&ds, 10, 4).unwrap());
    }

    #[test]
    fn thousand_from_thirty_thousand() {
        let ds = numbered(30_000);
        let s = sample(&ds, 1000, 2024).unwrap();
        let ids: BTreeSet<usize> = s.points.iter().map(|p| p.x[0] as usize).collect();
        assert_eq!(ids.len(), 1000);
    }

    #[test]
    fn oversized_sample_fails() {
        assert!(matches!(
            sample(&numbered(5), 6, 0),
            Err(DatasetError::SampleTooLarge {
                requested: 6,
                available: 5
            })
        ));
    }

    #[test]
    fn split_drops_sensitive_from_features() {
        let ds = Dataset {
            schema: FeatureSchema::synthetic(),
            points: vec![DataPoint {
                x: vec![1.25, 8.5],
                sensitive: vec![1],
                y: 0,
            }],
            favorable_label_raw: 1,
            audited: 0,
        };
        let split = split(&ds);
        assert_eq!(split.features, vec![vec![1.25, 8.5]]);
        assert_eq!(split.sensitive, vec![1]);
        assert_eq!(split.labels, vec![0]);

        let empty = super::split(&numbered(0));
        assert!(empty.features.is_empty() && empty.sensitive.is_empty() && empty.labels.is_empty());
    }

    #[test]
    fn audited_attribute_selection() {
        let f = write_tmp("limit,sex,education,bill,default\n1,2,4,1,0\n");
        let ds = load_csv(f.path(), &taiwan_like_schema(), 0)
            .unwrap()
            .with_audited("education")
            .unwrap();
        assert_eq!(split(&ds).sensitive, vec![4]);
        assert!(ds.clone().with_audited("age").is_err());
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(codes in prop::collection::vec((0i64..4, 0i64..6), 0..40)) {
            let ds = Dataset {
                schema: taiwan_like_schema(),
                points: codes.iter().map(|&(sex, edu)| DataPoint {
                    x: vec![1.0, 2.0],
                    sensitive: vec![sex, edu],
                    y: 1,
                }).collect(),
                favorable_label_raw: 0,
                audited: 0,
            };
            let once = clean(&ds).dataset;
            let twice = clean(&once);
            prop_assert_eq!(twice.removed, 0);
            prop_assert_eq!(twice.dataset, once);
        }

        #[test]
        fn sample_is_duplicate_free_subset(len in 0usize..200, frac in 0.0f64..=1.0, seed: u64) {
            let ds = numbered(len);
            let n = (len as f64 * frac) as usize;
            let s = sample(&ds, n, seed).unwrap();
            prop_assert_eq!(s.len(), n);
            let ids: BTreeSet<usize> = s.points.iter().map(|p| p.x[0] as usize).collect();
            prop_assert_eq!(ids.len(), n);
            prop_assert!(ids.iter().all(|&i| i < len));
        }

        #[test]
        fn split_preserves_alignment(len in 0usize..60) {
            let ds = numbered(len);
            let sp = split(&ds);
            for (i, p) in ds.points.iter().enumerate() {
                prop_assert_eq!(&sp.features[i], &p.x);
                prop_assert_eq!(sp.sensitive[i], p.sensitive[0]);
                prop_assert_eq!(sp.labels[i], p.y);
            }
        }

        #[test]
        fn label_map_is_involution(favorable in prop::bool::ANY) {
            let schema = FeatureSchema::synthetic();
            let fav = favorable as i64;
            let map = LabelMap::for_schema(&schema, fav).unwrap();
            for raw in [0i64, 1] {
                prop_assert_eq!(map.to_raw(map.to_internal(raw).unwrap()), raw);
            }
            prop_assert_eq!(map.to_internal(fav), Some(1));
        }
    }
}
