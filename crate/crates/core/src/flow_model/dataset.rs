use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::record::canonical_schema;
use super::taxonomy::{AttackGroup, LabelPolicy, N_CLASSES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LABEL_COLUMN: &str = "label";

/// Feature matrix with one attack group per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset<T> {
    pub schema: Vec<String>,
    pub rows: Array2<T>,
    pub labels: Vec<AttackGroup>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(schema: Vec<String>, rows: Array2<T>, labels: Vec<AttackGroup>) -> Result<Self> {
        if rows.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.nrows(),
                right: labels.len(),
            });
        }
        if rows.ncols() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} schema columns but rows have {}",
                schema.len(),
                rows.ncols()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemaMismatch("non-finite feature value".into()));
        }
        Ok(Self {
            schema,
            rows: rows.as_standard_layout().into_owned(),
            labels,
        })
    }

    pub fn from_rows(schema: Vec<String>, rows: Vec<Vec<T>>, labels: Vec<AttackGroup>) -> Result<Self> {
        let d = schema.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let flat: Vec<T> = rows.into_iter().flatten().collect();
        let n = flat.len() / d.max(1);
        let rows = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        Self::new(schema, rows, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.rows
            .row(i)
            .to_slice()
            .expect("rows are kept in standard layout")
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, T> {
        self.rows.column(j)
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for l in &self.labels {
            counts[l.code()] += 1;
        }
        counts
    }

    pub fn label_codes(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.code()).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: self.rows.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> LabeledDataset<U> {
        LabeledDataset {
            schema: self.schema.clone(),
            rows: self.rows.mapv(|v| U::of(v.as_f64())),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaMode {
    /// Columns must be exactly the canonical feature names plus `label`.
    #[default]
    Canonical,
    /// Any columns; those whose first value is numeric become features.
    Infer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub unknown_labels: usize,
}

pub fn load_dataset<T: Scalar>(
    path: impl AsRef<Path>,
    mode: SchemaMode,
    policy: LabelPolicy,
) -> Result<(LabeledDataset<T>, LoadReport)> {
    read_dataset(File::open(path)?, mode, policy)
}

pub fn read_dataset<T: Scalar, R: Read>(
    reader: R,
    mode: SchemaMode,
    policy: LabelPolicy,
) -> Result<(LabeledDataset<T>, LoadReport)> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or(Error::MissingLabelColumn)?;
    let mut records = csv.records();

    let mut feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx).collect();
    let mut first = None;
    match mode {
        SchemaMode::Canonical => {
            let names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();
            if names != canonical_schema() {
                return Err(Error::SchemaMismatch(format!(
                    "expected canonical columns, found {names:?}"
                )));
            }
        }
        SchemaMode::Infer => {
            // Peek one record to decide which columns are numeric.
            if let Some(rec) = records.next() {
                let rec = rec?;
                feature_cols.retain(|&i| rec.get(i).is_some_and(|v| v.trim().parse::<f64>().is_ok()));
                first = Some(rec);
            }
        }
    }
    let schema: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut report = LoadReport::default();
    let mut flat: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    for rec in first.into_iter().map(Ok).chain(records) {
        let rec: csv::StringRecord = rec?;
        report.rows_read += 1;
        let values: Option<Vec<T>> = feature_cols
            .iter()
            .map(|&i| {
                rec.get(i)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .map(T::of)
                    .filter(|v| v.is_finite())
            })
            .collect();
        let Some(values) = values else {
            report.rows_dropped += 1;
            continue;
        };
        let (group, fell_back) = policy.apply(rec.get(label_idx).unwrap_or(""))?;
        if fell_back {
            report.unknown_labels += 1;
        }
        flat.extend(values);
        labels.push(group);
    }
    report.rows_kept = labels.len();
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = Array2::from_shape_vec((labels.len(), schema.len()), flat)
        .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    Ok((LabeledDataset::new(schema, rows, labels)?, report))
}

pub fn save_dataset<T: Scalar>(ds: &LabeledDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let file = File::create(path)?;
    write_dataset(ds, file)
}

/// Floats are written in shortest round-trip form, so a reload is bit-exact.
pub fn write_dataset<T: Scalar, W: Write>(ds: &LabeledDataset<T>, writer: W) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(ds.schema.iter().map(String::as_str).chain([LABEL_COLUMN]))?;
    let mut record = Vec::with_capacity(ds.n_features() + 1);
    for (row, label) in ds.rows.rows().into_iter().zip(&ds.labels) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(label.name().to_string());
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_model::record::N_FEATURES;

    fn canonical_csv(rows: &[(&str, f64)]) -> String {
        let mut s = canonical_schema().join(",") + ",label\n";
        for (label, v) in rows {
            let vals = vec![v.to_string(); N_FEATURES].join(",");
            s += &format!("{vals},{label}\n");
        }
        s
    }

    #[test]
    fn loads_class_counts() {
        let mut rows = vec![("BENIGN", 1.0); 3];
        rows.extend(vec![("DoS Hulk", 2.0); 7]);
        let (ds, report) =
            read_dataset::<f64, _>(canonical_csv(&rows).as_bytes(), SchemaMode::Canonical, LabelPolicy::Strict)
                .unwrap();
        let counts = ds.class_counts();
        assert_eq!(counts[AttackGroup::Benign.code()], 3);
        assert_eq!(counts[AttackGroup::Dos.code()], 7);
        assert_eq!(counts.iter().sum::<usize>(), 10);
        assert_eq!(report.rows_kept, 10);
    }

    #[test]
    fn drops_non_finite_rows() {
        let csv = "a,b,label\n1,2,BENIGN\nNaN,2,BENIGN\n3,inf,DOS\n4,x,DOS\n5,6,DOS\n";
        let (ds, report) =
            read_dataset::<f64, _>(csv.as_bytes(), SchemaMode::Infer, LabelPolicy::Strict).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(report.rows_read, 5);
        assert_eq!(report.rows_dropped, 3);
    }

    #[test]
    fn one_nan_row_out_of_five() {
        let csv = "a,label\n1,BENIGN\n2,BENIGN\nnan,DOS\n1e3,DOS\n-2.5E-1,DOS\n";
        let (ds, report) =
            read_dataset::<f64, _>(csv.as_bytes(), SchemaMode::Infer, LabelPolicy::Strict).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(ds.rows[[3, 0]], -0.25);
    }

    #[test]
    fn infer_skips_text_columns() {
        let csv = "flow_id,x,label\nabc,1.5,BENIGN\ndef,2.5,Bot\n";
        let (ds, _) =
            read_dataset::<f32, _>(csv.as_bytes(), SchemaMode::Infer, LabelPolicy::Strict).unwrap();
        assert_eq!(ds.schema, vec!["x".to_string()]);
        assert_eq!(ds.labels[1], AttackGroup::Other);
    }

    #[test]
    fn errors() {
        let r = read_dataset::<f64, _>("a,b\n1,2\n".as_bytes(), SchemaMode::Infer, LabelPolicy::Strict);
        assert!(matches!(r, Err(Error::MissingLabelColumn)));
        let r = read_dataset::<f64, _>("a,label\n".as_bytes(), SchemaMode::Infer, LabelPolicy::Strict);
        assert!(matches!(r, Err(Error::EmptyDataset)));
        let r = read_dataset::<f64, _>("a,label\n1,BENIGN\n".as_bytes(), SchemaMode::Canonical, LabelPolicy::Strict);
        assert!(matches!(r, Err(Error::SchemaMismatch(_))));
        let r = read_dataset::<f64, _>("a,label\n1,Quux\n".as_bytes(), SchemaMode::Infer, LabelPolicy::Strict);
        assert!(matches!(r, Err(Error::UnknownLabel(_))));
        let (_, report) =
            read_dataset::<f64, _>("a,label\n1,Quux\n".as_bytes(), SchemaMode::Infer, LabelPolicy::FallbackOther)
                .unwrap();
        assert_eq!(report.unknown_labels, 1);
    }

    #[test]
    fn save_errors() {
        let empty = LabeledDataset::<f64>::from_rows(vec!["a".into()], vec![], vec![]).unwrap();
        assert!(matches!(save_dataset(&empty, "/tmp/never.csv"), Err(Error::EmptyDataset)));
        let ds = LabeledDataset::from_rows(vec!["a".into()], vec![vec![1.0f64]], vec![AttackGroup::Rce])
            .unwrap();
        assert!(matches!(
            save_dataset(&ds, "/nonexistent-dir/x/ds.csv"),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn construction_checks() {
        assert!(LabeledDataset::from_rows(vec!["a".into()], vec![vec![1.0f64]], vec![]).is_err());
        assert!(
            LabeledDataset::from_rows(vec!["a".into()], vec![vec![f64::NAN]], vec![AttackGroup::Rce])
                .is_err()
        );
    }
}
