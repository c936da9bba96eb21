use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Derived columns appended after the input schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineeredFeature {
    /// (fwd_bytes + 1) / (bwd_bytes + 1)
    LenRatio,
    /// pkt_len_std / (pkt_len_mean + 1e-9)
    SizeVar,
}

impl EngineeredFeature {
    pub const ALL: [EngineeredFeature; 2] = [EngineeredFeature::LenRatio, EngineeredFeature::SizeVar];

    pub fn name(self) -> &'static str {
        match self {
            EngineeredFeature::LenRatio => "len_ratio",
            EngineeredFeature::SizeVar => "size_var",
        }
    }

    fn inputs(self) -> [&'static str; 2] {
        match self {
            EngineeredFeature::LenRatio => ["fwd_bytes", "bwd_bytes"],
            EngineeredFeature::SizeVar => ["pkt_len_std", "pkt_len_mean"],
        }
    }

    fn eval<T: Scalar>(self, a: T, b: T) -> T {
        match self {
            EngineeredFeature::LenRatio => (a + T::one()) / (b + T::one()),
            EngineeredFeature::SizeVar => a / (b + T::of(1e-9)),
        }
    }
}

fn column_index(schema: &[String], name: &str) -> Result<usize> {
    schema
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Appends the packet-length ratio and size-variation columns.
pub fn engineer_features<T: Scalar>(rows: &Array2<T>, schema: &[String]) -> Result<(Array2<T>, Vec<String>)> {
    apply_engineered(rows, schema, &EngineeredFeature::ALL)
}

pub fn apply_engineered<T: Scalar>(
    rows: &Array2<T>,
    schema: &[String],
    features: &[EngineeredFeature],
) -> Result<(Array2<T>, Vec<String>)> {
    if rows.ncols() != schema.len() {
        return Err(Error::DimensionMismatch {
            expected: schema.len(),
            got: rows.ncols(),
        });
    }
    let mut extra = Array2::zeros((rows.nrows(), features.len()));
    for (k, feat) in features.iter().enumerate() {
        let [a, b] = feat.inputs();
        let (ia, ib) = (column_index(schema, a)?, column_index(schema, b)?);
        for (i, row) in rows.rows().into_iter().enumerate() {
            extra[[i, k]] = feat.eval(row[ia], row[ib]);
        }
    }
    let out = concatenate(Axis(1), &[rows.view(), extra.view()])
        .expect("row counts match")
        .as_standard_layout()
        .into_owned();
    let mut names = schema.to_vec();
    names.extend(features.iter().map(|f| f.name().to_string()));
    Ok((out, names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn schema() -> Vec<String> {
        ["fwd_bytes", "bwd_bytes", "pkt_len_mean", "pkt_len_std"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn appends_two_columns() {
        let rows = array![[10.0f64, 10.0, 50.0, 0.0], [999.0, 0.0, 100.0, 25.0]];
        let (out, names) = engineer_features(&rows, &schema()).unwrap();
        assert_eq!(out.ncols(), 6);
        assert_eq!(names[4], "len_ratio");
        assert_eq!(out[[0, 4]], 1.0);
        assert_eq!(out[[0, 5]], 0.0);
        assert_eq!(out[[1, 4]], 1000.0);
        assert!((out[[1, 5]] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn missing_column() {
        let rows = array![[1.0f64, 2.0]];
        let r = engineer_features(&rows, &["fwd_bytes".to_string(), "x".to_string()]);
        assert!(matches!(r, Err(Error::MissingColumn(c)) if c == "bwd_bytes"));
    }
}
