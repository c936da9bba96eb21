use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::engineer::{apply_engineered, EngineeredFeature};
use super::mi::mutual_information;
use crate::error::{Error, Result};
use crate::flow_model::LabeledDataset;
use crate::scalar::Scalar;

pub const PLAN_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_K: usize = 20;

/// Per-feature min/max from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

impl<T: Scalar> MinMax<T> {
    pub fn fit(rows: &Array2<T>) -> Self {
        let mins = rows
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(T::infinity(), T::min))
            .collect();
        let maxs = rows
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(T::neg_infinity(), T::max))
            .collect();
        Self { mins, maxs }
    }

    fn scale(&self, j: usize, v: T) -> T {
        let range = self.maxs[j] - self.mins[j];
        if !(range > T::zero()) {
            return T::zero();
        }
        ((v - self.mins[j]) / range).max(T::zero()).min(T::one())
    }
}

/// Fitted preprocessing: optional engineered columns, MI-selected features, min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPlan<T> {
    pub format_version: u32,
    pub input_schema: Vec<String>,
    #[serde(default)]
    pub engineered: Vec<EngineeredFeature>,
    /// Indices into `input_schema` followed by the engineered columns, ascending.
    pub selected_features: Vec<usize>,
    pub feature_names: Vec<String>,
    /// MI of every column (input + engineered) against the labels.
    pub mi_scores: Vec<T>,
    pub bins: usize,
    pub seed: u64,
    /// `None` until normalization statistics are fit.
    pub scaling: Option<MinMax<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub k: usize,
    pub bins: usize,
    pub engineer: bool,
    pub seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            bins: DEFAULT_BINS,
            engineer: false,
            seed: 0,
        }
    }
}

/// Scores every feature by MI and keeps the top `k` (ties to the lower index).
/// The returned plan has no scaling yet.
pub fn select_features<T: Scalar>(ds: &LabeledDataset<T>, k: usize, bins: usize) -> Result<PreprocessPlan<T>> {
    let d = ds.n_features();
    if k == 0 || k > d {
        return Err(Error::BadK { k, d });
    }
    let labels = ds.label_codes();
    let mi_scores = (0..d)
        .map(|j| {
            let col: Vec<T> = ds.column(j).to_vec();
            mutual_information(&col, &labels, bins)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        mi_scores[b]
            .partial_cmp(&mi_scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order.into_iter().take(k).collect();
    selected.sort_unstable();
    Ok(PreprocessPlan {
        format_version: PLAN_FORMAT_VERSION,
        input_schema: ds.schema.clone(),
        engineered: Vec::new(),
        feature_names: selected.iter().map(|&j| ds.schema[j].clone()).collect(),
        selected_features: selected,
        mi_scores,
        bins,
        seed: 0,
        scaling: None,
    })
}

/// Fits the whole plan on the training split.
pub fn fit_plan<T: Scalar>(train: &LabeledDataset<T>, config: &PreprocessConfig) -> Result<PreprocessPlan<T>> {
    let engineered = if config.engineer {
        EngineeredFeature::ALL.to_vec()
    } else {
        Vec::new()
    };
    let (rows, schema) = apply_engineered(&train.rows, &train.schema, &engineered)?;
    let widened = LabeledDataset::new(schema, rows, train.labels.clone())?;
    let k = config.k.min(widened.n_features());
    let mut plan = select_features(&widened, k, config.bins)?;
    plan.input_schema = train.schema.clone();
    plan.engineered = engineered;
    plan.seed = config.seed;
    let selected = widened.rows.select(Axis(1), &plan.selected_features);
    plan.scaling = Some(MinMax::fit(&selected));
    Ok(plan)
}

/// Min-max scales every column to [0, 1] using the plan's training statistics.
pub fn normalize<T: Scalar>(rows: &Array2<T>, plan: &PreprocessPlan<T>) -> Result<Array2<T>> {
    let scaling = plan.scaling.as_ref().ok_or(Error::PlanNotFit)?;
    if rows.ncols() != scaling.mins.len() {
        return Err(Error::DimensionMismatch {
            expected: scaling.mins.len(),
            got: rows.ncols(),
        });
    }
    let mut out = rows.to_owned();
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = scaling.scale(j, *v);
        }
    }
    Ok(out)
}

impl<T: Scalar> PreprocessPlan<T> {
    pub fn n_outputs(&self) -> usize {
        self.selected_features.len()
    }

    /// Raw input rows → engineered → selected → normalized.
    pub fn transform_rows(&self, rows: &Array2<T>) -> Result<Array2<T>> {
        if rows.ncols() != self.input_schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_schema.len(),
                got: rows.ncols(),
            });
        }
        let (wide, _) = apply_engineered(rows, &self.input_schema, &self.engineered)?;
        normalize(&wide.select(Axis(1), &self.selected_features), self)
    }

    pub fn transform_row(&self, row: &[T]) -> Result<Vec<T>> {
        let rows = Array2::from_shape_vec((1, row.len()), row.to_vec()).expect("1 x d");
        Ok(self.transform_rows(&rows)?.into_raw_vec_and_offset().0)
    }

    pub fn transform(&self, ds: &LabeledDataset<T>) -> Result<LabeledDataset<T>> {
        if ds.schema != self.input_schema {
            return Err(Error::SchemaMismatch(
                "dataset columns differ from the plan's input schema".into(),
            ));
        }
        LabeledDataset::new(self.feature_names.clone(), self.transform_rows(&ds.rows)?, ds.labels.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(s)?;
        if plan.format_version != PLAN_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                got: plan.format_version,
                expected: PLAN_FORMAT_VERSION,
            });
        }
        Ok(plan)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_model::AttackGroup;
    use ndarray::array;

    fn ds(rows: Array2<f64>, labels: Vec<AttackGroup>) -> LabeledDataset<f64> {
        let schema = (0..rows.ncols()).map(|j| format!("f{j}")).collect();
        LabeledDataset::new(schema, rows, labels).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let train = ds(
            array![[0.0, 4.0], [5.0, 4.0], [10.0, 4.0]],
            vec![AttackGroup::Benign; 3],
        );
        let plan = fit_plan(&train, &PreprocessConfig { k: 2, ..Default::default() }).unwrap();
        let out = normalize(&train.rows, &plan).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(out.column(1).to_vec(), vec![0.0; 3]);
        let test = normalize(&array![[12.0, 1.0], [-3.0, 9.0]], &plan).unwrap();
        assert_eq!(test[[0, 0]], 1.0);
        assert_eq!(test[[1, 0]], 0.0);
    }

    #[test]
    fn normalize_requires_fit() {
        let train = ds(array![[0.0], [1.0]], vec![AttackGroup::Benign, AttackGroup::Dos]);
        let plan = select_features(&train, 1, 10).unwrap();
        assert!(matches!(normalize(&train.rows, &plan), Err(Error::PlanNotFit)));
    }

    #[test]
    fn normalize_is_idempotent_on_unit_range_plan() {
        let train = ds(array![[0.0, 0.2], [1.0, 1.0], [0.3, 0.0]], vec![AttackGroup::Benign; 3]);
        let plan = fit_plan(&train, &PreprocessConfig { k: 2, ..Default::default() }).unwrap();
        let once = normalize(&train.rows, &plan).unwrap();
        assert_eq!(normalize(&once, &plan).unwrap(), once);
    }

    #[test]
    fn selection_keeps_informative_feature() {
        let labels: Vec<AttackGroup> =
            (0..40).map(|i| if i % 2 == 0 { AttackGroup::Benign } else { AttackGroup::Dos }).collect();
        let rows = Array2::from_shape_fn((40, 3), |(i, j)| match j {
            1 => (i % 2) as f64,
            _ => 1.0,
        });
        let plan = select_features(&ds(rows.clone(), labels.clone()), 1, 2).unwrap();
        assert_eq!(plan.selected_features, vec![1]);
        let all = select_features(&ds(rows, labels), 3, 2).unwrap();
        assert_eq!(all.selected_features, vec![0, 1, 2]);
    }

    #[test]
    fn bad_k() {
        let d = ds(array![[0.0, 1.0]], vec![AttackGroup::Benign]);
        assert!(matches!(select_features(&d, 0, 10), Err(Error::BadK { .. })));
        assert!(matches!(select_features(&d, 3, 10), Err(Error::BadK { .. })));
    }

    #[test]
    fn plan_json_round_trip_and_version_check() {
        let train = ds(array![[0.0, 1.0], [2.0, 3.0]], vec![AttackGroup::Benign, AttackGroup::Rce]);
        let plan = fit_plan(&train, &PreprocessConfig { k: 1, seed: 9, ..Default::default() }).unwrap();
        let back = PreprocessPlan::<f64>::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(back, plan);
        let mut v: serde_json::Value = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(matches!(
            PreprocessPlan::<f64>::from_json(&v.to_string()),
            Err(Error::FormatVersion { got: 99, .. })
        ));
    }

    #[test]
    fn transform_with_engineering() {
        let schema: Vec<String> = ["fwd_bytes", "bwd_bytes", "pkt_len_mean", "pkt_len_std"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let train = LabeledDataset::new(
            schema,
            array![[10.0, 0.0, 5.0, 1.0], [0.0, 10.0, 6.0, 2.0], [4.0, 4.0, 7.0, 0.0]],
            vec![AttackGroup::Benign, AttackGroup::Dos, AttackGroup::Rce],
        )
        .unwrap();
        let cfg = PreprocessConfig { k: 20, engineer: true, ..Default::default() };
        let plan = fit_plan(&train, &cfg).unwrap();
        assert_eq!(plan.n_outputs(), 6);
        assert_eq!(plan.mi_scores.len(), 6);
        let out = plan.transform(&train).unwrap();
        assert_eq!(out.schema[4], "len_ratio");
        assert!(out.rows.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
