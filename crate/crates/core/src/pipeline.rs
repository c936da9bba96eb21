//! Split → preprocess (fit on train only) → SMOTE → fit → validation/test reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, ModelKind, TrainedModel};
use crate::ensemble::{build_soft, build_weighted, GridPoint, MemberConfig, DEFAULT_STEP};
use crate::error::Result;
use crate::flow_model::LabeledDataset;
use crate::metrics::{classification_report, macro_f1, ClassificationReport};
use crate::models::{gbdt_fit, mlp_fit, rf_fit, Classifier};
use crate::preprocess::{
    fit_plan, smote_oversample, stratified_split, PreprocessConfig, SplitSpec, DEFAULT_BINS, DEFAULT_K,
    DEFAULT_K_NEIGHBORS,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub k_features: usize,
    pub mi_bins: usize,
    pub smote: bool,
    pub smote_k: usize,
    pub weight_step: f64,
    /// Replaces the preset member hyperparameters for every kind.
    pub members: Option<MemberConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let split = SplitSpec::default();
        Self {
            seed: 0,
            train_frac: split.train_frac,
            val_frac: split.val_frac,
            test_frac: split.test_frac,
            k_features: DEFAULT_K,
            mi_bins: DEFAULT_BINS,
            smote: true,
            smote_k: DEFAULT_K_NEIGHBORS,
            weight_step: DEFAULT_STEP,
            members: None,
        }
    }
}

impl TrainConfig {
    /// Member hyperparameters for `kind`: baseline presets for `ens_v1` and
    /// `ens_weighted_fe`, tuned presets otherwise.
    pub fn member_config(&self, kind: ModelKind) -> MemberConfig {
        let mut cfg = match (&self.members, kind) {
            (Some(m), _) => m.clone(),
            (None, ModelKind::EnsV1 | ModelKind::EnsWeightedFe) => MemberConfig::v1(self.seed),
            (None, _) => MemberConfig::v2(self.seed),
        };
        cfg.forest.seed = self.seed;
        cfg.boost.seed = self.seed;
        cfg.mlp.seed = self.seed;
        cfg
    }

    fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_frac: self.train_frac,
            val_frac: self.val_frac,
            test_frac: self.test_frac,
            stratified: true,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberScore {
    pub name: String,
    pub val_macro_f1: f64,
    pub test_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport<T> {
    pub model_kind: ModelKind,
    pub seed: u64,
    pub n_train: usize,
    pub n_train_resampled: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub selected_features: Vec<String>,
    pub validation: ClassificationReport,
    pub test: ClassificationReport,
    /// Ensemble kinds only.
    pub members: Vec<MemberScore>,
    pub weights: Vec<T>,
    pub search_log: Vec<GridPoint<T>>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub artifact: ModelArtifact<T>,
    pub report: TrainReport<T>,
}

pub fn predict_labels<T: Scalar, C: Classifier<T> + ?Sized>(model: &C, ds: &LabeledDataset<T>) -> Result<Vec<usize>> {
    (0..ds.len()).into_par_iter().map(|i| model.predict(ds.row(i))).collect()
}

pub fn evaluate<T: Scalar, C: Classifier<T> + ?Sized>(model: &C, ds: &LabeledDataset<T>) -> Result<ClassificationReport> {
    classification_report(&ds.label_codes(), &predict_labels(model, ds)?)
}

const MEMBER_NAMES: [&str; 3] = ["rf", "gbdt", "mlp"];

pub fn train<T: Scalar>(ds: &LabeledDataset<T>, kind: ModelKind, config: &TrainConfig) -> Result<TrainOutcome<T>> {
    let split = stratified_split(ds, &config.split_spec())?;
    let plan = fit_plan(
        &split.train,
        &PreprocessConfig {
            k: config.k_features,
            bins: config.mi_bins,
            engineer: kind == ModelKind::EnsWeightedFe,
            seed: config.seed,
        },
    )?;
    let train_raw = plan.transform(&split.train)?;
    let val = plan.transform(&split.val)?;
    let test = plan.transform(&split.test)?;
    let train = if config.smote {
        smote_oversample(&train_raw, config.smote_k, config.seed)?
    } else {
        train_raw
    };

    let members = config.member_config(kind);
    let model = match kind {
        ModelKind::Rf => TrainedModel::RandomForest(rf_fit(&train, &members.forest)?),
        ModelKind::Gbdt => TrainedModel::Gbdt(gbdt_fit(&train, &members.boost)?),
        ModelKind::Mlp => TrainedModel::Mlp(mlp_fit(&train, Some(&val), &members.mlp)?),
        ModelKind::EnsV1 => TrainedModel::Ensemble(build_soft(&train, Some(&val), &members)?),
        ModelKind::EnsWeightedFe | ModelKind::EnsV2 => {
            TrainedModel::Ensemble(build_weighted(&train, &val, &members, config.weight_step)?)
        }
    };

    let (member_scores, weights, search_log) = match &model {
        TrainedModel::Ensemble(e) => {
            let scores = e
                .members
                .iter()
                .zip(MEMBER_NAMES)
                .map(|(m, name)| {
                    Ok(MemberScore {
                        name: name.to_string(),
                        val_macro_f1: macro_f1(&val.label_codes(), &predict_labels(m, &val)?)?,
                        test_macro_f1: macro_f1(&test.label_codes(), &predict_labels(m, &test)?)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (scores, e.weights.clone(), e.search_log.clone())
        }
        _ => (Vec::new(), Vec::new(), Vec::new()),
    };

    let report = TrainReport {
        model_kind: kind,
        seed: config.seed,
        n_train: split.train.len(),
        n_train_resampled: train.len(),
        n_val: val.len(),
        n_test: test.len(),
        selected_features: plan.feature_names.clone(),
        validation: evaluate(&model, &val)?,
        test: evaluate(&model, &test)?,
        members: member_scores,
        weights,
        search_log,
    };
    let artifact = ModelArtifact::new(kind, plan.feature_names.clone(), model, Some(plan));
    Ok(TrainOutcome { artifact, report })
}
