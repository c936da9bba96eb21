//! Serializable trained models and the on-disk model artifact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::models::{BoostedTrees, Classifier, MlpModel, RandomForest};
use crate::preprocess::PreprocessPlan;
use crate::scalar::Scalar;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainedModel<T> {
    RandomForest(RandomForest<T>),
    Gbdt(BoostedTrees<T>),
    Mlp(MlpModel<T>),
    Ensemble(EnsembleModel<T>),
}

impl<T: Scalar> TrainedModel<T> {
    fn inner(&self) -> &dyn Classifier<T> {
        match self {
            TrainedModel::RandomForest(m) => m,
            TrainedModel::Gbdt(m) => m,
            TrainedModel::Mlp(m) => m,
            TrainedModel::Ensemble(m) => m,
        }
    }

    pub fn hyperparameters(&self) -> serde_json::Value {
        let v = match self {
            TrainedModel::RandomForest(m) => serde_json::to_value(m.params),
            TrainedModel::Gbdt(m) => serde_json::to_value(m.params),
            TrainedModel::Mlp(m) => serde_json::to_value(&m.params),
            TrainedModel::Ensemble(m) => Ok(serde_json::json!({
                "mode": m.mode,
                "members": m.members.iter().map(|x| x.hyperparameters()).collect::<Vec<_>>(),
            })),
        };
        v.unwrap_or(serde_json::Value::Null)
    }
}

impl<T: Scalar> Classifier<T> for TrainedModel<T> {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        self.inner().predict_proba(x)
    }

    fn predict(&self, x: &[T]) -> Result<usize> {
        self.inner().predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rf,
    Gbdt,
    Mlp,
    EnsV1,
    EnsWeightedFe,
    EnsV2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Rf,
        ModelKind::Gbdt,
        ModelKind::Mlp,
        ModelKind::EnsV1,
        ModelKind::EnsWeightedFe,
        ModelKind::EnsV2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Mlp => "mlp",
            ModelKind::EnsV1 => "ens_v1",
            ModelKind::EnsWeightedFe => "ens_weighted_fe",
            ModelKind::EnsV2 => "ens_v2",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::BadConfig(format!("unknown model kind {s:?}")))
    }
}

/// Self-contained model file: the fitted preprocessing plus the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact<T> {
    pub format_version: u32,
    pub model_kind: ModelKind,
    /// Feature names the classifier consumes (after preprocessing).
    pub schema: Vec<String>,
    pub hyperparameters: serde_json::Value,
    pub parameters: TrainedModel<T>,
    pub preprocess: Option<PreprocessPlan<T>>,
}

impl<T: Scalar> ModelArtifact<T> {
    pub fn new(
        model_kind: ModelKind,
        schema: Vec<String>,
        parameters: TrainedModel<T>,
        preprocess: Option<PreprocessPlan<T>>,
    ) -> Self {
        Self {
            format_version: ARTIFACT_FORMAT_VERSION,
            model_kind,
            schema,
            hyperparameters: parameters.hyperparameters(),
            parameters,
            preprocess,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                got: header.format_version,
                expected: ARTIFACT_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Applies the stored preprocessing to raw input features.
    pub fn prepare(&self, raw: &[T]) -> Result<Vec<T>> {
        match &self.preprocess {
            Some(plan) => plan.transform_row(raw),
            None => Ok(raw.to_vec()),
        }
    }
}

/// Classifies raw (unpreprocessed) feature vectors.
impl<T: Scalar> Classifier<T> for ModelArtifact<T> {
    fn n_features(&self) -> usize {
        match &self.preprocess {
            Some(plan) => plan.input_schema.len(),
            None => self.parameters.n_features(),
        }
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        self.parameters.predict_proba(&self.prepare(x)?)
    }

    fn predict(&self, x: &[T]) -> Result<usize> {
        self.parameters.predict(&self.prepare(x)?)
    }
}
