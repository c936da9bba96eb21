use serde::{Deserialize, Serialize};

use super::search::{search_weights, DEFAULT_STEP};
use super::{EnsembleModel, VoteMode};
use crate::artifact::TrainedModel;
use crate::error::Result;
use crate::flow_model::LabeledDataset;
use crate::models::{gbdt_fit, mlp_fit, rf_fit, BoostParams, Classifier, ForestParams, MlpParams};
use crate::scalar::Scalar;

/// Hyperparameters of the three ensemble members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberConfig {
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub mlp: MlpParams,
}

impl MemberConfig {
    /// Baseline members: 100 unweighted trees, a shallower booster, one hidden layer.
    pub fn v1(seed: u64) -> Self {
        Self {
            forest: ForestParams {
                n_trees: 100,
                class_balanced: false,
                seed,
                ..Default::default()
            },
            boost: BoostParams {
                learning_rate: 0.1,
                max_depth: 6,
                max_leaves: 31,
                seed,
                ..Default::default()
            },
            mlp: MlpParams {
                hidden: vec![100],
                seed,
                ..Default::default()
            },
        }
    }

    /// 150 class-balanced trees; depth-10/64-leaf booster at η = 0.05; 256-128-64 MLP.
    pub fn v2(seed: u64) -> Self {
        Self {
            forest: ForestParams {
                n_trees: 150,
                class_balanced: true,
                seed,
                ..Default::default()
            },
            boost: BoostParams {
                learning_rate: 0.05,
                max_depth: 10,
                max_leaves: 64,
                seed,
                ..Default::default()
            },
            mlp: MlpParams {
                hidden: vec![256, 128, 64],
                seed,
                ..Default::default()
            },
        }
    }

    pub fn fit_members<T: Scalar>(
        &self,
        train: &LabeledDataset<T>,
        val: Option<&LabeledDataset<T>>,
    ) -> Result<Vec<TrainedModel<T>>> {
        Ok(vec![
            TrainedModel::RandomForest(rf_fit(train, &self.forest)?),
            TrainedModel::Gbdt(gbdt_fit(train, &self.boost)?),
            TrainedModel::Mlp(mlp_fit(train, val, &self.mlp)?),
        ])
    }
}

pub fn build_soft<T: Scalar>(
    train: &LabeledDataset<T>,
    val: Option<&LabeledDataset<T>>,
    config: &MemberConfig,
) -> Result<EnsembleModel<T>> {
    EnsembleModel::soft(config.fit_members(train, val)?)
}

/// Fits members on `train`, then grid-searches simplex weights on `val`.
pub fn build_weighted<T: Scalar>(
    train: &LabeledDataset<T>,
    val: &LabeledDataset<T>,
    config: &MemberConfig,
    step: f64,
) -> Result<EnsembleModel<T>> {
    let members = config.fit_members(train, Some(val))?;
    let refs: Vec<&dyn Classifier<T>> = members.iter().map(|m| m as &dyn Classifier<T>).collect();
    let search = search_weights(&refs, val, step)?;
    Ok(EnsembleModel {
        members,
        weights: search.weights,
        mode: VoteMode::Weighted,
        search_log: search.log,
    })
}

/// Soft-voting ensemble of baseline members.
pub fn build_v1<T: Scalar>(
    train: &LabeledDataset<T>,
    val: Option<&LabeledDataset<T>>,
    seed: u64,
) -> Result<EnsembleModel<T>> {
    build_soft(train, val, &MemberConfig::v1(seed))
}

/// Tuned members with validation-searched weights.
pub fn build_v2<T: Scalar>(
    train: &LabeledDataset<T>,
    val: &LabeledDataset<T>,
    seed: u64,
) -> Result<EnsembleModel<T>> {
    build_weighted(train, val, &MemberConfig::v2(seed), DEFAULT_STEP)
}
