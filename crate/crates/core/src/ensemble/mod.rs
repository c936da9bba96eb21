//! Probability-voting ensembles: plain soft voting, fixed-weight voting and
//! validation-searched weights.

mod build;
mod search;
mod voting;

pub use build::{build_soft, build_v1, build_v2, build_weighted, MemberConfig};
pub use search::{
    member_probabilities, search_weights, search_weights_from_probs, simplex_grid, GridPoint, WeightSearch,
    DEFAULT_STEP,
};
pub use voting::{soft_vote, uniform_weights, weighted_vote};

use serde::{Deserialize, Serialize};

use crate::artifact::TrainedModel;
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteMode {
    Soft,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel<T> {
    pub members: Vec<TrainedModel<T>>,
    pub weights: Vec<T>,
    pub mode: VoteMode,
    #[serde(default = "Vec::new")]
    pub search_log: Vec<GridPoint<T>>,
}

impl<T: Scalar> EnsembleModel<T> {
    pub fn soft(members: Vec<TrainedModel<T>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::BadWeights("no members".into()));
        }
        Ok(Self {
            weights: uniform_weights(members.len()),
            members,
            mode: VoteMode::Soft,
            search_log: Vec::new(),
        })
    }

    pub fn weighted(members: Vec<TrainedModel<T>>, weights: Vec<T>) -> Result<Self> {
        voting::check_weights(&weights, members.len())?;
        Ok(Self {
            members,
            weights,
            mode: VoteMode::Weighted,
            search_log: Vec::new(),
        })
    }

    pub fn member_refs(&self) -> Vec<&dyn Classifier<T>> {
        self.members.iter().map(|m| m as &dyn Classifier<T>).collect()
    }
}

impl<T: Scalar> Classifier<T> for EnsembleModel<T> {
    fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        let probs = self
            .members
            .iter()
            .map(|m| m.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(weighted_vote(&probs, &self.weights)?.1)
    }
}
