//! From-scratch classifiers: CART trees, random forest, leaf-wise gradient
//! boosting and a ReLU MLP. Every model emits a class-probability vector.

mod forest;
mod gbdt;
mod mlp;
mod presort;
mod tree;

pub use forest::{balanced_class_weights, bootstrap_counts, rf_fit, rf_predict_rows, ForestParams, RandomForest};
pub use gbdt::{gbdt_fit, BoostParams, BoostedTrees, RegressionTree};
pub use mlp::{mlp_fit, Dense, Gradients, MlpModel, MlpParams};
pub use tree::{fit_tree, Criterion, DecisionTree, Node, Tree, TreeParams};

use crate::error::Result;
use crate::scalar::{argmax, Scalar};

/// Anything that maps a feature vector to class probabilities.
pub trait Classifier<T: Scalar>: Send + Sync {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize {
        crate::N_CLASSES
    }

    /// Non-negative, sums to 1.
    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>>;

    fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

impl<T: Scalar> Classifier<T> for DecisionTree<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        DecisionTree::predict_proba(self, x).map(<[T]>::to_vec)
    }
}
