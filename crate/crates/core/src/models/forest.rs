use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::presort::SortedIndex;
use super::tree::{fit_tree_presorted, DecisionTree, TreeParams};
use super::Classifier;
use crate::error::{Error, Result};
use crate::flow_model::{LabeledDataset, N_CLASSES};
use crate::rng::seeded;
use crate::scalar::{argmax, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub class_balanced: bool,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features per split; `None` uses ⌊√d⌋.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 150,
            class_balanced: true,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest<T> {
    pub params: ForestParams,
    pub class_weights: Vec<T>,
    pub trees: Vec<DecisionTree<T>>,
}

/// `n / (K · count_c)` for each of the K classes present; 1 for absent classes.
pub fn balanced_class_weights<T: Scalar>(counts: &[usize]) -> Vec<T> {
    let n: usize = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count().max(1);
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                T::one()
            } else {
                T::of_usize(n) / (T::of_usize(present) * T::of_usize(c))
            }
        })
        .collect()
}

/// Multiplicity of each row in an n-draw bootstrap sample.
pub fn bootstrap_counts(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut counts = vec![0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

pub fn rf_fit<T: Scalar>(ds: &LabeledDataset<T>, params: &ForestParams) -> Result<RandomForest<T>> {
    if ds.len() < 2 {
        return Err(Error::EmptyData);
    }
    if params.n_trees == 0 {
        return Err(Error::BadHyperparameter("n_trees must be >= 1".into()));
    }
    let d = ds.n_features();
    let labels = ds.label_codes();
    let class_weights: Vec<T> = if params.class_balanced {
        balanced_class_weights(&ds.class_counts())
    } else {
        vec![T::one(); N_CLASSES]
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(
            params
                .max_features
                .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
                .min(d),
        ),
        n_classes: N_CLASSES,
        criterion: Default::default(),
    };
    let all: Vec<u32> = (0..ds.len() as u32).collect();
    let root = SortedIndex::build(&ds.rows, &all);

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(params.seed, t as u64);
            let counts = if params.bootstrap {
                bootstrap_counts(ds.len(), &mut rng)
            } else {
                vec![1; ds.len()]
            };
            let weights: Vec<T> = counts
                .iter()
                .zip(&labels)
                .map(|(&k, &c)| T::of_usize(k) * class_weights[c])
                .collect();
            let index = SortedIndex {
                lists: root
                    .lists
                    .iter()
                    .map(|l| l.iter().copied().filter(|&i| counts[i as usize] > 0).collect())
                    .collect(),
            };
            fit_tree_presorted(&ds.rows, &labels, &weights, &tree_params, index, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RandomForest {
        params: *params,
        class_weights,
        trees,
    })
}

impl<T: Scalar> RandomForest<T> {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Each tree's argmax class.
    pub fn tree_votes(&self, x: &[T]) -> Result<Vec<usize>> {
        self.check(x)?;
        Ok(self.trees.iter().map(|t| argmax(t.leaf(x))).collect())
    }

    /// Majority vote over trees (ties to the lowest class) and the mean leaf distribution.
    pub fn rf_predict(&self, x: &[T]) -> Result<(usize, Vec<T>)> {
        let votes = self.tree_votes(x)?;
        let mut tally = [0usize; N_CLASSES];
        for v in votes {
            tally[v] += 1;
        }
        Ok((argmax(&tally), self.mean_proba(x)))
    }

    fn mean_proba(&self, x: &[T]) -> Vec<T> {
        let mut p = vec![T::zero(); N_CLASSES];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(t.leaf(x)) {
                *acc += *v;
            }
        }
        let n = T::of_usize(self.trees.len());
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

impl<T: Scalar> Classifier<T> for RandomForest<T> {
    fn n_features(&self) -> usize {
        RandomForest::n_features(self)
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        Ok(self.mean_proba(x))
    }

    fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(self.rf_predict(x)?.0)
    }
}

/// Batch convenience used by tests and the CLI.
pub fn rf_predict_rows<T: Scalar>(model: &RandomForest<T>, rows: &Array2<T>) -> Result<Vec<usize>> {
    rows.rows()
        .into_iter()
        .map(|r| model.predict(r.as_slice().expect("standard layout")))
        .collect()
}
