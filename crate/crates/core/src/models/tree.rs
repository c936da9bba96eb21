use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::presort::{midpoint, SortedIndex};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node<T, L> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        value: L,
    },
}

/// Binary tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T, L> {
    pub nodes: Vec<Node<T, L>>,
    pub n_features: usize,
}

impl<T: Scalar, L> Tree<T, L> {
    pub fn leaf(&self, x: &[T]) -> &L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk<T, L>(nodes: &[Node<T, L>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Features read by any split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Classification tree; leaves hold a class distribution.
pub type DecisionTree<T> = Tree<T, Vec<T>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_leaf`.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
    pub n_classes: usize,
    #[serde(default)]
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            n_classes: crate::N_CLASSES,
            criterion: Criterion::Gini,
        }
    }
}

impl<T: Scalar> DecisionTree<T> {
    pub fn predict_proba(&self, x: &[T]) -> Result<&[T]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.leaf(x))
    }
}

struct CartContext<'a, T> {
    rows: &'a Array2<T>,
    labels: &'a [usize],
    weights: &'a [T],
    params: &'a TreeParams,
    mask: Vec<bool>,
    nodes: Vec<Node<T, Vec<T>>>,
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    gain: T,
}

impl<T: Scalar> CartContext<'_, T> {
    fn histogram(&self, members: &[u32]) -> Vec<T> {
        let mut h = vec![T::zero(); self.params.n_classes];
        for &i in members {
            h[self.labels[i as usize]] += self.weights[i as usize];
        }
        h
    }

    fn leaf(&mut self, hist: Vec<T>) -> usize {
        let total: T = hist.iter().copied().sum();
        let value = hist.into_iter().map(|w| w / total).collect();
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    /// Gini maximizes Σ_L w²/W_L + Σ_R w²/W_R; entropy maximizes
    /// Σ_L w ln w − W_L ln W_L + (same for R). Both relative to the parent.
    fn scan_feature(&self, f: usize, list: &[u32], parent: &[T], best: &mut Option<BestSplit<T>>) {
        let msl = self.params.min_samples_leaf.max(1);
        let n = list.len();
        let total: T = parent.iter().copied().sum();
        let entropy = self.params.criterion == Criterion::Entropy;
        let term = |w: T| {
            if !entropy {
                w * w
            } else if w > T::zero() {
                w * w.ln()
            } else {
                T::zero()
            }
        };
        let score = |sum: T, weight: T| if entropy { sum - weight * weight.ln() } else { sum / weight };
        let parent_score = score(parent.iter().map(|&w| term(w)).sum::<T>(), total);
        let mut left = vec![T::zero(); parent.len()];
        let mut left_sq = T::zero();
        let mut right_sq: T = parent.iter().map(|&w| term(w)).sum();
        let mut left_w = T::zero();
        for pos in 0..n - 1 {
            let i = list[pos] as usize;
            let (c, w) = (self.labels[i], self.weights[i]);
            let r_old = parent[c] - left[c];
            left_sq += term(left[c] + w) - term(left[c]);
            right_sq += term(r_old - w) - term(r_old);
            left[c] += w;
            left_w += w;
            if pos + 1 < msl || n - pos - 1 < msl {
                continue;
            }
            let (v, next) = (self.rows[[i, f]], self.rows[[list[pos + 1] as usize, f]]);
            if !(next > v) {
                continue;
            }
            let right_w = total - left_w;
            if !(left_w > T::zero() && right_w > T::zero()) {
                continue;
            }
            let gain = score(left_sq, left_w) + score(right_sq, right_w) - parent_score;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                *best = Some(BestSplit {
                    feature: f,
                    threshold: midpoint(v, next),
                    gain,
                });
            }
        }
    }

    fn grow(&mut self, index: SortedIndex, depth: usize, rng: &mut impl Rng) -> usize {
        let hist = self.histogram(index.members());
        let pure = hist.iter().filter(|w| **w > T::zero()).count() <= 1;
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || index.len() < 2 * self.params.min_samples_leaf.max(1) {
            return self.leaf(hist);
        }

        let d = self.rows.ncols();
        let mut order: Vec<usize> = (0..d).collect();
        let budget = match self.params.max_features {
            Some(k) if k < d => {
                order.shuffle(rng);
                k
            }
            _ => d,
        };
        // The first `budget` non-constant features in draw order, evaluated in index order.
        let mut candidates: Vec<usize> = order
            .into_iter()
            .filter(|&f| {
                let l = &index.lists[f];
                self.rows[[l[0] as usize, f]] < self.rows[[l[l.len() - 1] as usize, f]]
            })
            .take(budget)
            .collect();
        candidates.sort_unstable();

        let mut best = None;
        for &f in &candidates {
            self.scan_feature(f, &index.lists[f], &hist, &mut best);
        }
        let Some(split) = best else {
            return self.leaf(hist);
        };

        for &i in index.members() {
            self.mask[i as usize] = self.rows[[i as usize, split.feature]] <= split.threshold;
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: Vec::new() });
        let (l, r) = index.partition(&self.mask);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Greedy weighted-Gini CART. Rows with zero weight are ignored.
///
/// Splits are taken whenever a node is impure and a valid split exists, even
/// at zero gain; ties in gain go to the lower feature, then the lower threshold.
pub fn fit_tree<T: Scalar>(
    rows: &Array2<T>,
    labels: &[usize],
    weights: &[T],
    params: &TreeParams,
    rng: &mut impl Rng,
) -> Result<DecisionTree<T>> {
    if rows.nrows() != labels.len() || weights.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.nrows(),
            right: labels.len().min(weights.len()),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= params.n_classes) {
        return Err(Error::BadCode(bad));
    }
    if weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
        return Err(Error::BadHyperparameter("sample weights must be finite and >= 0".into()));
    }
    let members: Vec<u32> = (0..labels.len() as u32)
        .filter(|&i| weights[i as usize] > T::zero())
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyData);
    }
    let index = SortedIndex::build(rows, &members);
    fit_tree_presorted(rows, labels, weights, params, index, rng)
}

pub(crate) fn fit_tree_presorted<T: Scalar>(
    rows: &Array2<T>,
    labels: &[usize],
    weights: &[T],
    params: &TreeParams,
    index: SortedIndex,
    rng: &mut impl Rng,
) -> Result<DecisionTree<T>> {
    if index.len() == 0 {
        return Err(Error::EmptyData);
    }
    let mut ctx = CartContext {
        rows,
        labels,
        weights,
        params,
        mask: vec![false; labels.len()],
        nodes: Vec::new(),
    };
    ctx.grow(index, 0, rng);
    Ok(Tree {
        nodes: ctx.nodes,
        n_features: rows.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::scalar::argmax;
    use ndarray::array;

    fn fit(rows: &Array2<f64>, labels: &[usize], params: TreeParams) -> DecisionTree<f64> {
        let w = vec![1.0; labels.len()];
        fit_tree(rows, labels, &w, &params, &mut seeded(0, 0)).unwrap()
    }

    #[test]
    fn single_class_is_one_leaf() {
        let rows = array![[1.0], [2.0], [3.0]];
        let t = fit(&rows, &[4, 4, 4], TreeParams::default());
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.leaf(&[9.0])[4], 1.0);
    }

    #[test]
    fn xor_depth_two_is_perfect() {
        let rows = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let labels = [0, 1, 1, 0];
        let t = fit(&rows, &labels, TreeParams { max_depth: Some(2), ..Default::default() });
        for (i, &c) in labels.iter().enumerate() {
            assert_eq!(argmax(t.leaf(rows.row(i).as_slice().unwrap())), c);
        }
        assert!(t.depth() <= 2);
    }

    #[test]
    fn depth_zero_is_the_prior() {
        let rows = array![[0.0], [1.0], [2.0], [3.0]];
        let t = fit(&rows, &[0, 0, 0, 1], TreeParams { max_depth: Some(0), ..Default::default() });
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.leaf(&[0.0])[..2], [0.75, 0.25]);
    }

    #[test]
    fn weights_shift_the_prior() {
        let rows = array![[0.0], [1.0]];
        let t = fit_tree(
            &rows,
            &[0, 1],
            &[3.0, 1.0],
            &TreeParams { max_depth: Some(0), ..Default::default() },
            &mut seeded(0, 0),
        )
        .unwrap();
        assert_eq!(t.leaf(&[0.0])[..2], [0.75, 0.25]);
    }

    #[test]
    fn ties_go_to_lower_feature() {
        // Both features separate the classes identically.
        let rows = array![[0.0, 0.0], [1.0, 1.0]];
        let t = fit(&rows, &[0, 1], TreeParams::default());
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let t = fit(&rows, &[1, 0, 0, 0, 0], TreeParams { min_samples_leaf: 2, ..Default::default() });
        let mut counts = vec![0; t.nodes.len()];
        for i in 0..5 {
            let x = [i as f64];
            let mut at = 0;
            while let Node::Split { feature, threshold, left, right } = &t.nodes[at] {
                at = if x[*feature] <= *threshold { *left } else { *right };
            }
            counts[at] += 1;
        }
        assert!(counts.iter().all(|&c| c == 0 || c >= 2));
    }

    #[test]
    fn errors() {
        let rows = array![[0.0]];
        assert!(matches!(
            fit_tree(&rows, &[0], &[0.0], &TreeParams::default(), &mut seeded(0, 0)),
            Err(Error::EmptyData)
        ));
        assert!(fit_tree(&rows, &[0, 1], &[1.0], &TreeParams::default(), &mut seeded(0, 0)).is_err());
        let t = fit(&array![[0.0], [1.0]], &[0, 1], TreeParams::default());
        assert!(matches!(t.predict_proba(&[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn leaves_are_distributions() {
        let rows = Array2::from_shape_fn((60, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        let labels: Vec<usize> = (0..60).map(|i| i % 7).collect();
        let t = fit(&rows, &labels, TreeParams { max_depth: Some(4), ..Default::default() });
        for n in &t.nodes {
            if let Node::Leaf { value } = n {
                assert_eq!(value.len(), 7);
                assert!((value.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_prefers_balanced_clean_splits() {
        // Four classes on a line: Gini scores 1|3 and 2|2 equally, entropy prefers 2|2.
        let rows = Array2::from_shape_fn((40, 1), |(i, _)| (i / 10) as f64);
        let labels: Vec<usize> = (0..40).map(|i| i / 10).collect();
        let acc = |t: &DecisionTree<f64>| {
            (0..40)
                .filter(|&i| crate::scalar::argmax(t.predict_proba(&[rows[[i, 0]]]).unwrap()) == labels[i])
                .count()
        };
        let depth2 = |criterion| TreeParams {
            max_depth: Some(2),
            criterion,
            ..Default::default()
        };
        assert_eq!(acc(&fit(&rows, &labels, depth2(Criterion::Entropy))), 40);
        assert_eq!(acc(&fit(&rows, &labels, depth2(Criterion::Gini))), 30);
    }
}
