//! Second-order multiclass gradient boosting with leaf-wise tree growth.
//!
//! Each round fits one regression tree per class to the softmax
//! cross-entropy gradients `g = p − y` and Hessians `h = p(1 − p)`. A leaf
//! with statistics (G, H) takes the Newton value `−G / (H + λ)`, and a split
//! is scored by
//!
//! ```text
//! gain = ½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ
//! ```
//!
//! which is the reduction of the regularized objective with
//! `Ω(f) = γ·leaves + ½λ·Σ w²`. Trees grow best-first: the leaf with the
//! largest positive gain is split until `max_leaves` or `max_depth`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::presort::{midpoint, SortedIndex};
use super::tree::{Node, Tree};
use super::Classifier;
use crate::error::{Error, Result};
use crate::flow_model::{LabeledDataset, N_CLASSES};
use crate::scalar::{softmax, Scalar};

pub type RegressionTree<T> = Tree<T, T>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub max_leaves: usize,
    pub lambda_l2: f64,
    pub gamma_leaf: f64,
    pub min_samples_leaf: usize,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            learning_rate: 0.05,
            max_depth: 10,
            max_leaves: 64,
            lambda_l2: 1.0,
            gamma_leaf: 0.0,
            min_samples_leaf: 20,
            min_child_weight: 1e-3,
            seed: 0,
        }
    }
}

impl BoostParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadHyperparameter(m.into()));
        if self.rounds == 0 {
            return bad("rounds must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be >= 2");
        }
        if self.lambda_l2 < 0.0 || self.gamma_leaf < 0.0 {
            return bad("lambda_l2 and gamma_leaf must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees<T> {
    pub params: BoostParams,
    pub n_features: usize,
    pub base_scores: Vec<T>,
    /// `rounds[r][k]` is the class-`k` tree of round `r`; leaves hold unshrunk Newton values.
    pub rounds: Vec<Vec<RegressionTree<T>>>,
    /// Mean training log-loss before any round, then after each round.
    pub train_loss: Vec<T>,
}

/// Smoothed log class priors.
fn log_prior<T: Scalar>(counts: &[usize]) -> Vec<T> {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| (T::of_usize(c + 1) / T::of_usize(n + counts.len())).ln())
        .collect()
}

fn mean_log_loss<T: Scalar>(margins: &[Vec<T>], labels: &[usize]) -> T {
    let total: T = margins
        .iter()
        .zip(labels)
        .map(|(m, &y)| {
            let max = m.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + m.iter().map(|v| (*v - max).exp()).sum::<T>().ln();
            lse - m[y]
        })
        .sum();
    total / T::of_usize(labels.len())
}

struct Candidate<T> {
    node: usize,
    depth: usize,
    index: SortedIndex,
    grad: T,
    hess: T,
    split: Option<(usize, T, T)>,
}

struct RegressionGrower<'a, T> {
    rows: &'a Array2<T>,
    grad: &'a [T],
    hess: &'a [T],
    params: &'a BoostParams,
    lambda: T,
}

impl<T: Scalar> RegressionGrower<'_, T> {
    fn score(&self, g: T, h: T) -> T {
        g * g / (h + self.lambda)
    }

    /// Best (feature, threshold, gain) over all features; only positive gains qualify.
    fn best_split(&self, index: &SortedIndex, g_tot: T, h_tot: T) -> Option<(usize, T, T)> {
        let n = index.len();
        let msl = self.params.min_samples_leaf.max(1);
        if n < 2 * msl {
            return None;
        }
        let half = T::of(0.5);
        let gamma = T::of(self.params.gamma_leaf);
        let mcw = T::of(self.params.min_child_weight);
        let parent = self.score(g_tot, h_tot);
        let mut best: Option<(usize, T, T)> = None;
        for (f, list) in index.lists.iter().enumerate() {
            let (mut gl, mut hl) = (T::zero(), T::zero());
            for pos in 0..n - 1 {
                let i = list[pos] as usize;
                gl += self.grad[i];
                hl += self.hess[i];
                if pos + 1 < msl || n - pos - 1 < msl {
                    continue;
                }
                let (v, next) = (self.rows[[i, f]], self.rows[[list[pos + 1] as usize, f]]);
                if !(next > v) {
                    continue;
                }
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = half * (self.score(gl, hl) + self.score(gr, hr) - parent) - gamma;
                if gain > T::zero() && best.is_none_or(|b| gain > b.2) {
                    best = Some((f, midpoint(v, next), gain));
                }
            }
        }
        best
    }

    fn candidate(&self, node: usize, depth: usize, index: SortedIndex) -> Candidate<T> {
        let (mut g, mut h) = (T::zero(), T::zero());
        for &i in index.members() {
            g += self.grad[i as usize];
            h += self.hess[i as usize];
        }
        let split = if depth < self.params.max_depth {
            self.best_split(&index, g, h)
        } else {
            None
        };
        Candidate {
            node,
            depth,
            index,
            grad: g,
            hess: h,
            split,
        }
    }

    fn grow(&self, root: SortedIndex) -> RegressionTree<T> {
        let mut nodes: Vec<Node<T, T>> = vec![Node::Leaf { value: T::zero() }];
        let mut open = vec![self.candidate(0, 0, root)];
        let mut mask = vec![false; self.grad.len()];
        let mut leaves = 1;
        while leaves < self.params.max_leaves {
            // Largest gain first; ties go to the earliest-created leaf.
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(k, c)| c.split.map(|s| (k, c.node, s.2)))
                .fold(None::<(usize, usize, T)>, |acc, cur| match acc {
                    Some(a) if !(cur.2 > a.2 || (cur.2 == a.2 && cur.1 < a.1)) => Some(a),
                    _ => Some(cur),
                });
            let Some((k, _, _)) = pick else { break };
            let cand = open.swap_remove(k);
            let (feature, threshold, _) = cand.split.expect("picked candidates have a split");
            for &i in cand.index.members() {
                mask[i as usize] = self.rows[[i as usize, feature]] <= threshold;
            }
            let (l, r) = cand.index.partition(&mask);
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { value: T::zero() });
            nodes.push(Node::Leaf { value: T::zero() });
            nodes[cand.node] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            open.push(self.candidate(left, cand.depth + 1, l));
            open.push(self.candidate(right, cand.depth + 1, r));
            leaves += 1;
        }
        for c in open {
            nodes[c.node] = Node::Leaf {
                value: -c.grad / (c.hess + self.lambda),
            };
        }
        Tree {
            nodes,
            n_features: self.rows.ncols(),
        }
    }
}

pub fn gbdt_fit<T: Scalar>(ds: &LabeledDataset<T>, params: &BoostParams) -> Result<BoostedTrees<T>> {
    params.validate()?;
    if ds.len() < 2 {
        return Err(Error::EmptyData);
    }
    let n = ds.len();
    let labels = ds.label_codes();
    let eta = T::of(params.learning_rate);
    let base_scores: Vec<T> = log_prior(&ds.class_counts());
    let mut margins: Vec<Vec<T>> = vec![base_scores.clone(); n];
    let all: Vec<u32> = (0..n as u32).collect();
    let root = SortedIndex::build(&ds.rows, &all);
    let mut train_loss = vec![mean_log_loss(&margins, &labels)];
    let mut rounds = Vec::with_capacity(params.rounds);

    for _ in 0..params.rounds {
        let probs: Vec<Vec<T>> = margins.iter().map(|m| softmax(m)).collect();
        let trees: Vec<RegressionTree<T>> = (0..N_CLASSES)
            .into_par_iter()
            .map(|k| {
                let grad: Vec<T> = probs
                    .iter()
                    .zip(&labels)
                    .map(|(p, &y)| p[k] - if y == k { T::one() } else { T::zero() })
                    .collect();
                let hess: Vec<T> = probs
                    .iter()
                    .map(|p| (p[k] * (T::one() - p[k])).max(T::of(1e-16)))
                    .collect();
                RegressionGrower {
                    rows: &ds.rows,
                    grad: &grad,
                    hess: &hess,
                    params,
                    lambda: T::of(params.lambda_l2),
                }
                .grow(root.clone())
            })
            .collect();
        for (i, m) in margins.iter_mut().enumerate() {
            let x = ds.row(i);
            for (k, t) in trees.iter().enumerate() {
                m[k] += eta * *t.leaf(x);
            }
        }
        let loss = mean_log_loss(&margins, &labels);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: rounds.len(),
                loss: loss.as_f64(),
            });
        }
        train_loss.push(loss);
        rounds.push(trees);
    }

    Ok(BoostedTrees {
        params: *params,
        n_features: ds.n_features(),
        base_scores,
        rounds,
        train_loss,
    })
}

impl<T: Scalar> BoostedTrees<T> {
    /// Accumulated per-class margins after the first `upto` rounds.
    pub fn margins_after(&self, x: &[T], upto: usize) -> Result<Vec<T>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let eta = T::of(self.params.learning_rate);
        let mut m = self.base_scores.clone();
        for round in self.rounds.iter().take(upto) {
            for (k, t) in round.iter().enumerate() {
                m[k] += eta * *t.leaf(x);
            }
        }
        Ok(m)
    }

    pub fn margins(&self, x: &[T]) -> Result<Vec<T>> {
        self.margins_after(x, self.rounds.len())
    }
}

impl<T: Scalar> Classifier<T> for BoostedTrees<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.margins(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_model::AttackGroup;

    fn separable(n: usize) -> LabeledDataset<f64> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let a = (i * 7919 % 1000) as f64 / 1000.0;
            let b = (i * 104729 % 997) as f64 / 997.0;
            rows.push(vec![a, b]);
            labels.push(if a + b > 1.0 { AttackGroup::Dos } else { AttackGroup::Benign });
        }
        LabeledDataset::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap()
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let ds = separable(10);
        for p in [
            BoostParams { rounds: 0, ..Default::default() },
            BoostParams { learning_rate: 0.0, ..Default::default() },
            BoostParams { learning_rate: 1.5, ..Default::default() },
        ] {
            assert!(matches!(gbdt_fit(&ds, &p), Err(Error::BadHyperparameter(_))));
        }
    }

    #[test]
    fn learns_and_loss_does_not_increase() {
        let ds = separable(400);
        let m = gbdt_fit(&ds, &BoostParams { rounds: 30, min_samples_leaf: 5, ..Default::default() }).unwrap();
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        let correct = (0..ds.len())
            .filter(|&i| m.predict(ds.row(i)).unwrap() == ds.labels[i].code())
            .count();
        assert!(correct as f64 / ds.len() as f64 > 0.9);
        for t in m.rounds.iter().flatten() {
            assert!(t.n_leaves() <= 64 && t.depth() <= 10);
        }
    }

    #[test]
    fn each_round_moves_margins_by_eta_times_leaf() {
        let ds = separable(200);
        let m = gbdt_fit(&ds, &BoostParams { rounds: 3, min_samples_leaf: 5, ..Default::default() }).unwrap();
        let x = ds.row(17);
        let before = m.margins_after(x, 2).unwrap();
        let after = m.margins_after(x, 3).unwrap();
        for k in 0..N_CLASSES {
            let step = 0.05 * m.rounds[2][k].leaf(x);
            assert!((after[k] - before[k] - step).abs() < 1e-12);
        }
        assert_eq!(m.rounds[0].len(), N_CLASSES);
    }

    #[test]
    fn uniform_base_and_no_rounds_gives_uniform_probs() {
        let m = BoostedTrees::<f64> {
            params: BoostParams::default(),
            n_features: 2,
            base_scores: vec![0.0; N_CLASSES],
            rounds: vec![],
            train_loss: vec![],
        };
        let p = m.predict_proba(&[0.3, 0.1]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 7.0).abs() < 1e-12));
        assert!(m.predict_proba(&[0.3]).is_err());
    }

    #[test]
    fn respects_leaf_budget() {
        let ds = separable(500);
        let p = BoostParams { rounds: 2, max_leaves: 4, max_depth: 10, min_samples_leaf: 1, ..Default::default() };
        let m = gbdt_fit(&ds, &p).unwrap();
        assert!(m.rounds.iter().flatten().all(|t| t.n_leaves() <= 4));
        let p = BoostParams { rounds: 1, max_depth: 1, min_samples_leaf: 1, ..Default::default() };
        let m = gbdt_fit(&ds, &p).unwrap();
        assert!(m.rounds.iter().flatten().all(|t| t.depth() <= 1));
    }

    #[test]
    fn f32_fits() {
        let ds = separable(200).cast::<f32>();
        let m = gbdt_fit(&ds, &BoostParams { rounds: 5, min_samples_leaf: 5, ..Default::default() }).unwrap();
        let p = m.predict_proba(ds.row(0)).unwrap();
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }
}
