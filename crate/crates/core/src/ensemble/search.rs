use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::voting::{check_distributions, mix};
use crate::error::{Error, Result};
use crate::flow_model::LabeledDataset;
use crate::metrics::macro_f1;
use crate::models::Classifier;
use crate::scalar::{argmax, Scalar};

pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<T> {
    pub weights: Vec<T>,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch<T> {
    pub weights: Vec<T>,
    pub macro_f1: f64,
    /// Every grid point in lexicographic order with its validation score.
    pub log: Vec<GridPoint<T>>,
}

/// All compositions of `1/step` into `m` non-negative parts, lexicographically ascending.
pub fn simplex_grid(m: usize, step: f64) -> Result<Vec<Vec<usize>>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::BadStep(step));
    }
    let inv = 1.0 / step;
    let units = inv.round();
    if (inv - units).abs() > 1e-9 {
        return Err(Error::BadStep(step));
    }
    fn fill(m: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(m - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(m, units as usize, &mut Vec::with_capacity(m), &mut out);
    Ok(out)
}

/// Exhaustive simplex search over precomputed member probabilities
/// (`member_probs[m][i]` is member m's distribution for validation row i).
/// Picks the highest validation macro-F1; ties go to the lexicographically smallest weights.
pub fn search_weights_from_probs<T: Scalar>(
    member_probs: &[Vec<Vec<T>>],
    y_val: &[usize],
    step: f64,
) -> Result<WeightSearch<T>> {
    let m = member_probs.len();
    if !(2..=4).contains(&m) {
        return Err(Error::BadHyperparameter(format!("weight search needs 2–4 members, got {m}")));
    }
    if y_val.is_empty() {
        return Err(Error::BadHyperparameter("empty validation set".into()));
    }
    let mut distinct = y_val.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::BadHyperparameter("validation set needs at least 2 classes".into()));
    }
    for probs in member_probs {
        if probs.len() != y_val.len() {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: y_val.len(),
            });
        }
        check_distributions(probs)?;
    }
    let grid = simplex_grid(m, step)?;
    let units = T::of_usize(grid[0].iter().sum());
    let log: Vec<GridPoint<T>> = grid
        .par_iter()
        .map(|parts| {
            let weights: Vec<T> = parts.iter().map(|&k| T::of_usize(k) / units).collect();
            let pred: Vec<usize> = (0..y_val.len())
                .map(|i| {
                    let rows: Vec<Vec<T>> = member_probs.iter().map(|p| p[i].clone()).collect();
                    argmax(&mix(&rows, &weights))
                })
                .collect();
            let score = macro_f1(y_val, &pred)?;
            Ok(GridPoint {
                weights,
                macro_f1: score,
            })
        })
        .collect::<Result<_>>()?;
    let best = log
        .iter()
        .fold(&log[0], |b, p| if p.macro_f1 > b.macro_f1 { p } else { b });
    Ok(WeightSearch {
        weights: best.weights.clone(),
        macro_f1: best.macro_f1,
        log,
    })
}

pub fn member_probabilities<T: Scalar>(
    members: &[&dyn Classifier<T>],
    ds: &LabeledDataset<T>,
) -> Result<Vec<Vec<Vec<T>>>> {
    members
        .iter()
        .map(|model| {
            (0..ds.len())
                .into_par_iter()
                .map(|i| model.predict_proba(ds.row(i)))
                .collect()
        })
        .collect()
}

pub fn search_weights<T: Scalar>(
    members: &[&dyn Classifier<T>],
    val: &LabeledDataset<T>,
    step: f64,
) -> Result<WeightSearch<T>> {
    let probs = member_probabilities(members, val)?;
    search_weights_from_probs(&probs, &val.label_codes(), step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(c: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[c] = 1.0;
        v
    }

    #[test]
    fn grid_sizes_and_order() {
        assert_eq!(simplex_grid(2, 0.5).unwrap(), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(simplex_grid(3, 0.1).unwrap().len(), 66);
        assert_eq!(simplex_grid(4, 0.1).unwrap().len(), 286);
        assert!(matches!(simplex_grid(2, 0.3), Err(Error::BadStep(_))));
        assert!(matches!(simplex_grid(2, 0.0), Err(Error::BadStep(_))));
    }

    #[test]
    fn dominant_member_gets_all_weight() {
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let good: Vec<Vec<f64>> = y.iter().map(|&c| onehot(c, 7)).collect();
        let bad: Vec<Vec<f64>> = y.iter().map(|&c| onehot((c + 1) % 3, 7)).collect();
        let s = search_weights_from_probs(&[bad.clone(), good.clone()], &y, 0.1).unwrap();
        assert_eq!(s.weights[1], 1.0);
        let s = search_weights_from_probs(&[good, bad.clone(), bad], &y, 0.5).unwrap();
        assert_eq!(s.weights, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn identical_members_tie_break_lexicographically() {
        let y = vec![0, 1, 0, 1];
        let p: Vec<Vec<f64>> = vec![vec![0.8, 0.2], vec![0.3, 0.7], vec![0.6, 0.4], vec![0.1, 0.9]];
        let s = search_weights_from_probs(&[p.clone(), p], &y, 0.5).unwrap();
        assert_eq!(s.weights, vec![0.0, 1.0]);
        assert_eq!(s.log.len(), 3);
    }

    #[test]
    fn never_worse_than_a_corner() {
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let a: Vec<Vec<f64>> = (0..40).map(|i| if i % 3 == 0 { vec![0.4, 0.6] } else { vec![0.7, 0.3] }).collect();
        let b: Vec<Vec<f64>> = (0..40).map(|i| if i % 2 == 1 { vec![0.45, 0.55] } else { vec![0.9, 0.1] }).collect();
        let s = search_weights_from_probs(&[a, b], &y, 0.1).unwrap();
        let corners: Vec<f64> = s
            .log
            .iter()
            .filter(|p| p.weights.iter().any(|w| *w == 1.0))
            .map(|p| p.macro_f1)
            .collect();
        assert!(corners.iter().all(|c| s.macro_f1 >= *c));
    }

    #[test]
    fn preconditions() {
        let y = vec![0, 0];
        let p = vec![vec![1.0, 0.0]; 2];
        assert!(search_weights_from_probs(&[p.clone(), p.clone()], &y, 0.5).is_err());
        assert!(search_weights_from_probs(&[p.clone()], &[0, 1], 0.5).is_err());
        assert!(matches!(
            search_weights_from_probs(&[p.clone(), p], &[0, 1], 0.3),
            Err(Error::BadStep(_))
        ));
    }
}
