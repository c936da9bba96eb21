use ndarray::{concatenate, Array2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow_model::{AttackGroup, LabeledDataset};
use crate::rng::seeded;
use crate::scalar::Scalar;

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// Oversampled dataset plus, for every synthetic row, the (row, neighbor) indices it was drawn between.
#[derive(Debug, Clone)]
pub struct SmoteOutput<T> {
    pub dataset: LabeledDataset<T>,
    pub parents: Vec<(usize, usize)>,
}

/// Brings every present class up to the majority count.
pub fn smote_oversample<T: Scalar>(
    ds: &LabeledDataset<T>,
    k_neighbors: usize,
    seed: u64,
) -> Result<LabeledDataset<T>> {
    Ok(smote_with_parents(ds, k_neighbors, seed)?.dataset)
}

/// Originals come first and unchanged; synthetic rows follow, class by class in code order.
pub fn smote_with_parents<T: Scalar>(
    ds: &LabeledDataset<T>,
    k_neighbors: usize,
    seed: u64,
) -> Result<SmoteOutput<T>> {
    if k_neighbors == 0 {
        return Err(Error::BadHyperparameter("k_neighbors must be >= 1".into()));
    }
    let counts = ds.class_counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    for g in AttackGroup::ALL {
        let c = counts[g.code()];
        if c > 0 && c < majority && c < 2 {
            return Err(Error::ClassTooSmall {
                class: g.to_string(),
                count: c,
            });
        }
    }

    let d = ds.n_features();
    let mut synth: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    let mut parents = Vec::new();
    for g in AttackGroup::ALL {
        let count = counts[g.code()];
        if count == 0 || count == majority {
            continue;
        }
        let members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == g).collect();
        let k = k_neighbors.min(count - 1);
        let neighbors = nearest_within(ds, &members, k);
        let mut rng = seeded(seed, g.code() as u64);
        for _ in 0..(majority - count) {
            let a = rng.random_range(0..members.len());
            let b = neighbors[a][rng.random_range(0..k)];
            let u = T::of(rng.random::<f64>());
            let (x, nn) = (ds.row(members[a]), ds.row(members[b]));
            for j in 0..d {
                let (lo, hi) = if x[j] <= nn[j] { (x[j], nn[j]) } else { (nn[j], x[j]) };
                synth.push((x[j] + u * (nn[j] - x[j])).max(lo).min(hi));
            }
            labels.push(g);
            parents.push((members[a], members[b]));
        }
    }
    if labels.is_empty() {
        return Ok(SmoteOutput {
            dataset: ds.clone(),
            parents,
        });
    }
    let extra = Array2::from_shape_vec((labels.len(), d), synth).expect("n x d");
    let rows = concatenate(Axis(0), &[ds.rows.view(), extra.view()]).expect("same width");
    let mut all_labels = ds.labels.clone();
    all_labels.extend(labels);
    Ok(SmoteOutput {
        dataset: LabeledDataset::new(ds.schema.clone(), rows, all_labels)?,
        parents,
    })
}

/// For each member, the positions (into `members`) of its k nearest other members.
fn nearest_within<T: Scalar>(ds: &LabeledDataset<T>, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .par_iter()
        .enumerate()
        .map(|(a, &ia)| {
            let xa = ds.row(ia);
            let mut dists: Vec<(T, usize)> = members
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &ib)| {
                    let dist = xa
                        .iter()
                        .zip(ds.row(ib))
                        .map(|(p, q)| (*p - *q) * (*p - *q))
                        .sum::<T>();
                    (dist, b)
                })
                .collect();
            dists.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite").then(p.1.cmp(&q.1)));
            dists.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class(n_a: usize, n_b: usize) -> LabeledDataset<f64> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_a {
            rows.push(vec![i as f64, 0.0]);
            labels.push(AttackGroup::Benign);
        }
        for i in 0..n_b {
            rows.push(vec![100.0 + i as f64, (i * i) as f64]);
            labels.push(AttackGroup::Rce);
        }
        LabeledDataset::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap()
    }

    #[test]
    fn balances_counts() {
        let out = smote_oversample(&two_class(100, 10), 5, 1).unwrap();
        let c = out.class_counts();
        assert_eq!(c[AttackGroup::Benign.code()], 100);
        assert_eq!(c[AttackGroup::Rce.code()], 100);
    }

    #[test]
    fn balanced_is_no_op() {
        let ds = two_class(10, 10);
        assert_eq!(smote_oversample(&ds, 5, 1).unwrap(), ds);
    }

    #[test]
    fn originals_are_a_prefix_and_synthetics_stay_between_parents() {
        let ds = two_class(50, 7);
        let out = smote_with_parents(&ds, 3, 11).unwrap();
        assert_eq!(out.dataset.rows.slice(ndarray::s![..ds.len(), ..]), ds.rows);
        for (s, &(p, q)) in out.parents.iter().enumerate() {
            let row = out.dataset.row(ds.len() + s);
            for j in 0..2 {
                let (x, y) = (ds.row(p)[j], ds.row(q)[j]);
                assert!(row[j] >= x.min(y) && row[j] <= x.max(y));
            }
            assert_eq!(ds.labels[p], AttackGroup::Rce);
            assert_eq!(ds.labels[q], AttackGroup::Rce);
        }
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let ds = two_class(40, 5);
        assert_eq!(smote_oversample(&ds, 5, 3).unwrap(), smote_oversample(&ds, 5, 3).unwrap());
        assert_ne!(smote_oversample(&ds, 5, 3).unwrap(), smote_oversample(&ds, 5, 4).unwrap());
    }

    #[test]
    fn singleton_minority_is_rejected() {
        assert!(matches!(
            smote_oversample(&two_class(10, 1), 5, 0),
            Err(Error::ClassTooSmall { count: 1, .. })
        ));
    }

    #[test]
    fn effective_k_is_capped_by_class_size() {
        let out = smote_with_parents(&two_class(10, 2), 5, 0).unwrap();
        assert!(out.parents.iter().all(|(a, b)| a != b));
    }
}
