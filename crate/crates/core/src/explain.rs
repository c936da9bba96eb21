//! Shapley attributions with an interventional value function: exact
//! enumeration for small feature counts, permutation sampling otherwise.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::flow_model::{AttackGroup, LabeledDataset};
use crate::models::Classifier;
use crate::rng::seeded;
use crate::scalar::Scalar;

pub const MAX_EXACT_FEATURES: usize = 12;
pub const DEFAULT_PERMUTATIONS: usize = 200;
pub const DEFAULT_BACKGROUND: usize = 100;

/// Scalar model output being explained.
pub trait ScoreFn<T>: Sync {
    fn score(&self, x: &[T]) -> Result<T>;
}

impl<T, F> ScoreFn<T> for F
where
    F: Fn(&[T]) -> Result<T> + Sync,
{
    fn score(&self, x: &[T]) -> Result<T> {
        self(x)
    }
}

/// Probability the model assigns to one class.
pub struct ClassProbability<'a, C: ?Sized> {
    pub model: &'a C,
    pub class: usize,
}

impl<T: Scalar, C: Classifier<T> + ?Sized> ScoreFn<T> for ClassProbability<'_, C> {
    fn score(&self, x: &[T]) -> Result<T> {
        Ok(self.model.predict_proba(x)?[self.class])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation<T> {
    pub phi: Vec<T>,
    /// Value of the empty coalition: mean output over the background.
    pub baseline: T,
    pub fx: T,
    pub class_explained: Option<AttackGroup>,
    pub method: ShapMethod,
    pub n_permutations: usize,
    /// Per-feature standard error; zeros in exact mode.
    pub stderr: Vec<T>,
    pub seed: Option<u64>,
}

impl<T: Scalar> ShapExplanation<T> {
    /// |Σφ + baseline − fx|.
    pub fn efficiency_gap(&self) -> T {
        let total: T = self.phi.iter().copied().sum();
        (total + self.baseline - self.fx).abs()
    }

    pub fn to_report(&self, feature_names: &[String]) -> Value {
        let named = |v: &[T]| -> Map<String, Value> {
            feature_names
                .iter()
                .zip(v)
                .map(|(n, x)| (n.clone(), json!(x.as_f64())))
                .collect()
        };
        json!({
            "phi": named(&self.phi),
            "stderr": named(&self.stderr),
            "baseline": self.baseline.as_f64(),
            "fx": self.fx.as_f64(),
            "efficiency_gap": self.efficiency_gap().as_f64(),
            "class_explained": self.class_explained,
            "method": self.method,
            "n_permutations": self.n_permutations,
            "seed": self.seed,
        })
    }
}

fn check_inputs<T>(x: &[T], background: &Array2<T>) -> Result<()> {
    if background.nrows() == 0 {
        return Err(Error::EmptyBackground);
    }
    if background.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: background.ncols(),
        });
    }
    Ok(())
}

/// Mean output over background rows with the features in `in_coalition` taken from `x`.
pub fn coalition_value<T: Scalar, F: ScoreFn<T> + ?Sized>(
    f: &F,
    x: &[T],
    background: &Array2<T>,
    in_coalition: &[bool],
) -> Result<T> {
    check_inputs(x, background)?;
    let mut z = vec![T::zero(); x.len()];
    let mut total = T::zero();
    for b in background.rows() {
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = if in_coalition[j] { x[j] } else { b[j] };
        }
        total += f.score(&z)?;
    }
    Ok(total / T::of_usize(background.nrows()))
}

fn mask_members(mask: usize, d: usize) -> Vec<bool> {
    (0..d).map(|j| mask >> j & 1 == 1).collect()
}

/// Direct evaluation of the Shapley sum over all 2^d coalitions.
pub fn shap_exact<T: Scalar, F: ScoreFn<T> + ?Sized>(
    f: &F,
    x: &[T],
    background: &Array2<T>,
) -> Result<ShapExplanation<T>> {
    check_inputs(x, background)?;
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            got: d,
            max: MAX_EXACT_FEATURES,
        });
    }
    let values = (0..1usize << d)
        .into_par_iter()
        .map(|mask| coalition_value(f, x, background, &mask_members(mask, d)))
        .collect::<Result<Vec<T>>>()?;
    // |S|!(d−|S|−1)!/d!
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<T> = (0..d).map(|s| T::of(fact[s] * fact[d - s - 1] / fact[d])).collect();
    let phi = (0..d)
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = T::zero();
            for mask in (0..1usize << d).filter(|m| m & bit == 0) {
                let s = mask.count_ones() as usize;
                acc += weight[s] * (values[mask | bit] - values[mask]);
            }
            acc
        })
        .collect();
    Ok(ShapExplanation {
        phi,
        baseline: values[0],
        fx: f.score(x)?,
        class_explained: None,
        method: ShapMethod::Exact,
        n_permutations: 0,
        stderr: vec![T::zero(); d],
        seed: None,
    })
}

/// Average marginal contributions over `n_permutations` random orderings.
/// Every ordering telescopes to `v(F) − v(∅)`, so efficiency holds for any count.
pub fn shap_sampled<T: Scalar, F: ScoreFn<T> + ?Sized>(
    f: &F,
    x: &[T],
    background: &Array2<T>,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapExplanation<T>> {
    check_inputs(x, background)?;
    if n_permutations == 0 {
        return Err(Error::BadHyperparameter("n_permutations must be >= 1".into()));
    }
    let d = x.len();
    let empty = coalition_value(f, x, background, &vec![false; d])?;
    let full = coalition_value(f, x, background, &vec![true; d])?;
    let contributions = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = seeded(seed, p as u64);
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            let mut member = vec![false; d];
            let mut prev = empty;
            let mut out = vec![T::zero(); d];
            for (step, &i) in order.iter().enumerate() {
                member[i] = true;
                let v = if step + 1 == d {
                    full
                } else {
                    coalition_value(f, x, background, &member)?
                };
                out[i] = v - prev;
                prev = v;
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<T>>>>()?;

    let n = T::of_usize(n_permutations);
    let mut phi = vec![T::zero(); d];
    for c in &contributions {
        for (p, v) in phi.iter_mut().zip(c) {
            *p += *v;
        }
    }
    for p in phi.iter_mut() {
        *p /= n;
    }
    let stderr = (0..d)
        .map(|i| {
            if n_permutations < 2 {
                return T::zero();
            }
            let ss: T = contributions.iter().map(|c| (c[i] - phi[i]) * (c[i] - phi[i])).sum();
            (ss / T::of_usize(n_permutations - 1) / n).sqrt()
        })
        .collect();
    Ok(ShapExplanation {
        phi,
        baseline: empty,
        fx: full,
        class_explained: None,
        method: ShapMethod::Sampled,
        n_permutations,
        stderr,
        seed: Some(seed),
    })
}

/// Up to `max_rows` distinct rows drawn without replacement.
pub fn sample_background<T: Scalar>(ds: &LabeledDataset<T>, max_rows: usize, seed: u64) -> Result<Array2<T>> {
    if ds.is_empty() || max_rows == 0 {
        return Err(Error::EmptyBackground);
    }
    let mut rng = seeded(seed, 0);
    let mut idx = rand::seq::index::sample(&mut rng, ds.len(), max_rows.min(ds.len())).into_vec();
    idx.sort_unstable();
    Ok(ds.rows.select(ndarray::Axis(0), &idx))
}

/// Explains `class` (default: the predicted class) of `model` at `x`.
pub fn explain_class<T: Scalar, C: Classifier<T> + ?Sized>(
    model: &C,
    x: &[T],
    background: &Array2<T>,
    class: Option<usize>,
    method: ShapMethod,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapExplanation<T>> {
    let class = match class {
        Some(c) => c,
        None => model.predict(x)?,
    };
    let group = AttackGroup::from_code(class)?;
    let f = ClassProbability { model, class };
    let mut e = match method {
        ShapMethod::Exact => shap_exact(&f, x, background)?,
        ShapMethod::Sampled => shap_sampled(&f, x, background, n_permutations, seed)?,
    };
    e.class_explained = Some(group);
    Ok(e)
}
