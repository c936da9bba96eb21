use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_model::{AttackGroup, LabeledDataset};
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::BadFractions(format!("each fraction must lie in (0,1): {fracs:?}")));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::BadFractions(format!("fractions must sum to 1: {fracs:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Split<T> {
    pub train: LabeledDataset<T>,
    pub val: LabeledDataset<T>,
    pub test: LabeledDataset<T>,
    /// Source row indices of each part.
    pub indices: [Vec<usize>; 3],
}

fn allocate(n: usize, spec: &SplitSpec) -> [usize; 3] {
    let mut train = (n as f64 * spec.train_frac).round() as usize;
    let mut val = (n as f64 * spec.val_frac).round() as usize;
    train = train.min(n);
    val = val.min(n - train);
    let mut sizes = [train, val, n - train - val];
    // Give every part at least one row when there are enough to go around.
    if n >= 3 {
        for part in 0..3 {
            if sizes[part] == 0 {
                let donor = (0..3).max_by_key(|&p| (sizes[p], usize::MAX - p)).expect("3 parts");
                sizes[donor] -= 1;
                sizes[part] += 1;
            }
        }
    }
    sizes
}

/// Train/validation/test partition with per-class proportional allocation.
pub fn stratified_split<T: Scalar>(ds: &LabeledDataset<T>, spec: &SplitSpec) -> Result<Split<T>> {
    spec.validate()?;
    if ds.len() < 10 {
        return Err(Error::BadFractions(format!("need at least 10 rows, got {}", ds.len())));
    }
    let mut rng = seeded(spec.seed, 0);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        AttackGroup::ALL
            .iter()
            .map(|g| (0..ds.len()).filter(|&i| ds.labels[i] == *g).collect())
            .collect()
    } else {
        vec![(0..ds.len()).collect()]
    };
    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut idx in groups {
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let sizes = allocate(idx.len(), spec);
        let mut start = 0;
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend_from_slice(&idx[start..start + size]);
            start += size;
        }
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    Ok(Split {
        train: ds.subset(&parts[0]),
        val: ds.subset(&parts[1]),
        test: ds.subset(&parts[2]),
        indices: parts,
    })
}
