use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Equal-width bin index of every value over `[min, max]`; one bin when the column is constant.
pub fn discretize<T: Scalar>(values: &[T], bins: usize) -> Vec<usize> {
    let (min, max) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(max > min) {
        return vec![0; values.len()];
    }
    let width = max - min;
    let nb = T::of_usize(bins);
    values
        .iter()
        .map(|&v| {
            let b = ((v - min) / width * nb).floor().to_usize().unwrap_or(0);
            b.min(bins - 1)
        })
        .collect()
}

/// Mutual information (nats) between an equal-width-binned feature and class codes.
pub fn mutual_information<T: Scalar>(feature: &[T], labels: &[usize], bins: usize) -> Result<T> {
    if feature.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: feature.len(),
            right: labels.len(),
        });
    }
    if bins < 2 {
        return Err(Error::BadBins(bins));
    }
    if feature.is_empty() {
        return Ok(T::zero());
    }
    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let binned = discretize(feature, bins);
    let mut joint = vec![0usize; bins * n_classes];
    let mut pb = vec![0usize; bins];
    let mut pc = vec![0usize; n_classes];
    for (&b, &c) in binned.iter().zip(labels) {
        joint[b * n_classes + c] += 1;
        pb[b] += 1;
        pc[c] += 1;
    }
    let n = T::of_usize(feature.len());
    let mut mi = T::zero();
    for b in 0..bins {
        for c in 0..n_classes {
            let nbc = joint[b * n_classes + c];
            if nbc == 0 {
                continue;
            }
            let pbc = T::of_usize(nbc) / n;
            // p(b,c) / (p(b) p(c)) = n_bc * n / (n_b * n_c)
            let ratio = T::of_usize(nbc) * n / (T::of_usize(pb[b]) * T::of_usize(pc[c]));
            mi += pbc * ratio.ln();
        }
    }
    Ok(mi.max(T::zero()))
}
