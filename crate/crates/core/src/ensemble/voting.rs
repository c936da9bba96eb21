use crate::error::{Error, Result};
use crate::scalar::{argmax, Scalar};

const DISTRIBUTION_TOL: f64 = 1e-6;
const WEIGHT_TOL: f64 = 1e-9;

pub(crate) fn check_distributions<T: Scalar>(probs: &[Vec<T>]) -> Result<()> {
    let width = probs.first().map_or(0, Vec::len);
    for (row, p) in probs.iter().enumerate() {
        let sum: T = p.iter().copied().sum();
        if p.len() != width
            || p.iter().any(|v| *v < T::zero() || !v.is_finite())
            || (sum.as_f64() - 1.0).abs() > DISTRIBUTION_TOL
        {
            return Err(Error::BadDistribution {
                row,
                sum: sum.as_f64(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_weights<T: Scalar>(weights: &[T], members: usize) -> Result<()> {
    if members == 0 {
        return Err(Error::BadWeights("no members".into()));
    }
    if weights.len() != members {
        return Err(Error::BadWeights(format!("{} weights for {members} members", weights.len())));
    }
    if weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
        return Err(Error::BadWeights("weights must be finite and >= 0".into()));
    }
    let sum: T = weights.iter().copied().sum();
    if (sum.as_f64() - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::BadWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Σ_m w_m · P_m, accumulated member by member. Inputs are assumed valid.
pub(crate) fn mix<T: Scalar>(probs: &[Vec<T>], weights: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); probs[0].len()];
    for (p, &w) in probs.iter().zip(weights) {
        for (acc, v) in out.iter_mut().zip(p) {
            *acc += w * *v;
        }
    }
    out
}

/// Convex combination of member distributions; class is the argmax (ties to the lowest code).
pub fn weighted_vote<T: Scalar>(probs: &[Vec<T>], weights: &[T]) -> Result<(usize, Vec<T>)> {
    check_weights(weights, probs.len())?;
    check_distributions(probs)?;
    let m = mix(probs, weights);
    Ok((argmax(&m), m))
}

pub fn uniform_weights<T: Scalar>(m: usize) -> Vec<T> {
    vec![T::one() / T::of_usize(m); m]
}

/// Unweighted probability average; identical to [`weighted_vote`] with uniform weights.
pub fn soft_vote<T: Scalar>(probs: &[Vec<T>]) -> Result<(usize, Vec<T>)> {
    if probs.is_empty() {
        return Err(Error::BadWeights("no members".into()));
    }
    weighted_vote(probs, &uniform_weights(probs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_member_is_identity() {
        let p = vec![vec![0.1, 0.7, 0.2]];
        let (c, avg) = soft_vote(&p).unwrap();
        assert_eq!(c, 1);
        assert_eq!(avg, p[0]);
    }

    #[test]
    fn two_class_average() {
        let (c, avg) = soft_vote(&[vec![0.2f64, 0.8], vec![0.6, 0.4]]).unwrap();
        assert!((avg[0] - 0.4).abs() < 1e-15 && (avg[1] - 0.6).abs() < 1e-15);
        assert_eq!(c, 1);
    }

    #[test]
    fn identical_rows() {
        let row = vec![0.3, 0.3, 0.4];
        assert_eq!(soft_vote(&[row.clone(), row.clone(), row]).unwrap().0, 2);
    }

    #[test]
    fn degenerate_weights_select_one_member() {
        let p = vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.5, 0.5]];
        let (c, m) = weighted_vote(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m, p[0]);
        assert_eq!(c, 0);
    }

    #[test]
    fn weighted_example() {
        let (c, m) = weighted_vote(&[vec![0.9f64, 0.1], vec![0.1, 0.9]], &[0.6, 0.4]).unwrap();
        assert!((m[0] - 0.58).abs() < 1e-12 && (m[1] - 0.42).abs() < 1e-12);
        assert_eq!(c, 0);
    }

    #[test]
    fn ties_go_low() {
        assert_eq!(soft_vote(&[vec![0.5, 0.5]]).unwrap().0, 0);
    }

    #[test]
    fn validation() {
        assert!(matches!(soft_vote(&[vec![0.5, 0.6]]), Err(Error::BadDistribution { row: 0, .. })));
        assert!(matches!(
            weighted_vote(&[vec![1.0], vec![1.0]], &[0.5, 0.6]),
            Err(Error::BadWeights(_))
        ));
        assert!(matches!(
            weighted_vote(&[vec![1.0], vec![1.0]], &[1.5, -0.5]),
            Err(Error::BadWeights(_))
        ));
        assert!(soft_vote::<f64>(&[]).is_err());
    }
}
