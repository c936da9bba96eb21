use ndarray::Array2;

use crate::scalar::Scalar;

/// Row ids of one node, kept sorted by every feature (ties by row id).
/// Splitting a node partitions each list stably, so children stay sorted
/// without re-sorting.
#[derive(Debug, Clone)]
pub(crate) struct SortedIndex {
    pub lists: Vec<Vec<u32>>,
}

impl SortedIndex {
    pub fn build<T: Scalar>(rows: &Array2<T>, members: &[u32]) -> Self {
        let lists = (0..rows.ncols())
            .map(|f| {
                let mut l = members.to_vec();
                l.sort_by(|&a, &b| {
                    rows[[a as usize, f]]
                        .partial_cmp(&rows[[b as usize, f]])
                        .expect("finite features")
                        .then(a.cmp(&b))
                });
                l
            })
            .collect();
        Self { lists }
    }

    pub fn len(&self) -> usize {
        self.lists.first().map_or(0, Vec::len)
    }

    /// Members in row-id order-independent form (feature 0 order).
    pub fn members(&self) -> &[u32] {
        self.lists.first().map_or(&[], Vec::as_slice)
    }

    /// `goes_left` is indexed by row id and only read for this node's members.
    pub fn partition(self, goes_left: &[bool]) -> (Self, Self) {
        let mut left = Vec::with_capacity(self.lists.len());
        let mut right = Vec::with_capacity(self.lists.len());
        for list in self.lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| goes_left[i as usize]);
            left.push(l);
            right.push(r);
        }
        (Self { lists: left }, Self { lists: right })
    }
}

/// Split point between two consecutive distinct sorted values; `x <= t` goes left.
pub(crate) fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let mid = lo + (hi - lo) / (T::one() + T::one());
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn partition_keeps_order() {
        let rows = array![[3.0f64, 0.0], [1.0, 5.0], [2.0, 4.0], [0.0, 1.0]];
        let idx = SortedIndex::build(&rows, &[0, 1, 2, 3]);
        assert_eq!(idx.lists[0], vec![3, 1, 2, 0]);
        assert_eq!(idx.lists[1], vec![0, 3, 2, 1]);
        let mask = vec![true, false, true, false];
        let (l, r) = idx.partition(&mask);
        assert_eq!(l.lists[0], vec![2, 0]);
        assert_eq!(l.lists[1], vec![0, 2]);
        assert_eq!(r.lists[1], vec![3, 1]);
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        assert_eq!(midpoint(1.0f64, 2.0), 1.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
    }
}
