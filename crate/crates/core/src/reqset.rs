use serde::{Deserialize, Serialize};

/// Set of request indices below [`crate::MAX_REQUESTS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReqSet(pub u128);

impl ReqSet {
    pub const EMPTY: ReqSet = ReqSet(0);

    pub fn single(r: usize) -> Self {
        ReqSet(1u128 << r)
    }

    pub fn contains(self, r: usize) -> bool {
        self.0 >> r & 1 == 1
    }

    pub fn insert(&mut self, r: usize) {
        self.0 |= 1u128 << r;
    }

    pub fn remove(&mut self, r: usize) {
        self.0 &= !(1u128 << r);
    }

    pub fn with(mut self, r: usize) -> Self {
        self.insert(r);
        self
    }

    pub fn without(mut self, r: usize) -> Self {
        self.remove(r);
        self
    }

    pub fn is_subset(self, other: ReqSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: ReqSet) -> ReqSet {
        ReqSet(self.0 | other.0)
    }

    pub fn intersects(self, other: ReqSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let r = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(r)
            }
        })
    }
}

impl FromIterator<usize> for ReqSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ReqSet::EMPTY;
        for r in iter {
            s.insert(r);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let a: ReqSet = [1, 5, 127].into_iter().collect();
        assert!(a.contains(127) && a.contains(1) && !a.contains(2));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 5, 127]);
        assert_eq!(a.len(), 3);
        assert!(ReqSet::single(5).is_subset(a));
        assert!(!a.is_subset(ReqSet::single(5)));
        assert_eq!(a.without(5).without(1), ReqSet::single(127));
    }
}
