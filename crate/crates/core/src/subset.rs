//! Item sets as bitmasks (item `i` is bit `i`) and the priority-driven
//! lexicographic order used by tie-breaking rules.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest supported item count.
pub const MAX_ITEMS: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        Subset(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Subset {
        Subset(items.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset_of(self, other: Subset) -> bool {
        self != other && self.is_subset_of(other)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn items(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `{0..n}` in bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = Subset> {
        (0..1u32 << n).map(Subset)
    }

    /// All subsets of `self`, including `self` and the empty set.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(Subset(cur))
        })
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.items().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i)?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

// Serialized as a sorted list of 0-based item indices.
impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.items())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let items = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = items.iter().find(|&&i| i >= MAX_ITEMS) {
            return Err(D::Error::custom(format!("item index {bad} out of range")));
        }
        Ok(Subset::from_items(items))
    }
}

/// A total order on sets induced by an item priority list.
///
/// Sets are compared as their items sorted by priority, dictionary style:
/// the first differing position decides, and a proper prefix comes first.
/// On sets that are not nested this agrees with "the highest-priority item of
/// the symmetric difference belongs to the earlier set".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetOrder {
    rank: Vec<u32>,
}

impl SetOrder {
    /// `priority[k]` is the item with the k-th highest priority.
    pub fn new(priority: &[usize]) -> Option<SetOrder> {
        let n = priority.len();
        let mut rank = vec![u32::MAX; n];
        for (r, &item) in priority.iter().enumerate() {
            if item >= n || rank[item] != u32::MAX {
                return None;
            }
            rank[item] = r as u32;
        }
        Some(SetOrder { rank })
    }

    pub fn identity(n: usize) -> SetOrder {
        SetOrder { rank: (0..n as u32).collect() }
    }

    pub fn rank(&self, item: usize) -> u32 {
        self.rank[item]
    }

    fn permuted(&self, s: Subset) -> u32 {
        s.items().fold(0, |m, i| m | (1 << self.rank[i]))
    }

    /// `Less` means `a` comes first.
    pub fn cmp(&self, a: Subset, b: Subset) -> Ordering {
        let (pa, pb) = (self.permuted(a), self.permuted(b));
        if pa == pb {
            return Ordering::Equal;
        }
        let x = (pa ^ pb).trailing_zeros();
        let above = !((2u32 << x).wrapping_sub(1));
        let a_has = pa >> x & 1 == 1;
        let lacks = if a_has { pb } else { pa };
        // If the set lacking x continues past it, the holder of x wins;
        // otherwise the lacking set is a prefix and comes first.
        let holder_first = lacks & above != 0;
        if holder_first == a_has {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    /// Key under which the set whose highest-priority item of the symmetric
    /// difference is larger wins. Unlike [`SetOrder::cmp`], supersets beat
    /// their subsets, so the top key of any family is inclusion-maximal in it.
    pub fn superset_first_key(&self, s: Subset) -> u32 {
        let top = self.rank.len() as u32 - 1;
        s.items().fold(0, |m, i| m | (1 << (top - self.rank[i])))
    }

    /// First set in the order, if any.
    pub fn first<I: IntoIterator<Item = Subset>>(&self, sets: I) -> Option<Subset> {
        sets.into_iter().min_by(|&a, &b| self.cmp(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(items: &[usize]) -> Subset {
        Subset::from_items(items.iter().copied())
    }

    // Brute-force dictionary comparison on priority-sorted sequences.
    fn dictionary(order: &[usize], a: Subset, b: Subset) -> Ordering {
        let seq = |x: Subset| {
            let mut v: Vec<usize> = x.items().map(|i| order.iter().position(|&o| o == i).unwrap()).collect();
            v.sort();
            v
        };
        seq(a).cmp(&seq(b))
    }

    #[test]
    fn order_matches_sequence_comparison() {
        for order in [vec![0, 1, 2, 3], vec![2, 0, 3, 1], vec![3, 2, 1, 0]] {
            let so = SetOrder::new(&order).unwrap();
            for a in Subset::all(4) {
                for b in Subset::all(4) {
                    assert_eq!(so.cmp(a, b), dictionary(&order, a, b), "{a} vs {b} under {order:?}");
                }
            }
        }
    }

    #[test]
    fn antichain_agrees_with_symmetric_difference_rule() {
        let so = SetOrder::new(&[1, 0, 2]).unwrap();
        for a in Subset::all(3) {
            for b in Subset::all(3) {
                if a.is_subset_of(b) || b.is_subset_of(a) {
                    continue;
                }
                let d = Subset(a.0 ^ b.0);
                let top = d.items().min_by_key(|&i| so.rank(i)).unwrap();
                let expect = if a.contains(top) { Ordering::Less } else { Ordering::Greater };
                assert_eq!(so.cmp(a, b), expect);
            }
        }
    }

    #[test]
    fn prefix_precedes() {
        let so = SetOrder::identity(3);
        assert_eq!(so.cmp(s(&[0]), s(&[0, 1])), Ordering::Less);
        assert_eq!(so.cmp(Subset::EMPTY, s(&[2])), Ordering::Less);
        assert_eq!(so.cmp(s(&[0, 2]), s(&[1])), Ordering::Less);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(SetOrder::new(&[0, 0]).is_none());
        assert!(SetOrder::new(&[0, 2]).is_none());
    }

    #[test]
    fn subsets_enumerates_all() {
        let m = s(&[1, 3, 4]);
        let all: Vec<Subset> = m.subsets().collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|x| x.is_subset_of(m)));
        assert_eq!(Subset::full(3), s(&[0, 1, 2]));
    }
}
