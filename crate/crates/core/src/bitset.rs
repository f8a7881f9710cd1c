//! Fixed-universe voter sets backed by 64-bit words.
//!
//! Tallying dominates the simulation hot path, so voter sets are stored as
//! bitmasks and tallies reduce to word-wise AND + popcount.

/// A subset of the voters `{0, .., universe-1}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct VoterSet {
    universe: u32,
    words: Vec<u64>,
}

#[inline]
fn word_count(universe: u32) -> usize {
    (universe as usize).div_ceil(64)
}

impl VoterSet {
    pub fn empty(universe: u32) -> Self {
        VoterSet {
            universe,
            words: vec![0; word_count(universe)],
        }
    }

    pub fn full(universe: u32) -> Self {
        let mut s = Self::empty(universe);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim_tail();
        s
    }

    pub fn from_members(universe: u32, members: impl IntoIterator<Item = u32>) -> Self {
        let mut s = Self::empty(universe);
        for m in members {
            s.insert(m);
        }
        s
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    /// Zero out bits beyond the universe so equality and popcounts stay exact.
    fn trim_tail(&mut self) {
        let rem = self.universe % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn insert(&mut self, v: u32) {
        debug_assert!(v < self.universe);
        self.words[(v / 64) as usize] |= 1u64 << (v % 64);
    }

    #[inline]
    pub fn remove(&mut self, v: u32) {
        debug_assert!(v < self.universe);
        self.words[(v / 64) as usize] &= !(1u64 << (v % 64));
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        v < self.universe && self.words[(v / 64) as usize] & (1u64 << (v % 64)) != 0
    }

    pub fn clear(&mut self) {
        for w in self.words.iter_mut() {
            *w = 0;
        }
    }

    pub fn len(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset_of(&self, other: &VoterSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Popcount of the intersection with `other`.
    pub fn count_and(&self, other: &VoterSet) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Popcount of the three-way intersection.
    pub fn count_and2(&self, b: &VoterSet, c: &VoterSet) -> u32 {
        self.words
            .iter()
            .zip(&b.words)
            .zip(&c.words)
            .map(|((x, y), z)| (x & y & z).count_ones())
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some(wi as u32 * 64 + tz)
                }
            })
        })
    }

    /// The set as a single `u64` mask, when the universe fits in one word.
    pub fn as_u64(&self) -> Option<u64> {
        if self.universe <= 64 {
            Some(self.words.first().copied().unwrap_or(0))
        } else {
            None
        }
    }

    pub fn from_u64(universe: u32, mask: u64) -> Self {
        debug_assert!(universe <= 64);
        let mut s = Self::empty(universe);
        if !s.words.is_empty() {
            s.words[0] = mask;
            s.trim_tail();
        }
        s
    }
}

impl std::fmt::Display for VoterSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_contains_iter() {
        let mut s = VoterSet::empty(130);
        for v in [0, 63, 64, 129] {
            s.insert(v);
        }
        assert!(s.contains(0) && s.contains(63) && s.contains(64) && s.contains(129));
        assert!(!s.contains(1) && !s.contains(128));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn full_respects_universe() {
        let s = VoterSet::full(70);
        assert_eq!(s.len(), 70);
        assert!(!s.contains(70));
        assert_eq!(VoterSet::full(0).len(), 0);
    }

    #[test]
    fn intersection_counts() {
        let a = VoterSet::from_members(10, [1, 2, 3, 7]);
        let b = VoterSet::from_members(10, [2, 3, 4]);
        let c = VoterSet::from_members(10, [3, 4, 7]);
        assert_eq!(a.count_and(&b), 2);
        assert_eq!(a.count_and2(&b, &c), 1);
        assert!(VoterSet::from_members(10, [2, 3]).is_subset_of(&a));
        assert!(!b.is_subset_of(&a));
    }

    #[test]
    fn u64_roundtrip() {
        let s = VoterSet::from_members(20, [0, 5, 19]);
        let m = s.as_u64().unwrap();
        assert_eq!(VoterSet::from_u64(20, m), s);
        assert!(VoterSet::empty(65).as_u64().is_none());
    }
}
