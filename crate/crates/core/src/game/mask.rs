use std::fmt;

/// Fixed-length bit vector selecting the retained features of a game.
///
/// Masks are values: every operation returns a new mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoalitionMask {
    len: usize,
    words: Box<[u64]>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl CoalitionMask {
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; word_count(len)].into_boxed_slice(),
        }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for w in m.words.iter_mut() {
            *w = u64::MAX;
        }
        m.clear_tail();
        m
    }

    /// Mask whose low `len` bits are taken from `bits`. Requires `len <= 64`.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        assert!(len <= 64, "from_bits supports at most 64 features");
        let mut m = Self::empty(len);
        if len > 0 {
            m.words[0] = bits;
            m.clear_tail();
        }
        m
    }

    /// # Panics
    /// If an index is out of range.
    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut m = Self::empty(len);
        for i in indices {
            m.set(i);
        }
        m
    }

    /// Number of features in the owning game (not the number of set bits).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.len, "feature {i} out of range for {} features", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn with(&self, i: usize) -> Self {
        let mut m = self.clone();
        m.set(i);
        m
    }

    pub fn without(&self, i: usize) -> Self {
        let mut m = self.clone();
        assert!(i < self.len);
        m.words[i / 64] &= !(1u64 << (i % 64));
        m
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut m = self.clone();
        m.union_in_place(other);
        m
    }

    pub fn complement(&self) -> Self {
        let mut m = self.clone();
        for w in m.words.iter_mut() {
            *w = !*w;
        }
        m.clear_tail();
        m
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.len == other.len && self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    /// Indices of retained features in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Low 64 bits; meaningful when `len <= 64`.
    pub fn low_bits(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn set(&mut self, i: usize) {
        assert!(i < self.len, "feature {i} out of range for {} features", self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub(crate) fn union_in_place(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "mask length mismatch");
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for CoalitionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoalitionMask[{}]{{", self.len)?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_complement() {
        let full = CoalitionMask::full(70);
        assert_eq!(full.count(), 70);
        assert_eq!(full.complement(), CoalitionMask::empty(70));
        let m = CoalitionMask::from_indices(70, [0, 3, 65]);
        assert_eq!(m.complement().count(), 67);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0, 3, 65]);
    }

    #[test]
    fn from_bits_truncates_to_length() {
        let m = CoalitionMask::from_bits(3, 0b1111);
        assert_eq!(m.count(), 3);
        assert_eq!(m, CoalitionMask::full(3));
    }

    #[test]
    fn with_without_and_subset() {
        let a = CoalitionMask::from_indices(5, [1]);
        let b = a.with(4);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert_eq!(b.without(4), a);
        assert!(b.contains(4) && !a.contains(4));
    }
}
