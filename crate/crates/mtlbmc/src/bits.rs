//! Dense bit-set and bit-matrix helpers used by the order relations.

/// A fixed-capacity dense bit set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    /// An empty set with capacity for `len` elements.
    pub fn new(len: usize) -> BitSet {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Capacity of this set.
    pub fn capacity(&self) -> usize {
        self.len
    }

    /// Inserts `i`; returns true if it was newly inserted.
    pub fn insert(&mut self, i: usize) -> bool {
        debug_assert!(i < self.len);
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.words[w] & b == 0;
        self.words[w] |= b;
        fresh
    }

    /// Membership test.
    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Union with another set of the same capacity.
    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Iterates set elements in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    /// Number of elements.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// A square boolean matrix stored as packed rows; `get(i, j)` reads bit `j`
/// of row `i`. Relations over dense event indices use this for closure and
/// reachability computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMat {
    n: usize,
    row_words: usize,
    data: Vec<u64>,
}

impl BitMat {
    /// An all-false `n` by `n` matrix.
    pub fn new(n: usize) -> BitMat {
        let row_words = n.div_ceil(64).max(1);
        BitMat {
            n,
            row_words,
            data: vec![0; row_words * n],
        }
    }

    /// Side length.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True for the zero-sized matrix.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Sets entry `(i, j)`; returns true if it was newly set.
    pub fn set(&mut self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        let idx = i * self.row_words + j / 64;
        let bit = 1u64 << (j % 64);
        let fresh = self.data[idx] & bit == 0;
        self.data[idx] |= bit;
        fresh
    }

    /// Reads entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.data[i * self.row_words + j / 64] & (1u64 << (j % 64)) != 0
    }

    /// ORs row `src` into row `dst`; returns true if `dst` changed.
    pub fn or_row(&mut self, dst: usize, src: usize) -> bool {
        debug_assert!(dst < self.n && src < self.n && dst != src);
        let (d, s) = (dst * self.row_words, src * self.row_words);
        let mut changed = false;
        for k in 0..self.row_words {
            let merged = self.data[d + k] | self.data[s + k];
            changed |= merged != self.data[d + k];
            self.data[d + k] = merged;
        }
        changed
    }

    /// Iterates the set column indices of row `i`.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(i < self.n);
        let base = i * self.row_words;
        (0..self.row_words).flat_map(move |wi| {
            let mut bits = self.data[base + wi];
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    /// All set entries as `(row, col)` pairs.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.row_iter(i).map(move |j| (i, j)))
    }

    /// In-place transitive closure (Warshall over packed rows).
    pub fn close_transitively(&mut self) {
        for k in 0..self.n {
            for i in 0..self.n {
                if i != k && self.get(i, k) {
                    self.or_row(i, k);
                }
            }
        }
    }

    /// True if some `(i, i)` entry is set.
    pub fn reflexive_entry(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.get(i, i))
    }
}
