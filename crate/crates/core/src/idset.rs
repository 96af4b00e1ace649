//! Dense sets of 1-based identifiers with rank selection.
//!
//! Backed by a bitset plus a Fenwick tree over per-word popcounts, so
//! `select`, `rank`, `remove` and `len` are all logarithmic or better.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdSet {
    universe: u32,
    words: Vec<u64>,
    fenwick: Vec<u32>,
    len: u32,
}

impl IdSet {
    /// The full set `{1..=universe}`.
    pub fn full(universe: u32) -> Self {
        let nwords = (universe as usize).div_ceil(64);
        let mut words = vec![u64::MAX; nwords];
        let tail = universe as usize % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << tail) - 1;
            }
        }
        let mut s = IdSet {
            universe,
            words,
            fenwick: vec![0; nwords + 1],
            len: universe,
        };
        s.rebuild();
        s
    }

    pub fn empty(universe: u32) -> Self {
        let nwords = (universe as usize).div_ceil(64);
        IdSet {
            universe,
            words: vec![0; nwords],
            fenwick: vec![0; nwords + 1],
            len: 0,
        }
    }

    pub fn from_ids(universe: u32, ids: impl IntoIterator<Item = u32>) -> Self {
        let mut s = IdSet::empty(universe);
        for id in ids {
            assert!(id >= 1 && id <= universe, "id {id} outside 1..={universe}");
            let (w, b) = Self::slot(id);
            if s.words[w] & (1 << b) == 0 {
                s.words[w] |= 1 << b;
                s.len += 1;
            }
        }
        s.rebuild();
        s
    }

    /// Inverse of [`IdSet::ranges`].
    pub fn from_ranges(universe: u32, ranges: &[(u32, u32)]) -> Self {
        Self::from_ids(universe, ranges.iter().flat_map(|&(lo, hi)| lo..=hi))
    }

    fn rebuild(&mut self) {
        let n = self.words.len();
        self.fenwick.iter_mut().for_each(|x| *x = 0);
        for i in 0..n {
            let idx = i + 1;
            self.fenwick[idx] += self.words[i].count_ones();
            let parent = idx + (idx & idx.wrapping_neg());
            if parent <= n {
                let v = self.fenwick[idx];
                self.fenwick[parent] += v;
            }
        }
    }

    #[inline]
    fn slot(id: u32) -> (usize, u32) {
        let z = (id - 1) as usize;
        (z / 64, (z % 64) as u32)
    }

    fn fenwick_dec(&mut self, word: usize) {
        let mut i = word + 1;
        while i < self.fenwick.len() {
            self.fenwick[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    fn fenwick_inc(&mut self, word: usize) {
        let mut i = word + 1;
        while i < self.fenwick.len() {
            self.fenwick[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: u32) -> bool {
        if id == 0 || id > self.universe {
            return false;
        }
        let (w, b) = Self::slot(id);
        self.words[w] >> b & 1 == 1
    }

    /// Removes `id`; returns whether it was present.
    pub fn remove(&mut self, id: u32) -> bool {
        if !self.contains(id) {
            return false;
        }
        let (w, b) = Self::slot(id);
        self.words[w] &= !(1 << b);
        self.len -= 1;
        self.fenwick_dec(w);
        true
    }

    /// Inserts `id`; returns whether it was absent.
    pub fn insert(&mut self, id: u32) -> bool {
        assert!(id >= 1 && id <= self.universe);
        if self.contains(id) {
            return false;
        }
        let (w, b) = Self::slot(id);
        self.words[w] |= 1 << b;
        self.len += 1;
        self.fenwick_inc(w);
        true
    }

    /// The element of 1-based rank `k` in increasing order.
    pub fn select(&self, k: usize) -> Option<u32> {
        if k == 0 || k > self.len() {
            return None;
        }
        let mut remaining = k as u32;
        let mut pos = 0usize;
        let n = self.words.len();
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.fenwick[next] < remaining {
                pos = next;
                remaining -= self.fenwick[next];
            }
            step >>= 1;
        }
        // `pos` words precede the target; pick the `remaining`-th bit of word `pos`.
        let mut word = self.words[pos];
        for _ in 1..remaining {
            word &= word - 1;
        }
        Some(pos as u32 * 64 + word.trailing_zeros() + 1)
    }

    /// Number of elements `<= id`.
    pub fn rank(&self, id: u32) -> usize {
        if id == 0 {
            return 0;
        }
        let id = id.min(self.universe);
        let (w, b) = Self::slot(id);
        let mut total = 0u32;
        let mut i = w;
        while i > 0 {
            total += self.fenwick[i];
            i -= i & i.wrapping_neg();
        }
        let mask = if b == 63 {
            u64::MAX
        } else {
            (1u64 << (b + 1)) - 1
        };
        (total + (self.words[w] & mask).count_ones()) as usize
    }

    pub fn min(&self) -> Option<u32> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i as u32 * 64 + w.trailing_zeros() + 1)
    }

    /// Keeps only elements also in `other`, calling `on_remove` for each
    /// element dropped.
    pub fn intersect_with(&mut self, other: &IdSet, mut on_remove: impl FnMut(u32)) {
        assert_eq!(self.universe, other.universe);
        let mut changed = false;
        for (i, (w, o)) in self.words.iter_mut().zip(&other.words).enumerate() {
            let mut gone = *w & !*o;
            if gone == 0 {
                continue;
            }
            changed = true;
            self.len -= gone.count_ones();
            *w &= *o;
            while gone != 0 {
                on_remove(i as u32 * 64 + gone.trailing_zeros() + 1);
                gone &= gone - 1;
            }
        }
        if changed {
            self.rebuild();
        }
    }

    pub fn is_subset(&self, other: &IdSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    Some(i as u32 * 64 + b + 1)
                }
            })
        })
    }

    /// Maximal runs `[lo, hi]` of consecutive members.
    pub fn ranges(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for id in self.iter() {
            match out.last_mut() {
                Some((_, hi)) if *hi + 1 == id => *hi = id,
                _ => out.push((id, id)),
            }
        }
        out
    }

    pub fn union_len(&self, other: &IdSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn union_with(&mut self, other: &IdSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
        self.len = self.words.iter().map(|w| w.count_ones()).sum();
        self.rebuild();
    }

    pub fn intersect_plain(&mut self, other: &IdSet) {
        self.intersect_with(other, |_| {});
    }
}
