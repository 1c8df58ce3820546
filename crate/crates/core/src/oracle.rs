//! Sorted-array dictionary with galloping finger search. Ground truth for
//! differential tests and the comparison-model baseline for probe counts.

use std::cell::Cell;
use std::cmp::Ordering;

use crate::{Error, Key, Result};

#[derive(Debug, Clone, Default)]
pub struct OracleDict {
    keys: Vec<Key>,
    probes: Cell<u64>,
}

impl OracleDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sorted(keys: Vec<Key>) -> Result<Self> {
        if let Some(i) = keys.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotSorted { position: i + 1 });
        }
        Ok(OracleDict {
            keys,
            probes: Cell::new(0),
        })
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Comparisons made by searches so far.
    pub fn probe_count(&self) -> u64 {
        self.probes.get()
    }

    pub fn max_key(&self) -> Option<Key> {
        self.keys.last().copied()
    }

    /// 1-based rank of `key`, if stored.
    pub fn rank_of(&self, key: Key) -> Option<usize> {
        self.keys.binary_search(&key).ok().map(|i| i + 1)
    }

    /// Key at the 1-based `rank`.
    pub fn key_at(&self, rank: usize) -> Option<Key> {
        rank.checked_sub(1).and_then(|i| self.keys.get(i)).copied()
    }

    /// Largest stored key `<= key`.
    pub fn predecessor(&self, key: Key) -> Option<Key> {
        let i = self.keys.partition_point(|&k| k <= key);
        i.checked_sub(1).map(|i| self.keys[i])
    }

    /// Number of stored keys strictly between two stored keys, plus one when
    /// they differ: `|rank(a) - rank(b)|`.
    pub fn distance(&self, a: Key, b: Key) -> Option<usize> {
        Some(self.rank_of(a)?.abs_diff(self.rank_of(b)?))
    }

    /// Inserts `key`; returns its 1-based position.
    pub fn insert(&mut self, key: Key) -> Result<usize> {
        match self.keys.binary_search(&key) {
            Ok(_) => Err(Error::DuplicateKey(key)),
            Err(i) => {
                self.keys.insert(i, key);
                Ok(i + 1)
            }
        }
    }

    pub fn delete(&mut self, key: Key) -> Result<()> {
        match self.keys.binary_search(&key) {
            Ok(i) => {
                self.keys.remove(i);
                Ok(())
            }
            Err(_) => Err(Error::KeyAbsent(key)),
        }
    }

    fn cmp(&self, i: usize, s: Key) -> Ordering {
        self.probes.set(self.probes.get() + 1);
        self.keys[i].cmp(&s)
    }

    /// Rank of `s` and its distance from the 1-based `finger_rank`, found by
    /// doubling away from the finger and then bisecting the bracket.
    ///
    /// # Panics
    ///
    /// If `finger_rank` is not a stored rank.
    pub fn finger_search(&self, finger_rank: usize, s: Key) -> Result<(usize, usize)> {
        assert!(finger_rank >= 1 && finger_rank <= self.keys.len(), "finger rank out of range");
        let f = finger_rank - 1;
        let n = self.keys.len();
        let found = match self.cmp(f, s) {
            Ordering::Equal => Some(f),
            Ordering::Less => {
                // keys[lo] < s, and s <= keys[hi] when hi < n.
                let (mut lo, mut step) = (f, 1usize);
                let mut hi = n;
                while f + step < n {
                    match self.cmp(f + step, s) {
                        Ordering::Less => {
                            lo = f + step;
                            step *= 2;
                        }
                        Ordering::Equal => return Ok((f + step + 1, step)),
                        Ordering::Greater => {
                            hi = f + step;
                            break;
                        }
                    }
                }
                self.bisect(lo + 1, hi, s)
            }
            Ordering::Greater => {
                let (mut hi, mut step) = (f, 1usize);
                let mut lo = 0;
                while step <= f {
                    match self.cmp(f - step, s) {
                        Ordering::Greater => {
                            hi = f - step;
                            step *= 2;
                        }
                        Ordering::Equal => return Ok((f - step + 1, step)),
                        Ordering::Less => {
                            lo = f - step + 1;
                            break;
                        }
                    }
                }
                self.bisect(lo, hi, s)
            }
        };
        let i = found.ok_or(Error::KeyAbsent(s))?;
        Ok((i + 1, i.abs_diff(f)))
    }

    /// Position of `s` in `keys[lo..hi]`.
    fn bisect(&self, mut lo: usize, mut hi: usize, s: Key) -> Option<usize> {
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.cmp(mid, s) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg32;

    fn bound(d: usize) -> u64 {
        2 * (usize::BITS - d.leading_zeros()) as u64 + 4
    }

    #[test]
    fn finger_search_examples() {
        let o = OracleDict::from_sorted((1..=100).collect()).unwrap();
        assert_eq!(o.finger_search(10, 37), Ok((37, 27)));
        let before = o.probe_count();
        assert_eq!(o.finger_search(10, 10), Ok((10, 0)));
        assert!(o.probe_count() - before <= 2);
        assert_eq!(o.finger_search(10, 1000), Err(Error::KeyAbsent(1000)));
    }

    #[test]
    fn update_examples() {
        let mut o = OracleDict::from_sorted(vec![1, 9]).unwrap();
        assert_eq!(o.insert(5), Ok(2));
        assert_eq!(o.insert(5), Err(Error::DuplicateKey(5)));
        o.delete(9).unwrap();
        assert_eq!(o.keys(), &[1, 5]);
        assert_eq!(o.delete(9), Err(Error::KeyAbsent(9)));
    }

    #[test]
    fn galloping_probe_bound_and_symmetry() {
        let mut rng = Pcg32::seed_from_u64(11);
        let mut keys: Vec<Key> = (0..4096).map(|_| rng.gen_range(0..1 << 30)).collect();
        keys.sort_unstable();
        keys.dedup();
        let o = OracleDict::from_sorted(keys.clone()).unwrap();
        for _ in 0..20_000 {
            let f = rng.gen_range(1..=keys.len());
            let t = rng.gen_range(1..=keys.len());
            let before = o.probe_count();
            let (rank, d) = o.finger_search(f, keys[t - 1]).unwrap();
            let spent = o.probe_count() - before;
            assert_eq!(rank, keys.binary_search(&keys[t - 1]).unwrap() + 1);
            assert_eq!(d, f.abs_diff(t));
            // ⌈log2(d+1)⌉ equals the bit length of d.
            assert!(spent <= bound(d), "d={d} spent={spent}");
            assert_eq!(o.distance(keys[f - 1], keys[t - 1]), o.distance(keys[t - 1], keys[f - 1]));
        }
    }
}
