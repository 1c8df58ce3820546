//! Probe-counted predecessor indexes.
//!
//! Tree nodes and buckets answer "largest stored key `<= x`" through the two
//! types here. [`SmallSetIndex`] is a static sorted array searched with a
//! branch-counted binary search (small ranges are scanned directly).
//! [`TailDynamicIndex`] adds appends, tail rewrites and tail removals, and
//! grows its storage by migrating into a larger buffer a few elements per
//! append so that no single append pays for a full copy.
//!
//! Every comparison of the query key against a stored key counts as one
//! probe. A query over `m` keys makes at most `2·⌈log2(m+1)⌉ + 2` probes.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::{Error, Key, Result};

/// Ranges up to this length are scanned instead of bisected.
const SCAN_LIMIT: usize = 4;

/// Default rebuild budget for [`TailDynamicIndex::new`].
pub const DEFAULT_STEPS_PER_UPDATE: usize = 8;

const INITIAL_CAPACITY: usize = 4;

/// Upper bound on the probes of one query over `m` keys.
pub fn probe_bound(m: usize) -> u64 {
    2 * u64::from(usize::BITS - m.leading_zeros()) + 2
}

/// Predecessor of `x` in the strictly increasing slice `keys`.
///
/// Returns the 0-based index of the largest key `<= x` (if any) and the
/// number of probes spent.
pub fn predecessor_in(keys: &[Key], x: Key) -> (Option<usize>, u64) {
    if keys.len() <= SCAN_LIMIT {
        let mut probes = 0;
        let mut hit = None;
        for (i, &k) in keys.iter().enumerate() {
            probes += 1;
            if k > x {
                break;
            }
            hit = Some(i);
        }
        return (hit, probes);
    }
    let (mut lo, mut hi) = (0usize, keys.len());
    let mut probes = 0;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        probes += 1;
        if keys[mid] <= x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (lo.checked_sub(1), probes)
}

fn check_sorted(keys: &[Key]) -> Result<()> {
    match keys.windows(2).position(|w| w[0] >= w[1]) {
        Some(p) => Err(Error::NotSorted { position: p + 1 }),
        None => Ok(()),
    }
}

/// Static predecessor structure over a small strictly increasing key set.
#[derive(Debug, Default)]
pub struct SmallSetIndex {
    keys: Vec<Key>,
    probes: AtomicU64,
}

impl Clone for SmallSetIndex {
    fn clone(&self) -> Self {
        SmallSetIndex {
            keys: self.keys.clone(),
            probes: AtomicU64::new(self.probe_count()),
        }
    }
}

impl SmallSetIndex {
    pub fn build_static(keys: &[Key]) -> Result<Self> {
        check_sorted(keys)?;
        Ok(SmallSetIndex {
            keys: keys.to_vec(),
            probes: AtomicU64::new(0),
        })
    }

    /// Largest stored key `<= x` with its 1-based position.
    pub fn predecessor(&self, x: Key) -> Option<(usize, Key)> {
        let (hit, probes) = predecessor_in(&self.keys, x);
        self.probes.fetch_add(probes, Ordering::Relaxed);
        hit.map(|i| (i + 1, self.keys[i]))
    }

    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
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
}

/// Sorted key array supporting tail updates in worst-case `O(1)` work.
///
/// Storage is a fixed-capacity buffer. Once it passes a fill threshold a
/// buffer of twice the capacity is allocated; the keys present at that
/// moment are copied into it at most `steps_per_update` per append, while
/// later appends and rewrites go to both buffers. The new buffer takes over
/// as soon as the old keys are copied. Queries read the live buffer, which
/// always holds every completed append.
#[derive(Debug)]
pub struct TailDynamicIndex {
    live: Vec<Key>,
    shadow: Option<Shadow>,
    steps_per_update: usize,
    last_rebuild_work: u64,
    rebuild_work: u64,
    probes: AtomicU64,
}

#[derive(Debug, Clone)]
struct Shadow {
    /// Full-length buffer; only `..copied` and `snapshot..live.len()` are
    /// meaningful.
    buf: Vec<Key>,
    copied: usize,
    snapshot: usize,
}

impl Default for TailDynamicIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl Clone for TailDynamicIndex {
    fn clone(&self) -> Self {
        TailDynamicIndex {
            live: self.live.clone(),
            shadow: self.shadow.clone(),
            steps_per_update: self.steps_per_update,
            last_rebuild_work: self.last_rebuild_work,
            rebuild_work: self.rebuild_work,
            probes: AtomicU64::new(self.probe_count()),
        }
    }
}

impl TailDynamicIndex {
    pub fn new() -> Self {
        Self::with_steps(DEFAULT_STEPS_PER_UPDATE)
    }

    /// # Panics
    ///
    /// If `steps_per_update` is zero.
    pub fn with_steps(steps_per_update: usize) -> Self {
        assert!(steps_per_update > 0, "steps_per_update must be positive");
        TailDynamicIndex {
            live: Vec::with_capacity(INITIAL_CAPACITY),
            shadow: None,
            steps_per_update,
            last_rebuild_work: 0,
            rebuild_work: 0,
            probes: AtomicU64::new(0),
        }
    }

    pub fn from_sorted(keys: &[Key]) -> Result<Self> {
        check_sorted(keys)?;
        let mut idx = Self::new();
        let mut live = Vec::with_capacity(keys.len().max(INITIAL_CAPACITY) * 2);
        live.extend_from_slice(keys);
        idx.live = live;
        Ok(idx)
    }

    pub fn steps_per_update(&self) -> usize {
        self.steps_per_update
    }

    /// Fill level at which migration into a larger buffer starts. Copying
    /// `steps_per_update` of the keys present at that point per append
    /// finishes before the live buffer is full.
    fn migration_threshold(&self) -> usize {
        let cap = self.live.capacity();
        cap - cap.div_ceil(self.steps_per_update + 1)
    }

    /// Appends `key`, which must exceed every stored key.
    pub fn append(&mut self, key: Key) -> Result<()> {
        if let Some(&max) = self.live.last() {
            if key <= max {
                return Err(Error::KeyNotGreaterThanMax { key, max });
            }
        }
        let mut work = 0;
        if self.live.len() == self.live.capacity() {
            // Only reachable when the budget could not keep up; finish now.
            work += self.finish_migration();
        }
        self.live.push(key);
        let n = self.live.len();
        if let Some(sh) = self.shadow.as_mut() {
            sh.buf[n - 1] = key;
        } else if n >= self.migration_threshold() {
            self.shadow = Some(Shadow {
                buf: vec![0; 2 * self.live.capacity()],
                copied: 0,
                snapshot: n,
            });
        }
        work += self.migrate(self.steps_per_update);
        self.last_rebuild_work = work;
        self.rebuild_work += work;
        Ok(())
    }

    fn migrate(&mut self, budget: usize) -> u64 {
        let Some(sh) = self.shadow.as_mut() else {
            return 0;
        };
        let from = sh.copied;
        let to = from.saturating_add(budget).min(sh.snapshot);
        sh.buf[from..to].copy_from_slice(&self.live[from..to]);
        sh.copied = to;
        self.swap_if_caught_up();
        (to - from) as u64
    }

    fn swap_if_caught_up(&mut self) {
        if self.shadow.as_ref().is_some_and(|sh| sh.copied == sh.snapshot) {
            let mut buf = self.shadow.take().expect("shadow present").buf;
            buf.truncate(self.live.len());
            self.live = buf;
        }
    }

    fn finish_migration(&mut self) -> u64 {
        if self.shadow.is_none() {
            let n = self.live.len();
            self.shadow = Some(Shadow {
                buf: vec![0; 2 * self.live.capacity().max(1)],
                copied: 0,
                snapshot: n,
            });
        }
        self.migrate(usize::MAX)
    }

    /// Rewrites the last key. The new value must keep the array strictly
    /// increasing.
    pub fn set_last(&mut self, key: Key) {
        let n = self.live.len();
        assert!(n > 0, "set_last on empty index");
        debug_assert!(n < 2 || self.live[n - 2] < key, "set_last breaks ordering");
        self.write(n - 1, key);
    }

    fn write(&mut self, i: usize, key: Key) {
        self.live[i] = key;
        if let Some(sh) = self.shadow.as_mut() {
            sh.buf[i] = key;
        }
    }

    pub fn pop(&mut self) -> Option<Key> {
        let key = self.live.pop()?;
        let n = self.live.len();
        if let Some(sh) = self.shadow.as_mut() {
            sh.snapshot = sh.snapshot.min(n);
            sh.copied = sh.copied.min(n);
        }
        self.swap_if_caught_up();
        Some(key)
    }

    /// Largest stored key `<= x` with its 1-based position.
    pub fn predecessor(&self, x: Key) -> Option<(usize, Key)> {
        let (hit, probes) = predecessor_in(&self.live, x);
        self.probes.fetch_add(probes, Ordering::Relaxed);
        hit.map(|i| (i + 1, self.live[i]))
    }

    /// Predecessor restricted to the 0-based `range`, returned as an index
    /// into the whole array together with the probes spent. Does not touch
    /// the running probe counter.
    pub fn predecessor_within(&self, range: Range<usize>, x: Key) -> (Option<usize>, u64) {
        let start = range.start;
        let (hit, probes) = predecessor_in(&self.live[range], x);
        (hit.map(|i| i + start), probes)
    }

    /// Writes `key` at `i` with no ordering check. Test support only.
    #[doc(hidden)]
    pub fn overwrite_unchecked(&mut self, i: usize, key: Key) {
        self.write(i, key);
    }

    pub fn get(&self, i: usize) -> Option<Key> {
        self.live.get(i).copied()
    }

    pub fn as_slice(&self) -> &[Key] {
        &self.live
    }

    pub fn last(&self) -> Option<Key> {
        self.live.last().copied()
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    /// Rebuild (copy) work done by the most recent append.
    pub fn last_rebuild_work(&self) -> u64 {
        self.last_rebuild_work
    }

    pub fn rebuild_work(&self) -> u64 {
        self.rebuild_work
    }

    pub fn is_migrating(&self) -> bool {
        self.shadow.is_some()
    }

    /// Key cells currently allocated, counting both buffers.
    pub fn allocated_cells(&self) -> usize {
        self.live.capacity() + self.shadow.as_ref().map_or(0, |sh| sh.buf.capacity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_pred(keys: &[Key], x: Key) -> Option<usize> {
        keys.iter().rposition(|&k| k <= x)
    }

    #[test]
    fn static_examples() {
        let idx = SmallSetIndex::build_static(&[10, 20, 30]).unwrap();
        assert_eq!(idx.predecessor(25), Some((2, 20)));
        assert_eq!(idx.predecessor(30), Some((3, 30)));
        assert_eq!(idx.predecessor(5), None);
        assert_eq!(idx.predecessor(999), Some((3, 30)));
        assert!(idx.probe_count() > 0);

        let empty = SmallSetIndex::build_static(&[]).unwrap();
        assert_eq!(empty.predecessor(0), None);
        assert_eq!(empty.predecessor(Key::MAX), None);

        assert_eq!(
            SmallSetIndex::build_static(&[5, 7, 7, 9]).unwrap_err(),
            Error::NotSorted { position: 2 }
        );
    }

    #[test]
    fn append_examples() {
        let mut idx = TailDynamicIndex::from_sorted(&[10, 20, 30]).unwrap();
        idx.append(40).unwrap();
        assert_eq!(idx.predecessor(45), Some((4, 40)));
        assert_eq!(
            idx.append(15).unwrap_err(),
            Error::KeyNotGreaterThanMax { key: 15, max: 40 }
        );
    }

    #[test]
    fn append_work_is_bounded_per_update() {
        let mut idx = TailDynamicIndex::new();
        let mut max_work = 0;
        let mut migrations = 0;
        for k in 0..10_000u64 {
            let was = idx.is_migrating();
            idx.append(k * 3 + 1).unwrap();
            if was && !idx.is_migrating() {
                migrations += 1;
            }
            max_work = max_work.max(idx.last_rebuild_work());
        }
        assert!(max_work <= idx.steps_per_update() as u64);
        assert!(migrations >= 10, "storage should have grown repeatedly");
        // Each migration copies at most the current size, so the total is
        // bounded by twice the final size.
        assert!(idx.rebuild_work() <= 2 * 10_000);
        for k in 0..10_000u64 {
            assert_eq!(idx.get(k as usize), Some(k * 3 + 1));
        }
    }

    #[test]
    fn single_step_budget_still_keeps_up() {
        let mut idx = TailDynamicIndex::with_steps(1);
        for k in 1..=5000u64 {
            idx.append(k).unwrap();
            assert!(idx.last_rebuild_work() <= 1);
        }
        assert_eq!(idx.len(), 5000);
    }

    #[test]
    fn pop_and_set_last_during_migration() {
        let mut idx = TailDynamicIndex::with_steps(2);
        let mut model = Vec::new();
        for k in 1..=300u64 {
            idx.append(k * 10).unwrap();
            model.push(k * 10);
            if k % 7 == 0 {
                idx.pop();
                model.pop();
            }
            if k % 5 == 0 {
                let last = *model.last().unwrap() + 1;
                idx.set_last(last);
                *model.last_mut().unwrap() = last;
            }
            assert_eq!(idx.as_slice(), &model[..]);
        }
        while idx.pop().is_some() {
            model.pop();
            assert_eq!(idx.as_slice(), &model[..]);
        }
    }

    #[test]
    fn probe_bound_holds_for_all_sizes() {
        for m in 0..300usize {
            let keys: Vec<Key> = (0..m as u64).map(|k| 2 * k + 1).collect();
            for x in 0..=(2 * m as u64 + 2) {
                let (hit, probes) = predecessor_in(&keys, x);
                assert_eq!(hit, linear_pred(&keys, x));
                assert!(probes <= probe_bound(m), "m={m} x={x} probes={probes}");
            }
        }
    }

    #[test]
    fn within_range_is_offset() {
        let idx = TailDynamicIndex::from_sorted(&[1, 5, 9, 13, 17, 21, 25, 29, 33]).unwrap();
        assert_eq!(idx.predecessor_within(3..7, 20).0, Some(4));
        assert_eq!(idx.predecessor_within(3..7, 12).0, None);
        assert_eq!(idx.predecessor_within(3..7, 100).0, Some(6));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn agrees_with_linear_scan(
                mut keys in proptest::collection::vec(any::<u64>(), 0..512),
                queries in proptest::collection::vec(any::<u64>(), 1..64),
            ) {
                keys.sort_unstable();
                keys.dedup();
                let idx = SmallSetIndex::build_static(&keys).unwrap();
                for q in queries.iter().copied().chain(keys.iter().copied()) {
                    let want = linear_pred(&keys, q).map(|i| (i + 1, keys[i]));
                    prop_assert_eq!(idx.predecessor(q), want);
                }
            }
        }
    }
}
