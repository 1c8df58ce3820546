//! Tail dictionary: contiguous buckets of `Θ(log log n)` keys whose first
//! keys are stored in a [`NestedForest`].
//!
//! Keys are appended and removed only at the maximum. A finger search first
//! tries the finger's own bucket and the last bucket directly, and otherwise
//! searches the forest of representatives from the finger's bucket before
//! finishing inside the located bucket.
//!
//! Inserting a representative into the forest costs `O(log log n)`; that
//! work is queued and carried out in slices over the next inserts, which fill
//! the new bucket. When `n` drifts out of `[n0/2, 2·n0]` and the bucket
//! capacity changes, a copy with the new capacity is built a few keys per
//! update and takes over once complete.

use crate::nested::NestedForest;
use crate::predecessor::{predecessor_in, TailDynamicIndex};
use crate::{Error, Key, Result};

/// Keys copied into a replacement layout per update during global rebuilding.
pub const REBUILD_KEYS_PER_UPDATE: usize = 4;

/// `max(4, ⌈log2 log2 max(n, 4)⌉)`.
pub fn bucket_capacity(n: u64) -> usize {
    let n = n.max(4);
    // ⌈log2 x⌉ for integers; log2 n is exact when n is a power of two.
    let ceil_log2 = |x: u64| 64 - (x - 1).leading_zeros() as u64;
    let lg = ceil_log2(n);
    // ⌈log2 log2 n⌉ = ⌈log2 ⌈log2 n⌉⌉ since ⌈log2 ·⌉ is monotone over integers.
    (ceil_log2(lg) as usize).max(4)
}

/// Stable finger: the rank of a key. Ranks never change under tail updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TailHandle(usize);

impl TailHandle {
    /// 0-based rank.
    pub fn rank(self) -> usize {
        self.0
    }
}

/// A finger search result with its probe cost split by layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarFound {
    pub handle: TailHandle,
    pub forest_probes: u64,
    pub bucket_probes: u64,
}

impl StarFound {
    pub fn probes(&self) -> u64 {
        self.forest_probes + self.bucket_probes
    }
}

/// Buckets of one fixed capacity plus the forest over their first keys.
#[derive(Debug, Clone)]
struct Layout {
    cap: usize,
    elems: TailDynamicIndex,
    forest: NestedForest,
}

impl Layout {
    fn new(cap: usize) -> Self {
        Layout {
            cap,
            elems: TailDynamicIndex::new(),
            forest: NestedForest::new(),
        }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    fn bucket_count(&self) -> usize {
        self.len().div_ceil(self.cap)
    }

    fn bucket_range(&self, b: usize) -> std::ops::Range<usize> {
        b * self.cap..((b + 1) * self.cap).min(self.len())
    }

    /// Forest work allowed per insert.
    fn spread_budget(&self) -> u64 {
        self.forest.append_cost_bound().div_ceil(self.cap as u64)
    }

    fn push(&mut self, key: Key) -> Result<u64> {
        self.elems.append(key)?;
        let mut work = 1 + self.elems.last_rebuild_work();
        if (self.len() - 1).is_multiple_of(self.cap) {
            // The key opens a bucket; its representative joins the queue.
            self.forest.begin_append(key)?;
            work += self.forest.last_work();
        }
        if self.forest.has_pending() {
            work += self.forest.advance_pending(self.spread_budget());
        }
        Ok(work)
    }

    fn pop(&mut self) -> Result<(Key, u64)> {
        let mut work = self.forest.finish_pending();
        let key = self.elems.pop().ok_or(Error::EmptyStructure)?;
        work += 1;
        if self.len().is_multiple_of(self.cap) {
            self.forest.remove_tail_leaf()?;
            work += self.forest.last_work();
        }
        Ok((key, work))
    }

    fn search(&self, f: usize, s: Key) -> Result<StarFound> {
        let keys = self.elems.as_slice();
        let mut bucket_probes = 0;
        let mut forest_probes = 0;
        let in_bucket = |b: usize, probes: &mut u64| {
            let r = self.bucket_range(b);
            *probes += 2;
            keys[r.start] <= s && s <= keys[r.end - 1]
        };
        let bf = f / self.cap;
        let last = self.bucket_count() - 1;
        let in_last = |probes: &mut u64| {
            *probes += 1;
            s >= keys[last * self.cap]
        };
        let target = if in_bucket(bf, &mut bucket_probes) {
            bf
        } else if in_last(&mut bucket_probes) {
            last
        } else {
            // The last bucket's representative may still be pending, but the
            // target is not in that bucket.
            let committed = self.forest.len();
            let start = self.forest.handle_at(bf.min(committed - 1)).expect("committed leaf");
            let found = self.forest.locate(start, s)?;
            forest_probes += found.probes;
            found.handle.ok_or(Error::KeyAbsent(s))?.position()
        };
        let r = self.bucket_range(target);
        let (hit, probes) = predecessor_in(&keys[r.clone()], s);
        bucket_probes += probes;
        match hit {
            Some(i) if keys[r.start + i] == s => Ok(StarFound {
                handle: TailHandle(r.start + i),
                forest_probes,
                bucket_probes,
            }),
            _ => Err(Error::KeyAbsent(s)),
        }
    }

    fn allocated_cells(&self) -> usize {
        self.elems.allocated_cells() + self.forest.allocated_cells()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let keys = self.elems.as_slice();
        if let Some(i) = keys.windows(2).position(|w| w[0] >= w[1]) {
            return Err(format!("bucket keys not increasing at rank {}", i + 2));
        }
        // A pending representative is legal; settle it on a copy.
        let mut forest = self.forest.clone();
        forest.finish_pending();
        forest.validate().map_err(|v| v.to_string())?;
        let reps: Vec<Key> = (0..self.bucket_count()).map(|b| keys[b * self.cap]).collect();
        if forest.keys() != reps {
            return Err("forest leaves are not the bucket representatives".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Rebuild {
    next: Layout,
    /// Keys of the live layout already copied into `next`.
    copied: usize,
}

/// Finger-search dictionary supporting insertion and deletion at the tail.
#[derive(Debug, Clone)]
pub struct TailFingerDict {
    live: Layout,
    rebuild: Option<Rebuild>,
    n0: usize,
    work: u64,
    last_work: u64,
    max_work: u64,
    rebuild_work: u64,
    rebuilds: u64,
}

impl Default for TailFingerDict {
    fn default() -> Self {
        Self::new()
    }
}

impl TailFingerDict {
    pub fn new() -> Self {
        TailFingerDict {
            live: Layout::new(bucket_capacity(1)),
            rebuild: None,
            n0: 0,
            work: 0,
            last_work: 0,
            max_work: 0,
            rebuild_work: 0,
            rebuilds: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Capacity of the buckets currently answering queries.
    pub fn capacity(&self) -> usize {
        self.live.cap
    }

    /// Element count at the last global rebuild.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn bucket_count(&self) -> usize {
        self.live.bucket_count()
    }

    pub fn bucket(&self, b: usize) -> &[Key] {
        &self.live.elems.as_slice()[self.live.bucket_range(b)]
    }

    pub fn keys(&self) -> &[Key] {
        self.live.elems.as_slice()
    }

    pub fn max_key(&self) -> Option<Key> {
        self.live.elems.last()
    }

    pub fn key(&self, h: TailHandle) -> Option<Key> {
        self.live.elems.get(h.0)
    }

    pub fn handle_at(&self, rank: usize) -> Option<TailHandle> {
        (rank < self.len()).then_some(TailHandle(rank))
    }

    /// The forest over bucket representatives.
    pub fn forest(&self) -> &NestedForest {
        &self.live.forest
    }

    /// Whether a representative insertion is still being spread.
    pub fn has_pending_representative(&self) -> bool {
        self.live.forest.has_pending()
    }

    pub fn is_rebuilding(&self) -> bool {
        self.rebuild.is_some()
    }

    /// Number of completed global rebuilds that changed the capacity.
    pub fn rebuild_count(&self) -> u64 {
        self.rebuilds
    }

    /// Forest work allowed per insert at the current size.
    pub fn spread_budget(&self) -> u64 {
        self.live.spread_budget()
    }

    /// Upper bound on the work of one update, counting the key itself, the
    /// spread slice, storage growth and a rebuild slice.
    pub fn update_work_bound(&self) -> u64 {
        let steps = self.live.elems.steps_per_update() as u64;
        let one = |l: &Layout| 1 + steps + l.spread_budget() + l.forest.append_cost_bound();
        let mut bound = one(&self.live);
        if let Some(r) = &self.rebuild {
            bound += REBUILD_KEYS_PER_UPDATE as u64 * one(&r.next);
        } else {
            // A rebuild may start during this update.
            let next = Layout::new(bucket_capacity(self.len() as u64 + 1));
            bound += REBUILD_KEYS_PER_UPDATE as u64 * one(&next).max(one(&self.live));
        }
        bound
    }

    pub fn total_work(&self) -> u64 {
        self.work
    }

    pub fn last_work(&self) -> u64 {
        self.last_work
    }

    /// Largest work done by any single update so far.
    pub fn max_update_work(&self) -> u64 {
        self.max_work
    }

    /// Work spent copying keys into replacement layouts.
    pub fn rebuild_work(&self) -> u64 {
        self.rebuild_work
    }

    /// Key cells, forest nodes and routing entries allocated, including a
    /// replacement under construction.
    pub fn allocated_cells(&self) -> usize {
        self.live.allocated_cells() + self.rebuild.as_ref().map_or(0, |r| r.next.allocated_cells())
    }

    /// Checks bucket order, the forest and its representatives, and the
    /// progress of a running rebuild.
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.live.validate()?;
        if let Some(r) = &self.rebuild {
            let copied = r.next.elems.as_slice();
            if copied.len() != r.copied || copied != &self.keys()[..r.copied] {
                return Err("rebuild copy diverged from the live keys".into());
            }
            r.next.validate().map_err(|e| format!("rebuild target: {e}"))?;
        }
        Ok(())
    }

    pub fn insert_tail(&mut self, key: Key) -> Result<TailHandle> {
        let mut work = self.live.push(key)?;
        work += self.global_rebuild_step();
        self.record(work);
        Ok(TailHandle(self.len() - 1))
    }

    pub fn delete_tail(&mut self) -> Result<Key> {
        let (key, mut work) = self.live.pop()?;
        if let Some(r) = self.rebuild.as_mut() {
            if r.copied > self.live.len() {
                let (_, w) = r.next.pop()?;
                work += w;
                r.copied -= 1;
            }
        }
        work += self.global_rebuild_step();
        self.record(work);
        Ok(key)
    }

    fn record(&mut self, work: u64) {
        self.work += work;
        self.last_work = work;
        self.max_work = self.max_work.max(work);
    }

    /// Starts, continues or finishes a global rebuild. Returns the work done;
    /// zero on a quiescent dictionary.
    pub fn global_rebuild_step(&mut self) -> u64 {
        let n = self.len();
        if self.rebuild.is_none() && (n > 2 * self.n0 || 2 * n < self.n0) {
            let cap = bucket_capacity(n.max(1) as u64);
            if cap == self.live.cap {
                self.n0 = n;
                return 0;
            }
            self.rebuild = Some(Rebuild {
                next: Layout::new(cap),
                copied: 0,
            });
        }
        let Some(r) = self.rebuild.as_mut() else {
            return 0;
        };
        let mut work = 0;
        let keys = self.live.elems.as_slice();
        let end = (r.copied + REBUILD_KEYS_PER_UPDATE).min(keys.len());
        for &k in &keys[r.copied..end] {
            work += r.next.push(k).expect("copied keys increase");
        }
        r.copied = end;
        if r.copied == n {
            work += r.next.forest.finish_pending();
            let r = self.rebuild.take().expect("rebuild in progress");
            self.live = r.next;
            self.n0 = n;
            self.rebuilds += 1;
        }
        self.rebuild_work += work;
        work
    }

    /// Searches for the key `s` starting from the finger `f`.
    pub fn search_star(&self, f: TailHandle, s: Key) -> Result<StarFound> {
        if f.0 >= self.len() {
            return Err(Error::StaleFinger);
        }
        self.live.search(f.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_examples() {
        assert_eq!(bucket_capacity(4), 4);
        assert_eq!(bucket_capacity(1), 4);
        assert_eq!(bucket_capacity(1 << 16), 4);
        assert_eq!(bucket_capacity((1 << 16) + 1), 5);
        assert_eq!(bucket_capacity(1 << 40), 6);
        // Direct float evaluation away from the integer boundaries.
        for e in [5u32, 9, 17, 33, 63] {
            let n = 1u64 << e;
            let want = ((n as f64).log2().log2().ceil() as usize).max(4);
            assert_eq!(bucket_capacity(n), want, "n=2^{e}");
        }
    }

    #[test]
    fn insert_examples() {
        let mut d = TailFingerDict::new();
        let h = d.insert_tail(1).unwrap();
        assert_eq!(d.key(h), Some(1));
        for k in 2..=5 {
            d.insert_tail(k).unwrap();
        }
        assert_eq!(d.bucket_count(), 2);
        assert_eq!(d.bucket(0), &[1, 2, 3, 4]);
        assert_eq!(d.bucket(1), &[5]);
        let reps = d.forest().len() + usize::from(d.has_pending_representative());
        assert_eq!(reps, 2);

        let mut d = TailFingerDict::new();
        d.insert_tail(10).unwrap();
        assert_eq!(
            d.insert_tail(10).unwrap_err(),
            Error::KeyNotGreaterThanMax { key: 10, max: 10 }
        );
    }

    #[test]
    fn delete_examples() {
        let mut d = TailFingerDict::new();
        for k in 1..=5 {
            d.insert_tail(k).unwrap();
        }
        assert_eq!(d.delete_tail(), Ok(5));
        assert_eq!(d.bucket_count(), 1);
        assert_eq!(d.bucket(0), &[1, 2, 3, 4]);
        assert_eq!(d.forest().len(), 1);

        let mut d = TailFingerDict::new();
        d.insert_tail(9).unwrap();
        assert_eq!(d.delete_tail(), Ok(9));
        assert!(d.is_empty());
        assert_eq!(d.delete_tail(), Err(Error::EmptyStructure));
    }

    #[test]
    fn same_bucket_search_uses_no_forest() {
        let mut d = TailFingerDict::new();
        for k in 1..=40 {
            d.insert_tail(k * 2).unwrap();
        }
        let r = d.search_star(d.handle_at(8).unwrap(), 22).unwrap();
        assert_eq!(r.handle.rank(), 10);
        assert_eq!(r.forest_probes, 0);
        assert_eq!(d.search_star(d.handle_at(8).unwrap(), 23).unwrap_err(), Error::KeyAbsent(23));
    }

    #[test]
    fn last_bucket_reached_while_representative_pending() {
        let mut d = TailFingerDict::new();
        for k in 1..=(1 << 12) {
            d.insert_tail(k).unwrap();
        }
        // Open a new bucket and stop before its representative is committed.
        let mut k = 1 << 12;
        loop {
            k += 1;
            d.insert_tail(k).unwrap();
            if d.has_pending_representative() {
                break;
            }
            assert!(k < 1 << 14, "spread slices never left work pending");
        }
        let r = d.search_star(d.handle_at(0).unwrap(), k).unwrap();
        assert_eq!(r.handle.rank(), k as usize - 1);
        assert_eq!(r.forest_probes, 0);
        for s in (1..=k).step_by(37) {
            let r = d.search_star(d.handle_at(100).unwrap(), s).unwrap();
            assert_eq!(r.handle.rank(), s as usize - 1);
        }
    }

    #[test]
    fn matches_oracle_at_4096() {
        let mut d = TailFingerDict::new();
        let keys: Vec<Key> = (0..4096u64).map(|k| k * 5 + 1).collect();
        for &k in &keys {
            d.insert_tail(k).unwrap();
        }
        let r = d.search_star(d.handle_at(100).unwrap(), keys[3000]).unwrap();
        assert_eq!(r.handle.rank(), 3000);
        for f in (0..4096).step_by(61) {
            for t in (0..4096).step_by(13) {
                let r = d.search_star(d.handle_at(f).unwrap(), keys[t]).unwrap();
                assert_eq!(r.handle.rank(), t);
            }
        }
    }

    #[test]
    fn rebuild_schedule() {
        let mut d = TailFingerDict::new();
        for k in 1..=16 {
            d.insert_tail(k).unwrap();
        }
        let before = d.rebuild_work();
        for k in 17..=40 {
            d.insert_tail(k).unwrap();
        }
        assert_eq!(d.rebuild_work(), before);
        assert!(!d.is_rebuilding());
        let quiet = d.clone();
        assert_eq!(d.global_rebuild_step(), 0);
        assert_eq!(d.global_rebuild_step(), 0);
        assert_eq!(d.keys(), quiet.keys());
    }

    #[test]
    fn rebuild_on_capacity_change() {
        let mut d = TailFingerDict::new();
        let n = (1u64 << 17) + 20_000;
        let mut seen_mid = false;
        for k in 1..=n {
            d.insert_tail(k).unwrap();
            if d.is_rebuilding() && k % 97 == 0 {
                seen_mid = true;
                let h = d.handle_at(3).unwrap();
                assert_eq!(d.search_star(h, k).unwrap().handle.rank(), k as usize - 1);
            }
        }
        while d.is_rebuilding() {
            d.global_rebuild_step();
        }
        assert!(seen_mid);
        assert_eq!(d.capacity(), 5);
        assert_eq!(d.rebuild_count(), 1);
        assert!(d.rebuild_work() <= 64 * n, "rebuild work {}", d.rebuild_work());
        assert!(d.max_update_work() <= d.update_work_bound());
        for b in 0..d.bucket_count() - 1 {
            assert_eq!(d.bucket(b).len(), 5);
        }
    }

    #[test]
    fn shrinking_rebuilds_and_deletes_during_rebuild() {
        let mut d = TailFingerDict::new();
        let n = 140_000u64;
        for k in 1..=n {
            d.insert_tail(k).unwrap();
        }
        while d.is_rebuilding() {
            d.global_rebuild_step();
        }
        assert_eq!(d.capacity(), 5);
        let mut k = n;
        while k > 1000 {
            assert_eq!(d.delete_tail(), Ok(k));
            k -= 1;
            if k.is_multiple_of(1013) {
                let h = d.handle_at(0).unwrap();
                assert_eq!(d.search_star(h, k).unwrap().handle.rank(), k as usize - 1);
            }
        }
        while d.is_rebuilding() {
            d.global_rebuild_step();
        }
        assert_eq!(d.capacity(), 4);
        assert_eq!(d.keys(), &(1..=1000).collect::<Vec<_>>()[..]);
        d.forest().validate().unwrap();
    }
}
