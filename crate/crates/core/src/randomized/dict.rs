use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;

use super::top_tree::TopTree;
use super::{criticality, is_critical, is_high, is_low, loglog, r_bucket_target, DEFAULT_ALPHA};
use crate::predecessor::predecessor_in;
use crate::{Error, Key, Result};

const NONE: u32 = u32::MAX;

/// Handle to a stored key. Stays valid while the key is stored, across any
/// rebalancing that moves it between buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Finger {
    slot: u32,
    gen: u32,
}

/// Identifier of a live bucket. Ids of retired buckets are reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Split,
    Transfer,
    Fuse,
}

/// One rebalancing carried out by a maintenance round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub round: u64,
    /// 1 for the randomly drawn bucket, 2 for the most critical one, 0 for
    /// a direct call.
    pub step: u8,
    pub kind: ActionKind,
    pub bucket: BucketId,
    pub size_before: usize,
    /// Sizes of the buckets the rebalancing produced or touched, in order.
    pub sizes_after: Vec<usize>,
    /// Whether every bucket in `sizes_after` ended non-critical.
    pub settled: bool,
}

/// Bucket size extremes recorded at the end of a maintenance round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boundary {
    pub round: u64,
    pub buckets: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub target: usize,
}

impl Boundary {
    /// Every bucket within `[0.5·T, 2·T]`, or a single bucket.
    pub fn within_window(&self) -> bool {
        self.buckets <= 1 || (2 * self.min_size >= self.target && self.max_size <= 2 * self.target)
    }
}

/// A finger search result with probes split by layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RFound {
    pub finger: Finger,
    pub tree_probes: u64,
    pub bucket_probes: u64,
}

impl RFound {
    pub fn probes(&self) -> u64 {
        self.tree_probes + self.bucket_probes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub alpha: u64,
    /// Run maintenance rounds automatically every `c` updates.
    pub auto_maintenance: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha: DEFAULT_ALPHA,
            auto_maintenance: true,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    gen: u32,
    bucket: u32,
    key: Key,
    live: bool,
}

#[derive(Debug, Clone, Default)]
struct RBucket {
    elements: Vec<Key>,
    slots: Vec<u32>,
    /// Updates received in the current window.
    delta: u32,
    sep: Key,
    prev: u32,
    next: u32,
    live: bool,
}

/// Randomized bucketed finger dictionary.
#[derive(Debug, Clone)]
pub struct RandomizedFingerDict {
    buckets: Vec<RBucket>,
    free_buckets: Vec<u32>,
    first: u32,
    bucket_count: usize,
    slots: Vec<Slot>,
    free_slots: Vec<u32>,
    top: TopTree,
    sizes: BTreeSet<(usize, u32)>,
    len: usize,
    n_max: u64,
    config: Config,
    window: Vec<u32>,
    rng: Pcg32,
    rounds: u64,
    log: Vec<Action>,
    boundaries: Vec<Boundary>,
    work: u64,
    last_work: u64,
}

impl RandomizedFingerDict {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, Config::default())
    }

    pub fn with_config(seed: u64, config: Config) -> Self {
        assert!(config.alpha >= 1, "alpha must be positive");
        let first = RBucket {
            sep: 0,
            prev: NONE,
            next: NONE,
            live: true,
            ..RBucket::default()
        };
        let mut sizes = BTreeSet::new();
        sizes.insert((0, 0));
        RandomizedFingerDict {
            buckets: vec![first],
            free_buckets: Vec::new(),
            first: 0,
            bucket_count: 1,
            slots: Vec::new(),
            free_slots: Vec::new(),
            top: TopTree::new(0, 0),
            sizes,
            len: 0,
            n_max: 0,
            config,
            window: Vec::new(),
            rng: Pcg32::seed_from_u64(seed),
            rounds: 0,
            log: Vec::new(),
            boundaries: Vec::new(),
            work: 0,
            last_work: 0,
        }
    }

    /// Builds a dictionary over strictly increasing `keys` with evenly
    /// filled buckets of about the target size.
    pub fn from_sorted(keys: &[Key], seed: u64, config: Config) -> Result<Self> {
        if let Some(i) = keys.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotSorted { position: i + 1 });
        }
        let mut d = Self::with_config(seed, config);
        d.n_max = keys.len() as u64;
        let t = d.target();
        let count = keys.len().div_ceil(t).max(1);
        let mut start = 0;
        let mut prev = NONE;
        for i in 0..count {
            let end = keys.len() * (i + 1) / count;
            let b = if i == 0 {
                0
            } else {
                let b = d.new_bucket(keys[start]);
                d.link_after(prev, b);
                d.top.insert_after(prev, b, keys[start]);
                b
            };
            for &k in &keys[start..end] {
                let slot = d.new_slot(b, k);
                let bk = &mut d.buckets[b as usize];
                bk.elements.push(k);
                bk.slots.push(slot);
            }
            d.resize_entry(b, 0);
            start = end;
            prev = b;
        }
        d.len = keys.len();
        d.work = 0;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Largest key count held so far.
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn alpha(&self) -> u64 {
        self.config.alpha
    }

    /// Current target bucket size.
    pub fn target(&self) -> usize {
        r_bucket_target(self.n_max)
    }

    /// Updates between maintenance rounds.
    pub fn cadence(&self) -> u64 {
        self.config.alpha * loglog(self.n_max)
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    pub fn top_height(&self) -> u32 {
        self.top.height()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Every rebalancing performed so far.
    pub fn actions(&self) -> &[Action] {
        &self.log
    }

    /// Size extremes at the end of every maintenance round.
    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundaries
    }

    pub fn total_work(&self) -> u64 {
        self.work
    }

    pub fn last_work(&self) -> u64 {
        self.last_work
    }

    pub fn allocated_cells(&self) -> usize {
        let buckets: usize = self
            .buckets
            .iter()
            .map(|b| b.elements.capacity() + b.slots.capacity() + 6)
            .sum();
        buckets + 4 * self.slots.capacity() + self.top.allocated_cells() + 2 * self.sizes.len()
    }

    fn order(&self) -> impl Iterator<Item = u32> + '_ {
        std::iter::successors(Some(self.first), |&b| {
            let n = self.buckets[b as usize].next;
            (n != NONE).then_some(n)
        })
    }

    /// Bucket ids in key order.
    pub fn bucket_ids(&self) -> Vec<BucketId> {
        self.order().map(BucketId).collect()
    }

    pub fn bucket_keys(&self, b: BucketId) -> &[Key] {
        &self.buckets[b.0 as usize].elements
    }

    /// Bucket sizes in key order.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.order().map(|b| self.buckets[b as usize].elements.len()).collect()
    }

    pub fn keys(&self) -> Vec<Key> {
        self.order()
            .flat_map(|b| self.buckets[b as usize].elements.iter().copied())
            .collect()
    }

    fn slot(&self, f: Finger) -> Result<&Slot> {
        match self.slots.get(f.slot as usize) {
            Some(s) if s.live && s.gen == f.gen => Ok(s),
            _ => Err(Error::StaleFinger),
        }
    }

    pub fn key(&self, f: Finger) -> Result<Key> {
        self.slot(f).map(|s| s.key)
    }

    pub fn bucket_of(&self, f: Finger) -> Result<BucketId> {
        self.slot(f).map(|s| BucketId(s.bucket))
    }

    fn finger_at(&self, b: u32, i: usize) -> Finger {
        let slot = self.buckets[b as usize].slots[i];
        Finger {
            slot,
            gen: self.slots[slot as usize].gen,
        }
    }

    fn new_slot(&mut self, bucket: u32, key: Key) -> u32 {
        match self.free_slots.pop() {
            Some(s) => {
                let e = &mut self.slots[s as usize];
                e.bucket = bucket;
                e.key = key;
                e.live = true;
                s
            }
            None => {
                self.slots.push(Slot {
                    gen: 0,
                    bucket,
                    key,
                    live: true,
                });
                (self.slots.len() - 1) as u32
            }
        }
    }

    fn new_bucket(&mut self, sep: Key) -> u32 {
        let fresh = RBucket {
            sep,
            prev: NONE,
            next: NONE,
            live: true,
            ..RBucket::default()
        };
        self.bucket_count += 1;
        let id = match self.free_buckets.pop() {
            Some(id) => {
                self.buckets[id as usize] = fresh;
                id
            }
            None => {
                self.buckets.push(fresh);
                (self.buckets.len() - 1) as u32
            }
        };
        self.sizes.insert((0, id));
        id
    }

    fn link_after(&mut self, prev: u32, b: u32) {
        let next = self.buckets[prev as usize].next;
        self.buckets[b as usize].prev = prev;
        self.buckets[b as usize].next = next;
        self.buckets[prev as usize].next = b;
        if next != NONE {
            self.buckets[next as usize].prev = b;
        }
    }

    fn retire_bucket(&mut self, b: u32) {
        let (prev, next) = {
            let bk = &self.buckets[b as usize];
            (bk.prev, bk.next)
        };
        if prev != NONE {
            self.buckets[prev as usize].next = next;
        }
        if next != NONE {
            self.buckets[next as usize].prev = prev;
        }
        let size = self.buckets[b as usize].elements.len();
        self.sizes.remove(&(size, b));
        self.buckets[b as usize] = RBucket::default();
        self.free_buckets.push(b);
        self.bucket_count -= 1;
    }

    /// Re-files bucket `b` in the size index after its size changed from
    /// `old`.
    fn resize_entry(&mut self, b: u32, old: usize) {
        self.sizes.remove(&(old, b));
        self.sizes.insert((self.buckets[b as usize].elements.len(), b));
    }

    /// Bucket whose key range holds `key`, starting the walk at `b` and
    /// stepping over empty buckets whose separators allow it.
    fn place_from(&self, mut b: u32, key: Key) -> u32 {
        loop {
            let next = self.buckets[b as usize].next;
            if next == NONE || self.buckets[next as usize].sep > key {
                return b;
            }
            b = next;
            if !self.buckets[b as usize].elements.is_empty() {
                return b;
            }
        }
    }

    /// Smallest key after bucket `b`'s keys.
    fn next_key_after(&self, b: u32) -> Option<Key> {
        let mut c = self.buckets[b as usize].next;
        while c != NONE {
            if let Some(&k) = self.buckets[c as usize].elements.first() {
                return Some(k);
            }
            c = self.buckets[c as usize].next;
        }
        None
    }

    fn insert_into(&mut self, b: u32, key: Key) -> Finger {
        let (hit, _) = predecessor_in(&self.buckets[b as usize].elements, key);
        let at = hit.map_or(0, |i| i + 1);
        let old = self.buckets[b as usize].elements.len();
        let slot = self.new_slot(b, key);
        let bk = &mut self.buckets[b as usize];
        bk.elements.insert(at, key);
        bk.slots.insert(at, slot);
        self.resize_entry(b, old);
        self.len += 1;
        self.n_max = self.n_max.max(self.len as u64);
        Finger {
            slot,
            gen: self.slots[slot as usize].gen,
        }
    }

    /// Inserts `key` right after the key held by `finger`.
    pub fn insert_at(&mut self, finger: Finger, key: Key) -> Result<Finger> {
        let s = self.slot(finger)?;
        let (fk, b) = (s.key, s.bucket);
        if key == fk {
            return Err(Error::DuplicateKey(key));
        }
        if key < fk {
            return Err(Error::KeyOutOfFingerRange { finger: fk, key });
        }
        let els = &self.buckets[b as usize].elements;
        let i = els.binary_search(&fk).expect("finger key in its bucket");
        let succ = els.get(i + 1).copied().or_else(|| self.next_key_after(b));
        match succ {
            Some(sk) if sk == key => return Err(Error::DuplicateKey(key)),
            Some(sk) if sk < key => return Err(Error::KeyOutOfFingerRange { finger: fk, key }),
            _ => {}
        }
        let target = if i + 1 < els.len() { b } else { self.place_from(b, key) };
        let f = self.insert_into(target, key);
        self.after_update(target, 1);
        Ok(f)
    }

    /// Inserts `key` below every stored key.
    pub fn insert_first(&mut self, key: Key) -> Result<Finger> {
        let first_key = self.next_key_from(self.first);
        match first_key {
            Some(k) if k == key => return Err(Error::DuplicateKey(key)),
            Some(k) if k < key => return Err(Error::KeyOutOfFingerRange { finger: k, key }),
            _ => {}
        }
        let target = if self.buckets[self.first as usize].elements.is_empty() {
            self.place_from(self.first, key)
        } else {
            self.first
        };
        let f = self.insert_into(target, key);
        self.after_update(target, 1);
        Ok(f)
    }

    fn next_key_from(&self, b: u32) -> Option<Key> {
        self.buckets[b as usize]
            .elements
            .first()
            .copied()
            .or_else(|| self.next_key_after(b))
    }

    /// Inserts `key` wherever it belongs, locating it from the root.
    pub fn insert(&mut self, key: Key) -> Result<Finger> {
        let (b, probes) = self.top.locate(key);
        let b = self.place_from(b, key);
        if self.buckets[b as usize].elements.binary_search(&key).is_ok() {
            return Err(Error::DuplicateKey(key));
        }
        let f = self.insert_into(b, key);
        self.after_update(b, 1 + probes);
        Ok(f)
    }

    pub fn delete_at(&mut self, finger: Finger) -> Result<Key> {
        let s = self.slot(finger)?;
        let (key, b) = (s.key, s.bucket);
        let bk = &mut self.buckets[b as usize];
        let i = bk.elements.binary_search(&key).expect("finger key in its bucket");
        let old = bk.elements.len();
        bk.elements.remove(i);
        bk.slots.remove(i);
        let e = &mut self.slots[finger.slot as usize];
        e.live = false;
        e.gen = e.gen.wrapping_add(1);
        self.free_slots.push(finger.slot);
        self.resize_entry(b, old);
        self.len -= 1;
        self.after_update(b, 1);
        Ok(key)
    }

    fn after_update(&mut self, b: u32, work: u64) {
        self.buckets[b as usize].delta += 1;
        self.window.push(b);
        let mut work = work;
        if self.config.auto_maintenance && self.window.len() as u64 >= self.cadence() {
            let before = self.top.work();
            let moved = self.maintenance_inner();
            work += moved + (self.top.work() - before);
        }
        self.work += work;
        self.last_work = work;
    }

    /// Finds `key` from the root.
    pub fn find(&self, key: Key) -> Option<Finger> {
        let (b, _) = self.top.locate(key);
        let b = self.place_from(b, key);
        let i = self.buckets[b as usize].elements.binary_search(&key).ok()?;
        Some(self.finger_at(b, i))
    }

    /// Finger to the largest key `<= key`.
    pub fn predecessor(&self, key: Key) -> Option<Finger> {
        let (b, _) = self.top.locate(key);
        let mut b = self.place_from(b, key);
        loop {
            let els = &self.buckets[b as usize].elements;
            if let (Some(i), _) = predecessor_in(els, key) {
                return Some(self.finger_at(b, i));
            }
            b = self.buckets[b as usize].prev;
            if b == NONE {
                return None;
            }
        }
    }

    /// Searches for `key` starting from the finger `p`.
    pub fn finger_search(&self, p: Finger, key: Key) -> Result<RFound> {
        let b = self.slot(p)?.bucket;
        let els = &self.buckets[b as usize].elements;
        let mut bucket_probes = 2;
        let mut tree_probes = 0;
        let target = if els[0] <= key && key <= els[els.len() - 1] {
            b
        } else {
            let (c, probes) = self.top.locate_from(b, key);
            tree_probes += probes;
            self.place_from(c, key)
        };
        let els = &self.buckets[target as usize].elements;
        let (hit, probes) = predecessor_in(els, key);
        bucket_probes += probes;
        match hit {
            Some(i) if els[i] == key => Ok(RFound {
                finger: self.finger_at(target, i),
                tree_probes,
                bucket_probes,
            }),
            _ => Err(Error::KeyAbsent(key)),
        }
    }

    fn is_critical_bucket(&self, b: u32) -> bool {
        is_critical(self.buckets[b as usize].elements.len(), self.target())
    }

    /// Criticality of bucket `b` at the current `n`.
    pub fn bucket_criticality(&self, b: BucketId) -> f64 {
        criticality(self.buckets[b.0 as usize].elements.len(), self.n_max, self.config.alpha)
    }

    /// Bucket with the largest criticality, lowest id on ties.
    fn most_critical(&self) -> u32 {
        let &(small, small_id) = self.sizes.first().expect("at least one bucket");
        let &(large, _) = self.sizes.last().expect("at least one bucket");
        let large_id = self.sizes.range((large, 0)..).next().expect("present").1;
        let t = self.target() as i64;
        // Compare 10·excess to stay in integers.
        let low = 7 * t - 10 * small as i64;
        let high = 10 * large as i64 - 18 * t;
        if low > high || (low == high && small_id < large_id) {
            small_id
        } else {
            large_id
        }
    }

    /// Runs one maintenance round now and returns the actions it took.
    pub fn maintenance_round(&mut self) -> Vec<Action> {
        let before = self.top.work();
        let start = self.log.len();
        let moved = self.maintenance_inner();
        self.work += moved + (self.top.work() - before);
        self.log[start..].to_vec()
    }

    fn maintenance_inner(&mut self) -> u64 {
        self.rounds += 1;
        let mut work = 0;
        if !self.window.is_empty() {
            let i = self.rng.gen_range(0..self.window.len());
            let b = self.window[i];
            for &w in &self.window {
                self.buckets[w as usize].delta = 0;
            }
            self.window.clear();
            if self.buckets[b as usize].live && self.is_critical_bucket(b) {
                work += self.rebalance_step(b, 1);
            }
        }
        let b = self.most_critical();
        if self.is_critical_bucket(b) {
            work += self.rebalance_step(b, 2);
        }
        let &(min_size, _) = self.sizes.first().expect("at least one bucket");
        let &(max_size, _) = self.sizes.last().expect("at least one bucket");
        self.boundaries.push(Boundary {
            round: self.rounds,
            buckets: self.bucket_count,
            min_size,
            max_size,
            target: self.target(),
        });
        work
    }

    fn rebalance_step(&mut self, b: u32, step: u8) -> u64 {
        let size_before = self.buckets[b as usize].elements.len();
        let (kind, touched, work) = match self.rebalance_inner(b) {
            Some(r) => r,
            None => return 0,
        };
        let t = self.target();
        let sizes_after: Vec<usize> = touched
            .iter()
            .map(|&c| self.buckets[c as usize].elements.len())
            .collect();
        let settled = self.bucket_count == 1 || sizes_after.iter().all(|&s| !is_critical(s, t));
        self.log.push(Action {
            round: self.rounds,
            step,
            kind,
            bucket: BucketId(b),
            size_before,
            sizes_after,
            settled,
        });
        work
    }

    /// Rebalances bucket `b` if it is critical.
    pub fn rebalance(&mut self, b: BucketId) -> Option<Action> {
        if !self.buckets.get(b.0 as usize).is_some_and(|bk| bk.live) || !self.is_critical_bucket(b.0) {
            return None;
        }
        let before = self.top.work();
        let start = self.log.len();
        let moved = self.rebalance_step(b.0, 0);
        self.work += moved + (self.top.work() - before);
        self.log.get(start).cloned()
    }

    /// Returns the action, the buckets it left behind in key order and the
    /// element moves made.
    fn rebalance_inner(&mut self, b: u32) -> Option<(ActionKind, Vec<u32>, u64)> {
        let t = self.target();
        let size = self.buckets[b as usize].elements.len();
        let mut work = 0;
        if is_high(size, t) {
            let parts = self.split_all(b, &mut work);
            return Some((ActionKind::Split, parts, work));
        }
        if !is_low(size, t) || self.bucket_count == 1 {
            return None;
        }
        let (prev, next) = (self.buckets[b as usize].prev, self.buckets[b as usize].next);
        let len_of = |c: u32| (c != NONE).then(|| self.buckets[c as usize].elements.len());
        let (lp, ln) = (len_of(prev), len_of(next));
        // Donor: the larger neighbour with fullness at least 1, right on ties.
        let donor = match (lp.filter(|&s| s >= t), ln.filter(|&s| s >= t)) {
            (Some(a), Some(c)) => Some(if a > c { prev } else { next }),
            (Some(_), None) => Some(prev),
            (None, Some(_)) => Some(next),
            (None, None) => None,
        };
        if let Some(d) = donor {
            let total = size + self.buckets[d as usize].elements.len();
            let (lo, hi) = (total / 2, total.div_ceil(2));
            if !is_low(lo, t) && !is_high(hi, t) {
                let (left, right) = if d == prev { (d, b) } else { (b, d) };
                let left_size = if d == prev { hi } else { lo };
                self.equalize(left, right, left_size, &mut work);
                return Some((ActionKind::Transfer, vec![left, right], work));
            }
        }
        let mut cur = b;
        loop {
            let (prev, next) = (self.buckets[cur as usize].prev, self.buckets[cur as usize].next);
            let len_of = |c: u32| (c != NONE).then(|| self.buckets[c as usize].elements.len());
            let with = match (len_of(prev), len_of(next)) {
                (Some(a), Some(c)) => {
                    if a < c {
                        prev
                    } else {
                        next
                    }
                }
                (Some(_), None) => prev,
                (None, Some(_)) => next,
                (None, None) => break,
            };
            let (left, right) = if with == prev { (with, cur) } else { (cur, with) };
            self.fuse(left, right, &mut work);
            cur = left;
            let s = self.buckets[cur as usize].elements.len();
            if is_high(s, t) {
                let parts = self.split_all(cur, &mut work);
                return Some((ActionKind::Fuse, parts, work));
            }
            if !is_low(s, t) {
                break;
            }
        }
        Some((ActionKind::Fuse, vec![cur], work))
    }

    /// Splits `b` into halves repeatedly until no part is over the upper
    /// threshold. Returns the parts in order.
    fn split_all(&mut self, b: u32, work: &mut u64) -> Vec<u32> {
        let t = self.target();
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(c) = stack.pop() {
            if is_high(self.buckets[c as usize].elements.len(), t) {
                let right = self.split(c, work);
                stack.push(right);
                stack.push(c);
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Moves the upper half of `b` into a new bucket right after it.
    fn split(&mut self, b: u32, work: &mut u64) -> u32 {
        let old = self.buckets[b as usize].elements.len();
        let keep = old.div_ceil(2);
        let bk = &mut self.buckets[b as usize];
        let elements = bk.elements.split_off(keep);
        let slots = bk.slots.split_off(keep);
        let sep = elements[0];
        let right = self.new_bucket(sep);
        for &s in &slots {
            self.slots[s as usize].bucket = right;
        }
        *work += elements.len() as u64;
        let rb = &mut self.buckets[right as usize];
        rb.elements = elements;
        rb.slots = slots;
        self.link_after(b, right);
        self.top.insert_after(b, right, sep);
        self.resize_entry(b, old);
        self.resize_entry(right, 0);
        right
    }

    /// Appends `right`'s keys to `left` and retires `right`.
    fn fuse(&mut self, left: u32, right: u32, work: &mut u64) {
        let old = self.buckets[left as usize].elements.len();
        let rb = &mut self.buckets[right as usize];
        let elements = std::mem::take(&mut rb.elements);
        let slots = std::mem::take(&mut rb.slots);
        let right_old = elements.len();
        self.sizes.remove(&(right_old, right));
        self.sizes.insert((0, right));
        for &s in &slots {
            self.slots[s as usize].bucket = left;
        }
        *work += elements.len() as u64 + 1;
        let lb = &mut self.buckets[left as usize];
        lb.elements.extend(elements);
        lb.slots.extend(slots);
        self.top.remove(right);
        self.retire_bucket(right);
        self.resize_entry(left, old);
    }

    /// Moves keys across the boundary of adjacent buckets until `left` holds
    /// `left_size` of them.
    fn equalize(&mut self, left: u32, right: u32, left_size: usize, work: &mut u64) {
        let (lo, ro) = (
            self.buckets[left as usize].elements.len(),
            self.buckets[right as usize].elements.len(),
        );
        if left_size > lo {
            let k = left_size - lo;
            let rb = &mut self.buckets[right as usize];
            let els: Vec<Key> = rb.elements.drain(..k).collect();
            let sl: Vec<u32> = rb.slots.drain(..k).collect();
            for &s in &sl {
                self.slots[s as usize].bucket = left;
            }
            let lb = &mut self.buckets[left as usize];
            lb.elements.extend(els);
            lb.slots.extend(sl);
            *work += k as u64 + ro as u64;
        } else {
            let k = lo - left_size;
            let lb = &mut self.buckets[left as usize];
            let els: Vec<Key> = lb.elements.drain(left_size..).collect();
            let sl: Vec<u32> = lb.slots.drain(left_size..).collect();
            for &s in &sl {
                self.slots[s as usize].bucket = right;
            }
            let rb = &mut self.buckets[right as usize];
            rb.elements.splice(0..0, els);
            rb.slots.splice(0..0, sl);
            *work += k as u64 + ro as u64;
        }
        let sep = self.buckets[right as usize].elements[0];
        self.buckets[right as usize].sep = sep;
        self.top.set_sep(right, sep);
        self.resize_entry(left, lo);
        self.resize_entry(right, ro);
    }

    /// Checks ordering, separators, finger slots, the size index and the top
    /// tree.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut prev_key: Option<Key> = None;
        let mut count = 0;
        let mut order = Vec::new();
        let mut last = NONE;
        for b in self.order() {
            let bk = &self.buckets[b as usize];
            if !bk.live || bk.prev != last {
                return Err(format!("bucket links at {b}"));
            }
            if b == self.first && (bk.sep != 0 || bk.prev != NONE) {
                return Err("first separator".into());
            }
            if prev_key.is_some_and(|p| bk.sep <= p) || bk.elements.first().is_some_and(|&k| k < bk.sep) {
                return Err(format!("separator of bucket {b}"));
            }
            if bk.elements.len() != bk.slots.len() {
                return Err(format!("slots of bucket {b}"));
            }
            for (&k, &s) in bk.elements.iter().zip(&bk.slots) {
                if prev_key.is_some_and(|p| p >= k) {
                    return Err(format!("order at key {k}"));
                }
                let e = &self.slots[s as usize];
                if !e.live || e.bucket != b || e.key != k {
                    return Err(format!("slot of key {k}"));
                }
                prev_key = Some(k);
            }
            if !self.sizes.contains(&(bk.elements.len(), b)) {
                return Err(format!("size index of bucket {b}"));
            }
            count += bk.elements.len();
            order.push((b, bk.sep));
            last = b;
        }
        if count != self.len || order.len() != self.bucket_count || self.sizes.len() != self.bucket_count {
            return Err("counts".into());
        }
        self.top.validate(&order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manual() -> Config {
        Config {
            auto_maintenance: false,
            ..Config::default()
        }
    }

    /// Dictionary at `n = 2^16` whose first buckets have the given sizes and
    /// the rest the target size.
    fn with_sizes(prefix: &[usize]) -> RandomizedFingerDict {
        // Stay at or below 2^16 keys so the target remains 16.
        let n = (1usize << 16) - 64;
        let keys: Vec<Key> = (1..=n as u64).map(|k| k << 10).collect();
        let mut d = RandomizedFingerDict::from_sorted(&keys, 1, manual()).unwrap();
        assert_eq!(d.target(), 16);
        // Reshape: delete from or insert into the leading buckets.
        for (i, &want) in prefix.iter().enumerate() {
            let b = d.bucket_ids()[i];
            while d.bucket_keys(b).len() > want {
                let k = d.bucket_keys(b)[0];
                let f = d.find(k).unwrap();
                d.delete_at(f).unwrap();
            }
            while d.bucket_keys(b).len() < want {
                let &k = d.bucket_keys(b).last().unwrap();
                let f = d.find(k).unwrap();
                d.insert_at(f, k + 1).unwrap_or_else(|_| panic!("room after {k}"));
            }
        }
        d.validate().unwrap();
        assert_eq!(d.target(), 16);
        d
    }

    #[test]
    fn insert_examples() {
        let mut d = RandomizedFingerDict::new(7);
        let f10 = d.insert_first(10).unwrap();
        d.insert_at(f10, 20).unwrap();
        d.insert_at(f10, 15).unwrap();
        assert_eq!(d.keys(), vec![10, 15, 20]);
        assert_eq!(
            d.insert_at(f10, 25).unwrap_err(),
            Error::KeyOutOfFingerRange { finger: 10, key: 25 }
        );
        assert_eq!(d.insert_at(f10, 15).unwrap_err(), Error::DuplicateKey(15));
        assert_eq!(d.insert_first(10).unwrap_err(), Error::DuplicateKey(10));
        d.validate().unwrap();
    }

    #[test]
    fn delete_then_search_is_absent() {
        let mut d = RandomizedFingerDict::new(7);
        for k in 1..=200 {
            d.insert(k * 3).unwrap();
        }
        let f = d.find(300).unwrap();
        assert_eq!(d.delete_at(f), Ok(300));
        assert_eq!(d.delete_at(f), Err(Error::StaleFinger));
        let p = d.find(3).unwrap();
        assert_eq!(d.finger_search(p, 300).unwrap_err(), Error::KeyAbsent(300));
        assert!(d.find(300).is_none());
        d.validate().unwrap();
    }

    #[test]
    fn emptied_bucket_is_fused_at_next_check() {
        let mut d = with_sizes(&[16, 16, 1]);
        let b = d.bucket_ids()[2];
        let k = d.bucket_keys(b)[0];
        d.delete_at(d.find(k).unwrap()).unwrap();
        assert!(d.bucket_keys(b).is_empty());
        let actions = d.maintenance_round();
        assert!(actions.iter().any(|a| a.bucket == b && a.kind == ActionKind::Fuse), "{actions:?}");
        d.validate().unwrap();
    }

    #[test]
    fn quiet_round_takes_no_action() {
        let keys: Vec<Key> = (1..=4096).collect();
        let mut d = RandomizedFingerDict::from_sorted(&keys, 3, manual()).unwrap();
        assert!(d.maintenance_round().is_empty());
    }

    #[test]
    fn oversized_bucket_is_split() {
        let mut d = with_sizes(&[31]);
        let actions = d.maintenance_round();
        let a = &actions[0];
        assert_eq!((a.kind, a.size_before), (ActionKind::Split, 31));
        assert_eq!(a.sizes_after, vec![16, 15]);
    }

    #[test]
    fn rebalance_examples() {
        let mut d = with_sizes(&[30]);
        let b = d.bucket_ids()[0];
        let a = d.rebalance(b).unwrap();
        assert_eq!((a.kind, a.sizes_after.clone()), (ActionKind::Split, vec![15, 15]));

        let mut d = with_sizes(&[16, 8, 24]);
        let b = d.bucket_ids()[1];
        let a = d.rebalance(b).unwrap();
        assert_eq!((a.kind, a.sizes_after.clone()), (ActionKind::Transfer, vec![16, 16]));
        assert!(a.settled);

        let mut d = with_sizes(&[8, 12]);
        let b = d.bucket_ids()[0];
        let a = d.rebalance(b).unwrap();
        assert_eq!((a.kind, a.sizes_after.clone()), (ActionKind::Fuse, vec![20]));
        d.validate().unwrap();
    }

    #[test]
    fn fingers_survive_rebalancing() {
        let mut d = with_sizes(&[16, 8, 24, 40]);
        let keys = d.keys();
        let fingers: Vec<Finger> = keys.iter().take(200).map(|&k| d.find(k).unwrap()).collect();
        for b in d.bucket_ids().into_iter().take(4) {
            d.rebalance(b);
        }
        d.validate().unwrap();
        for (f, &k) in fingers.iter().zip(&keys) {
            assert_eq!(d.key(*f), Ok(k));
        }
    }

    #[test]
    fn finger_search_layers() {
        let keys: Vec<Key> = (1..=1 << 14).map(|k| k * 2).collect();
        let d = RandomizedFingerDict::from_sorted(&keys, 5, Config::default()).unwrap();
        let p = d.find(keys[100]).unwrap();
        let same = d.finger_search(p, keys[101]).unwrap();
        assert_eq!(same.tree_probes, 0);
        assert_eq!(d.key(same.finger), Ok(keys[101]));
        let b = d.bucket_of(p).unwrap();
        let next_first = d.bucket_keys(d.bucket_ids()[d.bucket_ids().iter().position(|&x| x == b).unwrap() + 1])[0];
        let adj = d.finger_search(p, next_first).unwrap();
        assert_eq!(d.key(adj.finger), Ok(next_first));
        assert!(adj.tree_probes <= 8, "adjacent bucket cost {}", adj.tree_probes);
        for (i, &k) in keys.iter().enumerate().step_by(101) {
            for &j in &[0usize, 5000, 16383] {
                let f = d.find(keys[j]).unwrap();
                assert_eq!(d.key(d.finger_search(f, k).unwrap().finger), Ok(k), "i={i}");
            }
        }
    }

    #[test]
    fn seeded_replay_is_identical() {
        let run = |seed| {
            let mut d = RandomizedFingerDict::new(seed);
            let mut x = 1u64;
            for _ in 0..20_000 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                let k = x >> 40;
                if (x >> 20).is_multiple_of(3) {
                    if let Some(f) = d.find(k) {
                        d.delete_at(f).unwrap();
                        continue;
                    }
                }
                let _ = d.insert(k);
            }
            d.validate().unwrap();
            (d.actions().to_vec(), d.total_work(), d.keys())
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).0, run(10).0);
    }
}
