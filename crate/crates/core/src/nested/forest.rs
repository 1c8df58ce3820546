use arrayvec::ArrayVec;

use super::{block_len, capacity_height, degree_at};
use crate::predecessor::{TailDynamicIndex, DEFAULT_STEPS_PER_UPDATE};
use crate::{Error, Key, Result};

/// A 64-bit leaf count never needs more than this many families.
pub const MAX_FAMILIES: usize = 7;

pub(super) const NO_PARENT: u32 = u32::MAX;

/// Stable reference to a leaf. Leaves never move, so a handle stays valid
/// until its leaf is removed from the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafHandle(pub(crate) u32);

impl LeafHandle {
    /// 0-based rank of the leaf.
    pub fn position(self) -> usize {
        self.0 as usize
    }
}

/// Read-only view of a leaf and its per-family copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub key: Key,
    pub position: usize,
    /// `copy_links[j]` is the index of the parent node of this leaf's copy
    /// in family `j` (on level `j` of that family's trees).
    pub copy_links: ArrayVec<u32, MAX_FAMILIES>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct NodeMeta {
    pub parent: u32,
    pub first_leaf: u32,
}

/// All nodes of one level of one family, in left-to-right order. Adjacent
/// entries are level neighbours; the routing array of node `x` is the slice
/// of child maxima starting at `x · degree_at(level)`.
#[derive(Debug, Clone)]
pub(super) struct NodeLevel {
    pub nodes: Vec<NodeMeta>,
    /// `maxima[x]` is the largest key under node `x`.
    pub maxima: TailDynamicIndex,
}

#[derive(Debug, Clone)]
pub(super) struct Family {
    pub levels: Vec<NodeLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// Create the level-`level` node covering the existing leaves of a new
    /// outer family.
    Grow { family: usize, level: usize },
    PushLeaf,
    /// Extend or create the node on `level` of `family` holding the new leaf.
    Touch { family: usize, level: usize },
}

/// An append split into unit steps so that its cost can be spread over
/// several updates.
#[derive(Debug, Clone)]
struct AppendJob {
    key: Key,
    pos: usize,
    steps: Vec<Step>,
    next: usize,
}

/// The nested forest over a strictly increasing sequence of leaf keys.
#[derive(Debug, Clone)]
pub struct NestedForest {
    pub(super) leaves: TailDynamicIndex,
    pub(super) families: Vec<Family>,
    /// Committed leaf count; a pending append is not yet counted.
    pub(super) len: usize,
    pending: Option<AppendJob>,
    steps_per_update: usize,
    work: u64,
    last_work: u64,
}

impl Default for NestedForest {
    fn default() -> Self {
        Self::new()
    }
}

impl NestedForest {
    pub fn new() -> Self {
        Self::with_steps(DEFAULT_STEPS_PER_UPDATE)
    }

    /// Forest whose predecessor indexes spend at most `steps_per_update`
    /// copy steps per append on storage growth.
    pub fn with_steps(steps_per_update: usize) -> Self {
        NestedForest {
            leaves: TailDynamicIndex::with_steps(steps_per_update),
            families: Vec::new(),
            len: 0,
            pending: None,
            steps_per_update,
            work: 0,
            last_work: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn steps_per_update(&self) -> usize {
        self.steps_per_update
    }

    /// Number of families (nesting levels) in use; equals the tree height.
    pub fn nesting_depth(&self) -> usize {
        capacity_height(self.len as u64) as usize
    }

    /// Leaves spanned by one node on `level` of `family`.
    pub(super) fn span(family: usize, level: usize) -> u64 {
        (level..=family).fold(1u64, |acc, l| acc.saturating_mul(degree_at(l as u32)))
    }

    pub(super) fn outer(&self) -> Option<usize> {
        self.nesting_depth().checked_sub(1)
    }

    pub fn key_at(&self, pos: usize) -> Option<Key> {
        if pos < self.len {
            self.leaves.get(pos)
        } else {
            None
        }
    }

    pub fn key(&self, h: LeafHandle) -> Option<Key> {
        self.key_at(h.position())
    }

    pub fn handle_at(&self, pos: usize) -> Option<LeafHandle> {
        (pos < self.len).then_some(LeafHandle(pos as u32))
    }

    pub fn first(&self) -> Option<LeafHandle> {
        self.handle_at(0)
    }

    pub fn last(&self) -> Option<LeafHandle> {
        self.len.checked_sub(1).and_then(|p| self.handle_at(p))
    }

    /// Committed leaf keys in order.
    pub fn keys(&self) -> &[Key] {
        &self.leaves.as_slice()[..self.len]
    }

    pub fn max_key(&self) -> Option<Key> {
        self.len.checked_sub(1).and_then(|p| self.leaves.get(p))
    }

    pub fn leaf(&self, h: LeafHandle) -> Option<Leaf> {
        let key = self.key(h)?;
        let position = h.position();
        let copy_links = (0..self.nesting_depth())
            .map(|j| Self::copy_link(position, j))
            .collect();
        Some(Leaf {
            key,
            position,
            copy_links,
        })
    }

    /// Parent node of the copy of leaf `pos` in family `j`.
    pub(super) fn copy_link(pos: usize, j: usize) -> u32 {
        (pos as u64 / degree_at(j as u32)) as u32
    }

    /// Total work units spent on updates so far.
    pub fn total_work(&self) -> u64 {
        self.work
    }

    /// Work units spent by the most recent update call.
    pub fn last_work(&self) -> u64 {
        self.last_work
    }

    /// Measured height: levels walked from the outer root to a leaf.
    pub fn height(&self) -> usize {
        let Some(outer) = self.outer() else {
            return 0;
        };
        let fam = &self.families[outer];
        // Walk first children from the root down to the leftmost leaf.
        let mut x = 0usize;
        for (level, lvl) in fam.levels.iter().enumerate() {
            assert!(x < lvl.nodes.len(), "missing node on level {level}");
            x *= degree_at(level as u32) as usize;
        }
        debug_assert!(x < self.len);
        fam.levels.len()
    }

    /// Key cells plus node records currently allocated.
    pub fn allocated_cells(&self) -> usize {
        let nodes: usize = self
            .families
            .iter()
            .flat_map(|f| f.levels.iter())
            .map(|l| l.nodes.capacity() + l.maxima.allocated_cells())
            .sum();
        self.leaves.allocated_cells() + nodes
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Key of the append in progress, if any.
    pub fn pending_key(&self) -> Option<Key> {
        self.pending.as_ref().map(|j| j.key)
    }

    /// Upper bound on the work of one append at the current size, counting
    /// the storage-growth steps of every index it touches.
    pub fn append_cost_bound(&self) -> u64 {
        let h = capacity_height(self.len as u64 + 1) as u64;
        let steps = h + 1 + h * (h + 1) / 2;
        steps * (1 + self.steps_per_update as u64)
    }

    /// Appends `key` and completes all the work at once.
    pub fn append_leaf(&mut self, key: Key) -> Result<LeafHandle> {
        let mut work = self.finish_pending_inner();
        let h = self.begin_append_inner(key)?;
        work += self.advance_inner(u64::MAX);
        self.record(work);
        Ok(h)
    }

    /// Starts an append whose work is carried out by later calls to
    /// [`advance_pending`](Self::advance_pending). Until it finishes the new
    /// leaf is not visible, and searches for smaller keys stay correct.
    pub fn begin_append(&mut self, key: Key) -> Result<LeafHandle> {
        let work = self.finish_pending_inner();
        let h = self.begin_append_inner(key)?;
        self.record(work);
        Ok(h)
    }

    /// Runs steps of the pending append until `budget` work units are used
    /// (the last step may overshoot by its own cost). Returns the work done.
    pub fn advance_pending(&mut self, budget: u64) -> u64 {
        let work = self.advance_inner(budget);
        self.record(work);
        work
    }

    pub fn finish_pending(&mut self) -> u64 {
        let work = self.finish_pending_inner();
        self.record(work);
        work
    }

    fn record(&mut self, work: u64) {
        self.work += work;
        self.last_work = work;
    }

    fn finish_pending_inner(&mut self) -> u64 {
        if self.pending.is_some() {
            self.advance_inner(u64::MAX)
        } else {
            0
        }
    }

    fn begin_append_inner(&mut self, key: Key) -> Result<LeafHandle> {
        debug_assert!(self.pending.is_none());
        if let Some(max) = self.max_key() {
            if key <= max {
                return Err(Error::KeyNotGreaterThanMax { key, max });
            }
        }
        let pos = self.len;
        let new_len = pos + 1;
        let families = capacity_height(new_len as u64) as usize;
        let mut steps = Vec::with_capacity(families * (families + 3) / 2 + 1);
        if families > self.families.len() {
            debug_assert_eq!(families, self.families.len() + 1);
            let family = self.families.len();
            steps.extend((0..=family).map(|level| Step::Grow { family, level }));
        }
        steps.push(Step::PushLeaf);
        for family in 0..families {
            steps.extend((0..=family).rev().map(|level| Step::Touch { family, level }));
        }
        self.pending = Some(AppendJob {
            key,
            pos,
            steps,
            next: 0,
        });
        Ok(LeafHandle(pos as u32))
    }

    fn advance_inner(&mut self, budget: u64) -> u64 {
        let mut used = 0;
        while used < budget {
            let Some(job) = self.pending.as_mut() else {
                break;
            };
            let Some(&step) = job.steps.get(job.next) else {
                self.len = job.pos + 1;
                self.pending = None;
                break;
            };
            job.next += 1;
            let (key, pos) = (job.key, job.pos);
            used += self.run_step(step, key, pos);
        }
        if let Some(job) = &self.pending {
            if job.next == job.steps.len() {
                self.len = job.pos + 1;
                self.pending = None;
            }
        }
        used
    }

    fn run_step(&mut self, step: Step, key: Key, pos: usize) -> u64 {
        match step {
            Step::Grow { family, level } => {
                if level == 0 {
                    self.families.push(Family { levels: Vec::new() });
                }
                let max = self.leaves.get(pos - 1).expect("grow needs existing leaves");
                let mut maxima = TailDynamicIndex::with_steps(self.steps_per_update);
                maxima.append(max).expect("fresh index");
                let fam = &mut self.families[family];
                fam.levels.push(NodeLevel {
                    nodes: vec![NodeMeta {
                        parent: if level == 0 { NO_PARENT } else { 0 },
                        first_leaf: 0,
                    }],
                    maxima,
                });
                1
            }
            Step::PushLeaf => {
                self.leaves.append(key).expect("checked by begin_append");
                1 + self.leaves.last_rebuild_work()
            }
            Step::Touch { family, level } => {
                let span = Self::span(family, level);
                let x = (pos as u64 / span) as usize;
                let parent = if level == 0 {
                    NO_PARENT
                } else {
                    (pos as u64 / Self::span(family, level - 1)) as u32
                };
                let lvl = &mut self.families[family].levels[level];
                if x == lvl.nodes.len() {
                    lvl.nodes.push(NodeMeta {
                        parent,
                        first_leaf: pos as u32,
                    });
                    lvl.maxima.append(key).expect("new node max exceeds the rest");
                    1 + lvl.maxima.last_rebuild_work()
                } else {
                    debug_assert_eq!(x + 1, lvl.nodes.len());
                    lvl.maxima.set_last(key);
                    1
                }
            }
        }
    }

    /// Removes the rightmost leaf and its copies in every family.
    pub fn remove_tail_leaf(&mut self) -> Result<Key> {
        let mut work = self.finish_pending_inner();
        if self.len == 0 {
            self.record(work);
            return Err(Error::EmptyStructure);
        }
        let pos = self.len - 1;
        let removed = self.leaves.get(pos).expect("committed leaf");
        let new_max = pos.checked_sub(1).and_then(|p| self.leaves.get(p));
        for (family, fam) in self.families.iter_mut().enumerate() {
            for level in (0..=family).rev() {
                let span = Self::span(family, level);
                let x = (pos as u64 / span) as usize;
                let lvl = &mut fam.levels[level];
                debug_assert_eq!(x + 1, lvl.nodes.len());
                if lvl.nodes[x].first_leaf as usize == pos {
                    lvl.nodes.pop();
                    lvl.maxima.pop();
                } else {
                    lvl.maxima.set_last(new_max.expect("node keeps a leaf"));
                }
                work += 1;
            }
        }
        self.leaves.pop();
        work += 1;
        self.len = pos;
        let keep = capacity_height(self.len as u64) as usize;
        if self.families.len() > keep {
            work += self.families.len() as u64 - keep as u64;
            self.families.truncate(keep);
        }
        self.record(work);
        Ok(removed)
    }

    /// Blocks of family `j` hold this many leaves.
    pub fn block_len(j: usize) -> u64 {
        block_len(j)
    }

    /// Overwrites one routing key without restoring any invariant. Exists so
    /// tests can check that [`validate`](Self::validate) notices.
    #[doc(hidden)]
    pub fn debug_overwrite_routing_key(&mut self, family: usize, level: usize, index: usize, key: Key) {
        self.families[family].levels[level]
            .maxima
            .overwrite_unchecked(index, key);
    }
}
