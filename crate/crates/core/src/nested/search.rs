use std::ops::Range;

use super::forest::{LeafHandle, NestedForest, NO_PARENT};
use super::{block_len, degree_at};
use crate::predecessor::predecessor_in;
use crate::{Error, Found, Key, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Right,
    Left,
}

/// Picks the block size for a rightward search inside one routing array.
///
/// `a` is strictly increasing, `i` is the 1-based finger position and
/// `s > a[i]`. Returns the smallest `j >= 0` with
/// `s <= a[⌊i / 2^(2^j)⌋ · 2^(2^j) + 2^(2^j)]`, indexes past the end
/// clamping to the last entry.
///
/// # Panics
///
/// If `i` is out of `1..=a.len()` or `s <= a[i]`.
pub fn nested_level_select(i: usize, s: Key, a: &[Key]) -> Result<usize> {
    assert!(i >= 1 && i <= a.len(), "finger position {i} out of range");
    assert!(s > a[i - 1], "target must lie right of the finger");
    let last = a[a.len() - 1];
    if s > last {
        return Err(Error::TargetBeyondArray { target: s, last });
    }
    Ok(select_right(i, s, a).0)
}

/// Returns `(j, probes)`; one probe per iteration.
pub(super) fn select_right(i: usize, s: Key, a: &[Key]) -> (usize, u64) {
    let m = a.len() as u64;
    let i = i as u64;
    let mut j = 0;
    loop {
        let b = block_len(j);
        let idx = (i / b).saturating_mul(b).saturating_add(b).min(m);
        if s <= a[idx as usize - 1] {
            return (j, j as u64 + 1);
        }
        j += 1;
    }
}

/// Mirror image of [`select_right`] for `a[1] <= s < a[i]`: smallest `j`
/// with `s >= a[max(1, ⌈(i-1) / b⌉ · b - b + 1)]`, `b = 2^(2^j)`.
pub(super) fn select_left(i: usize, s: Key, a: &[Key]) -> (usize, u64) {
    let i = i as u64;
    let mut j = 0;
    loop {
        let b = block_len(j);
        let c = (i - 1).div_ceil(b).saturating_mul(b);
        let idx = if c >= b { c - b + 1 } else { 1 };
        if s >= a[idx as usize - 1] {
            return (j, j as u64 + 1);
        }
        j += 1;
    }
}

impl NestedForest {
    /// Number of committed nodes on `level` of `family`.
    fn node_count(&self, family: usize, level: usize) -> usize {
        (self.len as u64).div_ceil(Self::span(family, level)) as usize
    }

    fn first_leaf(&self, family: usize, level: usize, x: usize) -> usize {
        self.families[family].levels[level].nodes[x].first_leaf as usize
    }

    fn last_leaf(&self, family: usize, level: usize, x: usize) -> usize {
        let end = (x as u64 + 1).saturating_mul(Self::span(family, level));
        end.min(self.len as u64) as usize - 1
    }

    fn node_low(&self, family: usize, level: usize, x: usize) -> Key {
        self.leaves.as_slice()[self.first_leaf(family, level, x)]
    }

    fn node_max(&self, family: usize, level: usize, x: usize) -> Key {
        self.families[family].levels[level].maxima.as_slice()[x]
    }

    /// Children of node `x`: node indices on `level + 1`, or leaf positions
    /// when `level` is the family's leaf-parent level.
    fn children(&self, family: usize, level: usize, x: usize) -> Range<usize> {
        let d = degree_at(level as u32);
        let count = if level == family {
            self.len
        } else {
            self.node_count(family, level + 1)
        };
        let start = (x as u64).saturating_mul(d);
        let end = start.saturating_add(d).min(count as u64);
        start as usize..end as usize
    }

    /// Leaf holding `s`, searching from the finger `f`.
    pub fn fsearch(&self, f: LeafHandle, s: Key) -> Result<Found<LeafHandle>> {
        let found = self.locate(f, s)?;
        match found.handle {
            Some(h) if self.key(h) == Some(s) => Ok(Found {
                handle: h,
                probes: found.probes,
            }),
            _ => Err(Error::KeyAbsent(s)),
        }
    }

    /// Leaf holding the largest key `<= s` (`None` when every key exceeds
    /// `s`), searching from the finger `f`.
    pub fn locate(&self, f: LeafHandle, s: Key) -> Result<Found<Option<LeafHandle>>> {
        let fk = self.key(f).ok_or(Error::StaleFinger)?;
        if fk == s {
            return Ok(Found {
                handle: Some(f),
                probes: 0,
            });
        }
        let mut probes = 0;
        let pos = self.locate_from(f.position(), s, &mut probes);
        Ok(Found {
            handle: pos.map(|p| LeafHandle(p as u32)),
            probes,
        })
    }

    /// Top-down predecessor search from the outer root.
    pub fn search(&self, s: Key) -> Found<Option<LeafHandle>> {
        let mut probes = 1;
        let keys = self.keys();
        let pos = match (keys.first(), self.outer()) {
            (Some(&min), _) if s < min => None,
            (Some(_), _) if s >= keys[keys.len() - 1] => {
                probes += 1;
                Some(keys.len() - 1)
            }
            (Some(_), Some(outer)) => Some(self.descend(outer, 0, 0, s, &mut probes)),
            _ => None,
        };
        Found {
            handle: pos.map(|p| LeafHandle(p as u32)),
            probes,
        }
    }

    fn locate_from(&self, start: usize, s: Key, probes: &mut u64) -> Option<usize> {
        let keys = self.keys();
        let n = keys.len();
        *probes += 1;
        if s >= keys[n - 1] {
            return Some(n - 1);
        }
        *probes += 1;
        if s < keys[0] {
            return None;
        }
        // Here n >= 2, so the outer tree exists.
        let outer = self.outer().expect("two or more leaves");
        let mut family = outer;
        let mut p = start;
        let mut allow_hops = true;
        'search: loop {
            *probes += 1;
            let pk = keys[p];
            if pk == s {
                return Some(p);
            }
            let dir = if s > pk { Dir::Right } else { Dir::Left };
            let w = Self::copy_link(p, family) as usize;
            *probes += 1;
            if self.covers(family, family, w, s, dir) {
                // Finger and target share a parent: choose the smallest block
                // around the finger that reaches the target and hop to the
                // copy of the finger in the family built on that block size.
                if family > 0 && allow_hops {
                    let range = self.children(family, family, w);
                    let a = &keys[range.clone()];
                    let i = p - range.start + 1;
                    let (j, spent) = match dir {
                        Dir::Right => select_right(i, s, a),
                        Dir::Left => select_left(i, s, a),
                    };
                    *probes += spent;
                    if j + 1 < family {
                        family = j + 1;
                        continue 'search;
                    }
                }
                return Some(self.descend(family, family, w, s, probes));
            }
            // Walk up, checking the level neighbour in the search direction.
            let mut level = family;
            let mut u = w;
            loop {
                match dir {
                    Dir::Right if u + 1 < self.node_count(family, level) => {
                        let nb = u + 1;
                        *probes += 1;
                        if s < self.node_low(family, level, nb) {
                            return Some(self.first_leaf(family, level, nb) - 1);
                        }
                        *probes += 1;
                        if s <= self.node_max(family, level, nb) {
                            p = self.first_leaf(family, level, nb);
                            continue 'search;
                        }
                    }
                    Dir::Left if u > 0 => {
                        let nb = u - 1;
                        *probes += 1;
                        if s > self.node_max(family, level, nb) {
                            return Some(self.first_leaf(family, level, u) - 1);
                        }
                        *probes += 1;
                        if s >= self.node_low(family, level, nb) {
                            p = self.first_leaf(family, level, u) - 1;
                            continue 'search;
                        }
                    }
                    _ => {}
                }
                let parent = self.families[family].levels[level].nodes[u].parent;
                if parent == NO_PARENT {
                    // Root of a nested tree whose neighbour tree does not
                    // reach the target. Block windows never produce this;
                    // finish in the outer tree without further hops.
                    debug_assert!(false, "nested root reached without cover");
                    if family == outer {
                        return Some(self.descend(outer, 0, 0, s, probes));
                    }
                    family = outer;
                    allow_hops = false;
                    continue 'search;
                }
                level -= 1;
                u = parent as usize;
                *probes += 1;
                if self.covers(family, level, u, s, dir) {
                    return Some(self.descend(family, level, u, s, probes));
                }
            }
        }
    }

    /// Whether node `u` spans `s`, given that the finger lies inside `u` on
    /// the far side of `s`.
    fn covers(&self, family: usize, level: usize, u: usize, s: Key, dir: Dir) -> bool {
        match dir {
            Dir::Right => s <= self.node_max(family, level, u),
            Dir::Left => s >= self.node_low(family, level, u),
        }
    }

    /// Predecessor queries down the path from node `x` (which spans `s`) to
    /// the leaf holding the largest key `<= s`.
    fn descend(&self, family: usize, mut level: usize, mut x: usize, s: Key, probes: &mut u64) -> usize {
        loop {
            let range = self.children(family, level, x);
            if level == family {
                let (hit, spent) = predecessor_in(&self.keys()[range.clone()], s);
                *probes += spent;
                return range.start + hit.expect("node spans the target");
            }
            let maxima = &self.families[family].levels[level + 1].maxima;
            let (hit, spent) = maxima.predecessor_within(range.clone(), s);
            *probes += spent;
            let child = match hit {
                Some(c) if maxima.as_slice()[c] == s => {
                    return self.last_leaf(family, level + 1, c);
                }
                Some(c) => {
                    let next = c + 1;
                    debug_assert!(next < range.end);
                    *probes += 1;
                    if self.node_low(family, level + 1, next) > s {
                        return self.last_leaf(family, level + 1, c);
                    }
                    next
                }
                None => range.start,
            };
            level += 1;
            x = child;
        }
    }
}
