use std::fmt;

use super::forest::{NestedForest, NO_PARENT};
use super::{capacity_height, degree_at};
use crate::predecessor::predecessor_in;

/// A broken structural invariant found by [`NestedForest::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

impl std::error::Error for Violation {}

fn fail(invariant: &'static str, detail: String) -> Result<(), Violation> {
    Err(Violation { invariant, detail })
}

impl NestedForest {
    /// Checks every structural invariant of the committed forest. Returns the
    /// first violation found.
    pub fn validate(&self) -> Result<(), Violation> {
        if self.has_pending() {
            return fail("no pending append", "an append is in progress".into());
        }
        let keys = self.keys();
        if let Some(i) = keys.windows(2).position(|w| w[0] >= w[1]) {
            return fail("leaf keys strictly increasing", format!("positions {i} and {}", i + 1));
        }
        let depth = capacity_height(self.len as u64) as usize;
        if self.families.len() != depth {
            return fail(
                "family count equals capacity height",
                format!("{} families for {} leaves", self.families.len(), self.len),
            );
        }
        if self.height() != depth {
            return fail("height equals capacity height", format!("height {}", self.height()));
        }
        if depth >= 2 && self.families[depth - 2].levels.len() >= self.families[depth - 1].levels.len() {
            return fail("nested trees are shallower", format!("family {}", depth - 2));
        }
        for (j, fam) in self.families.iter().enumerate() {
            if fam.levels.len() != j + 1 {
                return fail("family height", format!("family {j} has {} levels", fam.levels.len()));
            }
            for (l, lvl) in fam.levels.iter().enumerate() {
                let want = (self.len as u64).div_ceil(Self::span(j, l)) as usize;
                if lvl.nodes.len() != want || lvl.maxima.len() != want {
                    return fail(
                        "node count per level",
                        format!("family {j} level {l}: {} nodes, want {want}", lvl.nodes.len()),
                    );
                }
            }
        }
        for (j, fam) in self.families.iter().enumerate() {
            for (l, lvl) in fam.levels.iter().enumerate() {
                let maxima = lvl.maxima.as_slice();
                if let Some(i) = maxima.windows(2).position(|w| w[0] >= w[1]) {
                    return fail(
                        "routing_keys strictly increasing",
                        format!("family {j} level {l} index {}", i + 1),
                    );
                }
                let span = Self::span(j, l);
                for (x, node) in lvl.nodes.iter().enumerate() {
                    let first = node.first_leaf as u64;
                    if first != x as u64 * span {
                        return fail("node block alignment", format!("family {j} level {l} node {x}"));
                    }
                    let parent_ok = if l == 0 {
                        node.parent == NO_PARENT
                    } else {
                        node.parent as u64 == first / Self::span(j, l - 1)
                    };
                    if !parent_ok {
                        return fail("parent link", format!("family {j} level {l} node {x}"));
                    }
                    let last = ((x as u64 + 1) * span).min(self.len as u64) as usize - 1;
                    let children = if l == j {
                        last + 1 - first as usize
                    } else {
                        let child_span = Self::span(j, l + 1);
                        (last as u64 / child_span - first / child_span + 1) as usize
                    };
                    if children as u64 > degree_at(l as u32) {
                        return fail("degree bound", format!("family {j} level {l} node {x}: {children}"));
                    }
                    if maxima[x] != keys[last] {
                        return fail("node maximum", format!("family {j} level {l} node {x}"));
                    }
                    if x > 0 && keys[first as usize - 1] >= keys[first as usize] {
                        return fail("level neighbours ordered", format!("family {j} level {l} node {x}"));
                    }
                    // The routing array must place the node's own range.
                    let slice = &keys[first as usize..=last];
                    let (hit, _) = predecessor_in(slice, keys[last]);
                    if hit != Some(slice.len() - 1) {
                        return fail("predecessor consistency", format!("family {j} level {l} node {x}"));
                    }
                }
            }
        }
        for pos in 0..self.len {
            for j in 0..depth {
                let w = Self::copy_link(pos, j) as usize;
                let node = &self.families[j].levels[j].nodes[w];
                let start = node.first_leaf as usize;
                if pos < start || pos as u64 >= start as u64 + degree_at(j as u32) {
                    return fail("copy link", format!("leaf {pos} family {j}"));
                }
            }
        }
        Ok(())
    }
}
