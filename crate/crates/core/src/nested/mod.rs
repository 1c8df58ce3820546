//! Leaf-oriented, level-linked nested balanced distributed tree.
//!
//! In a balanced distributed tree (BDT) the nodes of level `i` have degree
//! `d(i)` equal to the number `t(i)` of nodes on that level: `d(0) = 2`,
//! `t(0) = 1`, and `d(i) = t(i) = 2^(2^(i-1))` for `i >= 1`. A BDT of height
//! `h` has `t(h)` leaves, so its height is `O(log log n)`.
//!
//! The same BDT shape is imposed again on every group of leaves sharing a
//! parent, recursively. Because leaves are only ever appended or removed at
//! the tail, every tree of every nesting level covers an aligned block of
//! leaf positions: the trees of *family* `j` cover blocks of `2^(2^j)`
//! leaves and have height `j + 1`. Family `0` consists of pairs under a root
//! of degree 2, and the outermost tree is the single tree of the largest
//! family in use. A leaf therefore has one copy per family, and its copy in
//! family `j` sits under a parent spanning `2^(2^(j-1))` leaves.
//!
//! [`NestedForest::fsearch`] starts at a leaf, picks the smallest family
//! whose block around the finger contains the target, hops to that copy and
//! finishes with predecessor queries in the few nodes of one small tree.

mod forest;
mod search;
mod validate;

pub use forest::{Leaf, LeafHandle, NestedForest, MAX_FAMILIES};
pub use search::nested_level_select;
pub use validate::Violation;

/// Saturation value of the degree schedule.
pub const DEGREE_CAP: u64 = 1 << 63;

/// Degree `d(i)` of the nodes on level `i`.
pub fn degree_at(i: u32) -> u64 {
    match i {
        0 => 2,
        // 2^(2^(i-1)) fits in a u64 for i <= 6.
        1..=6 => 1u64.checked_shl(1 << (i - 1)).unwrap_or(DEGREE_CAP),
        _ => DEGREE_CAP,
    }
    .min(DEGREE_CAP)
}

/// Number of nodes `t(i)` on level `i`: `t(0) = 1`, `t(i) = t(i-1)·d(i-1)`.
pub fn node_count_at(i: u32) -> u64 {
    (0..i).fold(1u64, |t, l| t.saturating_mul(degree_at(l)).min(DEGREE_CAP))
}

/// Smallest height `h` with `t(h) >= n`; leaves of a forest holding `n`
/// leaves live on level `h`.
pub fn capacity_height(n: u64) -> u32 {
    let mut h = 0;
    // t(7) saturates, so a 64-bit leaf count never needs more than 7 levels.
    while h < 7 && node_count_at(h) < n {
        h += 1;
    }
    h
}

/// Number of leaves in a block of family `j`: `2^(2^j)`.
pub(crate) fn block_len(j: usize) -> u64 {
    degree_at(j as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unrolls `t(i) = t(i-1)·d(i-1)` with exact big arithmetic in u128.
    fn unrolled_t(i: u32) -> u128 {
        let mut t: u128 = 1;
        let mut d: u128 = 2;
        for level in 0..i {
            t *= d;
            let next = level + 1;
            d = 1u128 << (1u32 << (next - 1));
        }
        t
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree_at(0), 2);
        assert_eq!(degree_at(1), 2);
        assert_eq!(degree_at(3), 16);
        assert_eq!(degree_at(7), DEGREE_CAP);
        assert_eq!(degree_at(40), DEGREE_CAP);
    }

    #[test]
    fn node_count_examples() {
        assert_eq!(node_count_at(0), 1);
        assert_eq!(node_count_at(2), 4);
        assert_eq!(node_count_at(4), 256);
        for i in 0..=6 {
            assert_eq!(u128::from(node_count_at(i)), unrolled_t(i), "t({i})");
        }
    }

    #[test]
    fn degree_equals_node_count() {
        for i in 1..=6 {
            assert_eq!(degree_at(i), node_count_at(i));
            assert_eq!(u128::from(degree_at(i)), 1u128 << (1u32 << (i - 1)));
        }
    }

    #[test]
    fn capacity_height_examples() {
        assert_eq!(capacity_height(1), 0);
        assert_eq!(capacity_height(2), 1);
        assert_eq!(capacity_height(16), 3);
        assert_eq!(capacity_height(1000), 5);
        // Brute-force scan of t(i) values.
        for n in 1..5000u64 {
            let h = (0..).find(|&h| unrolled_t(h) >= u128::from(n)).unwrap();
            assert_eq!(capacity_height(n), h, "n={n}");
        }
        assert_eq!(capacity_height(u64::MAX), 7);
    }
}
