//! General-position finger dictionary: buckets of `Θ(log² log n)` keys under
//! a level-linked top tree, with bucket sizes maintained by a randomized
//! zeroing strategy.
//!
//! Every `c = α·⌈log2 log2 n⌉` updates a maintenance round checks one bucket
//! drawn with probability proportional to the updates it received in the
//! window, then the most critical bucket, and rebalances each if its size is
//! outside `[0.7·T, 1.8·T]` for the target size `T`. Here `n` is the largest
//! key count ever held, so targets never shrink.

mod dict;
mod top_tree;

pub use dict::{Action, ActionKind, Boundary, BucketId, Config, Finger, RFound, RandomizedFingerDict};

/// Default rebalancing cadence multiplier.
pub const DEFAULT_ALPHA: u64 = 2;

/// `⌈log2 log2 max(n, 4)⌉`.
pub fn loglog(n: u64) -> u64 {
    let ceil_log2 = |x: u64| 64 - u64::from((x - 1).leading_zeros());
    ceil_log2(ceil_log2(n.max(4)))
}

/// Target bucket size `max(8, ⌈(log2 log2 max(n, 4))²⌉)`.
pub fn r_bucket_target(n: u64) -> usize {
    let ll = (n.max(4) as f64).log2().log2();
    ((ll * ll).ceil() as usize).max(8)
}

/// `|b| / T`.
pub fn fullness(size: usize, n: u64) -> f64 {
    size as f64 / r_bucket_target(n) as f64
}

/// `max(0, 0.7·T − |b|, |b| − 1.8·T) / (α·⌈log2 log2 n⌉)`.
pub fn criticality(size: usize, n: u64, alpha: u64) -> f64 {
    let t = r_bucket_target(n) as f64;
    let s = size as f64;
    let excess = (0.7 * t - s).max(s - 1.8 * t).max(0.0);
    excess / (alpha * loglog(n)) as f64
}

/// Exact test for `criticality > 0`.
pub fn is_critical(size: usize, target: usize) -> bool {
    10 * size < 7 * target || 10 * size > 18 * target
}

pub(crate) fn is_low(size: usize, target: usize) -> bool {
    10 * size < 7 * target
}

pub(crate) fn is_high(size: usize, target: usize) -> bool {
    10 * size > 18 * target
}
