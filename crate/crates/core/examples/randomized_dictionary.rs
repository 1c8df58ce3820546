//! General inserts and deletes in the randomized dictionary, with the
//! maintenance rounds that keep its buckets near the target size.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;

use fingerset::randomized::{Config, RandomizedFingerDict};

fn main() -> fingerset::Result<()> {
    let mut rng = Pcg32::seed_from_u64(7);
    let mut dict = RandomizedFingerDict::with_config(7, Config::default());
    let mut stored = Vec::new();
    for _ in 0..50_000 {
        let k = rng.gen_range(0..1u64 << 32);
        if dict.insert(k).is_ok() {
            stored.push(k);
        }
    }
    for _ in 0..20_000 {
        let k = stored.swap_remove(rng.gen_range(0..stored.len()));
        dict.delete_at(dict.find(k).unwrap())?;
    }
    let sizes = dict.bucket_sizes();
    println!(
        "{} keys, {} buckets, target {}, sizes {}..{}, {} rounds, {} rebalancings",
        dict.len(),
        dict.bucket_count(),
        dict.target(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        dict.rounds(),
        dict.actions().len()
    );

    // A finger keeps pointing at its key while buckets split and fuse.
    stored.sort_unstable();
    let finger = dict.find(stored[100]).unwrap();
    for d in [0usize, 5, 50, 500, 5_000] {
        let found = dict.finger_search(finger, stored[100 + d])?;
        println!("d = {d:>4}: {} tree + {} bucket probes", found.tree_probes, found.bucket_probes);
    }
    let worst = dict.boundaries().iter().filter(|b| !b.within_window()).count();
    println!("boundaries outside the 0.5..2.0 window: {worst}");
    dict.validate().expect("valid dictionary");
    Ok(())
}
