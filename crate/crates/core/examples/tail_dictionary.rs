//! Append keys to the bucketed tail dictionary, search from fingers and
//! watch the bucket capacity change under global rebuilding.

use fingerset::bucket::TailFingerDict;

fn main() -> fingerset::Result<()> {
    let mut dict = TailFingerDict::new();
    for k in 1..=200_000u64 {
        dict.insert_tail(10 * k)?;
    }
    println!(
        "{} keys in {} buckets of capacity {}, {} rebuilds, max update work {} (bound {})",
        dict.len(),
        dict.bucket_count(),
        dict.capacity(),
        dict.rebuild_count(),
        dict.max_update_work(),
        dict.update_work_bound()
    );

    let finger = dict.handle_at(1000).expect("rank in range");
    for d in [0usize, 3, 40, 4_000, 150_000] {
        let target = dict.key(dict.handle_at(1000 + d).unwrap()).unwrap();
        let found = dict.search_star(finger, target)?;
        println!(
            "d = {d:>6}: rank {:>6}, {} forest + {} bucket probes",
            found.handle.rank(),
            found.forest_probes,
            found.bucket_probes
        );
    }

    while dict.len() > 1_000 {
        dict.delete_tail()?;
    }
    println!("shrunk to {} keys, capacity {}", dict.len(), dict.capacity());
    dict.validate().expect("valid dictionary");
    Ok(())
}
