//! The probe-counted predecessor indexes used inside tree nodes.

use fingerset::predecessor::{predecessor_in, SmallSetIndex, TailDynamicIndex};

fn main() -> fingerset::Result<()> {
    let keys = [4, 9, 15, 23, 42, 77, 108];
    for x in [3, 4, 40, 1000] {
        let (hit, probes) = predecessor_in(&keys, x);
        println!("pred({x}) = {:?} in {probes} probes", hit.map(|i| keys[i]));
    }
    let small = SmallSetIndex::build_static(&keys)?;
    println!("static index: pred(50) = {:?}", small.predecessor(50));

    // Appends stay O(1) worst case; storage migrates a little at a time.
    let mut idx = TailDynamicIndex::with_steps(2);
    let mut worst = 0;
    for k in 0..100_000u64 {
        idx.append(3 * k)?;
        worst = worst.max(idx.last_rebuild_work());
    }
    println!(
        "{} keys, worst migration work per append {worst}, total {}, {} cells",
        idx.len(),
        idx.rebuild_work(),
        idx.allocated_cells()
    );
    println!("pred(1000) = {:?}", idx.predecessor(1000));
    Ok(())
}
