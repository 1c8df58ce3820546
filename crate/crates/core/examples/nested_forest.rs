//! The nested forest on its own: degrees, heights, block selection and
//! finger search over the leaves.

use fingerset::nested::{capacity_height, degree_at, nested_level_select, NestedForest};

fn main() -> fingerset::Result<()> {
    for i in 0..=5 {
        println!("level {i}: degree {}", degree_at(i));
    }
    for n in [2u64, 16, 17, 256, 65_536, 65_537] {
        println!("{n:>6} leaves need height {}", capacity_height(n));
    }

    let a = [3, 7, 11, 20, 31, 40, 52, 68];
    println!("select(2, 31) picks block family {}", nested_level_select(2, 31, &a)?);

    let mut forest = NestedForest::new();
    for k in 0..70_000u64 {
        forest.append_leaf(2 * k)?;
    }
    println!("{} leaves, height {}, {} cells", forest.len(), forest.height(), forest.allocated_cells());
    let f = forest.handle_at(12_345).unwrap();
    for d in [1u64, 10, 100, 1_000, 10_000] {
        let found = forest.fsearch(f, 2 * (12_345 + d))?;
        println!("d = {d:>5}: leaf {}, {} probes", found.handle.position(), found.probes);
    }
    let below = forest.locate(f, 7)?;
    println!("predecessor of 7 is {:?}", below.handle.and_then(|h| forest.key(h)));
    forest.validate().expect("valid forest");
    Ok(())
}
