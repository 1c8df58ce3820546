//! Monte-Carlo runs of the oblivious zeroing game against each adversary,
//! in both decreaser modes.

use fingerset::pebble::{monte_carlo, run_game, AdversaryKind, DecreaserMode};

fn main() {
    let (n, c) = (1usize << 14, 4);
    for mode in [DecreaserMode::Both, DecreaserMode::Alternate] {
        let runs = monte_carlo(n, n as u64, c, &AdversaryKind::ALL, 0..20, mode);
        for kind in AdversaryKind::ALL {
            let m = runs.iter().filter(|r| r.adversary == kind).map(|r| r.max_seen).max().unwrap();
            println!("{mode:?} {:>13}: max M over 20 seeds {m}", kind.name());
        }
    }
    let out = run_game(n, 1000, c, AdversaryKind::RandomSpread, 3, DecreaserMode::Both);
    println!("largest pile in the first rounds: {:?}", &out.round_maxima[..10]);
}
