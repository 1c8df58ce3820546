use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg32;

use fingerset::bench::{format_ops, parse_ops, Op};
use fingerset::bucket::TailFingerDict;
use fingerset::nested::{nested_level_select, NestedForest};
use fingerset::oracle::OracleDict;
use fingerset::pebble::{run_game, Adversary, AdversaryKind, DecreaserMode, GameState};
use fingerset::predecessor::{predecessor_in, SmallSetIndex, TailDynamicIndex};
use fingerset::randomized::{Config, RandomizedFingerDict};
use fingerset::Key;

fn sorted_keys(max_len: usize) -> impl Strategy<Value = Vec<Key>> {
    prop::collection::btree_set(0..1u64 << 40, 1..max_len).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn select_is_smallest_covering_block(a in sorted_keys(600), fi in any::<prop::sample::Index>(), si in any::<prop::sample::Index>()) {
        let m = a.len();
        let i = fi.index(m) + 1;
        prop_assume!(i < m);
        let s_pos = i + 1 + si.index(m - i);
        let s = a[s_pos - 1];
        let j = nested_level_select(i, s, &a).unwrap();
        let covers = |j: u32| {
            let b: u64 = if j == 0 { 2 } else if j >= 6 { u64::MAX } else { 1u64 << (1u64 << j) };
            let end = (i as u64 / b).saturating_mul(b).saturating_add(b).min(m as u64);
            s <= a[end as usize - 1]
        };
        let brute = (0..8u32).find(|&j| covers(j)).unwrap();
        prop_assert_eq!(j, brute as usize);
    }

    #[test]
    fn predecessor_matches_scan(a in sorted_keys(300), x in 0..1u64 << 41) {
        let want = a.iter().rposition(|&k| k <= x);
        prop_assert_eq!(predecessor_in(&a, x).0, want);
        let idx = SmallSetIndex::build_static(&a).unwrap();
        prop_assert_eq!(idx.predecessor(x).map(|p| p.0 - 1), want);
    }

    #[test]
    fn tail_index_tracks_vec(steps in 1usize..10, script in prop::collection::vec(0u8..4, 1..400)) {
        let mut idx = TailDynamicIndex::with_steps(steps);
        let mut model: Vec<Key> = Vec::new();
        let mut next = 1;
        for op in script {
            if op == 0 && !model.is_empty() {
                prop_assert_eq!(idx.pop(), model.pop());
            } else {
                next += 1 + op as Key;
                idx.append(next).unwrap();
                model.push(next);
            }
            prop_assert_eq!(idx.as_slice(), &model[..]);
            if let Some(&mid) = model.get(model.len() / 2) {
                prop_assert_eq!(idx.predecessor(mid).map(|p| p.1), Some(mid));
            }
        }
    }

    #[test]
    fn forest_stays_valid_and_finds_every_key(a in sorted_keys(700), pops in 0usize..50, pairs in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..60)) {
        let mut forest = NestedForest::with_steps(2);
        for &k in &a {
            forest.append_leaf(k).unwrap();
        }
        let keep = a.len().saturating_sub(pops).max(1);
        for _ in keep..a.len() {
            forest.remove_tail_leaf().unwrap();
        }
        prop_assert!(forest.validate().is_ok(), "{:?}", forest.validate());
        for (f, t) in pairs {
            let (f, t) = (f.index(keep), t.index(keep));
            let found = forest.fsearch(forest.handle_at(f).unwrap(), a[t]).unwrap();
            prop_assert_eq!(found.handle.position(), t);
            let miss = forest.locate(forest.handle_at(f).unwrap(), a[t] + 1).unwrap();
            let want = a[..keep].iter().rposition(|&k| k <= a[t] + 1);
            prop_assert_eq!(miss.handle.map(|h| h.position()), want);
        }
    }

    #[test]
    fn tail_dictionary_search_matches_rank(n in 1usize..3000, pairs in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..80)) {
        let mut dict = TailFingerDict::new();
        for k in 0..n as Key {
            dict.insert_tail(3 * k + 1).unwrap();
        }
        for (f, t) in pairs {
            let (f, t) = (f.index(n), t.index(n));
            let found = dict.search_star(dict.handle_at(f).unwrap(), 3 * t as Key + 1).unwrap();
            prop_assert_eq!(found.handle.rank(), t);
        }
        prop_assert!(dict.validate().is_ok(), "{:?}", dict.validate());
    }

    #[test]
    fn tail_dictionary_survives_update_scripts(script in prop::collection::vec(0u8..3, 1..3000)) {
        let mut dict = TailFingerDict::new();
        let mut model: Vec<Key> = Vec::new();
        for (i, op) in script.into_iter().enumerate() {
            if op == 0 && !model.is_empty() {
                prop_assert_eq!(dict.delete_tail().ok(), model.pop());
            } else {
                let k = model.last().map_or(1, |m| m + 1 + op as Key);
                dict.insert_tail(k).unwrap();
                model.push(k);
            }
            prop_assert!(dict.last_work() <= dict.update_work_bound());
            if i % 97 == 0 {
                prop_assert!(dict.validate().is_ok(), "{:?}", dict.validate());
            }
        }
        prop_assert_eq!(dict.keys(), &model[..]);
        prop_assert!(dict.validate().is_ok(), "{:?}", dict.validate());
    }

    #[test]
    fn oracle_search_agrees_with_binary_search(a in sorted_keys(2000), fi in any::<prop::sample::Index>(), ti in any::<prop::sample::Index>()) {
        let o = OracleDict::from_sorted(a.clone()).unwrap();
        let (f, t) = (fi.index(a.len()), ti.index(a.len()));
        let before = o.probe_count();
        let (rank, d) = o.finger_search(f + 1, a[t]).unwrap();
        prop_assert_eq!(rank, a.binary_search(&a[t]).unwrap() + 1);
        prop_assert_eq!(d, f.abs_diff(t));
        let bits = (usize::BITS - d.leading_zeros()) as u64;
        prop_assert!(o.probe_count() - before <= 2 * bits + 4);
        prop_assert_eq!(o.distance(a[f], a[t]), o.distance(a[t], a[f]));
    }

    #[test]
    fn ops_text_round_trips(raw in prop::collection::vec((0u8..4, any::<u64>(), any::<u64>()), 0..50)) {
        let ops: Vec<Op> = raw.into_iter().map(|(t, a, b)| match t {
            0 => Op::Append(a),
            1 => Op::Insert { finger: a, key: b },
            2 => Op::Delete(a),
            _ => Op::Search { finger: a, key: b },
        }).collect();
        prop_assert_eq!(parse_ops(&format_ops(&ops)).unwrap(), ops);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn randomized_dictionary_matches_set(seed in any::<u64>(), script in prop::collection::vec((any::<bool>(), 0..1u64 << 14), 1..1500)) {
        let mut dict = RandomizedFingerDict::with_config(seed, Config::default());
        let mut model = BTreeSet::new();
        for (insert, k) in script {
            if insert || model.is_empty() {
                let res = dict.insert(k);
                prop_assert_eq!(res.is_ok(), model.insert(k));
            } else {
                let victim = *model.range(k..).next().or_else(|| model.iter().next_back()).unwrap();
                model.remove(&victim);
                prop_assert_eq!(dict.delete_at(dict.find(victim).unwrap()).unwrap(), victim);
            }
        }
        prop_assert_eq!(dict.keys(), model.iter().copied().collect::<Vec<_>>());
        prop_assert!(dict.validate().is_ok(), "{:?}", dict.validate());
        for b in dict.boundaries() {
            prop_assert!(b.within_window(), "{:?}", b);
        }
        for a in dict.actions() {
            prop_assert!(a.settled, "{:?}", a);
        }
        // Fingers from anywhere reach every key.
        let keys = dict.keys();
        if let (Some(&lo), Some(&hi)) = (keys.first(), keys.last()) {
            let f = dict.find(lo).unwrap();
            prop_assert_eq!(dict.key(dict.finger_search(f, hi).unwrap().finger).unwrap(), hi);
        }
    }

    #[test]
    fn pebble_moves_conserve_budget(kind in prop::sample::select(AdversaryKind::ALL.to_vec()), n in 1usize..200, c in 1u64..8, seed in any::<u64>()) {
        let mut rng = Pcg32::seed_from_u64(seed);
        let mut adversary = Adversary::new(kind, n, c);
        let mut state = GameState::new(n);
        let mut history = Vec::new();
        for r in 0..200 {
            let mv = adversary.next_move(r, &history, &mut rng);
            prop_assert_eq!(mv.total(), c);
            state.increase(&mv, c).unwrap();
            prop_assert!(state.max_seen() >= state.current_max());
            state.d_move(&mv, c, &mut rng, DecreaserMode::Both).unwrap();
            history.push(mv);
        }
        let out = run_game(n, 200, c, AdversaryKind::Concentrate, seed, DecreaserMode::Both);
        prop_assert_eq!(out.max_seen, c);
        prop_assert!(out.round_maxima.iter().all(|&m| m <= out.max_seen));
    }
}
