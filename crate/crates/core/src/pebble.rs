//! The oblivious zeroing pebble game.
//!
//! `n` piles start empty. Each round the increaser adds `c` pebbles spread
//! over the piles without seeing them, then the decreaser zeroes the pile
//! drawn with probability `δ_i / c` from the increaser's last move and then
//! a largest pile. `M` is the largest pile ever seen after an increase.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;
use rayon::prelude::*;

use crate::{Error, Result};

/// One increaser move: `(pile, pebbles)` pairs with distinct 0-based piles.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IncreaserMove {
    pub deltas: Vec<(usize, u64)>,
}

impl IncreaserMove {
    pub fn single(pile: usize, c: u64) -> Self {
        IncreaserMove {
            deltas: vec![(pile, c)],
        }
    }

    pub fn total(&self) -> u64 {
        self.deltas.iter().map(|&(_, d)| d).sum()
    }

    fn check(&self, c: u64) -> Result<()> {
        let spent = self.total();
        if spent == c {
            Ok(())
        } else {
            Err(Error::BudgetMismatch { spent, budget: c })
        }
    }
}

/// How the decreaser combines its two zeroing actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecreaserMode {
    /// Both actions every round.
    #[default]
    Both,
    /// The random zeroing on even rounds, the max zeroing on odd rounds.
    Alternate,
}

/// Piles backed by a max segment tree.
#[derive(Debug, Clone)]
pub struct GameState {
    size: usize,
    /// `tree[size + i]` is pile `i`; inner nodes hold the max of children.
    tree: Vec<u64>,
    m: u64,
    round: u64,
}

impl GameState {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "need at least one pile");
        let size = n.next_power_of_two();
        GameState {
            size,
            tree: vec![0; 2 * size],
            m: 0,
            round: 0,
        }
    }

    pub fn from_piles(piles: &[u64]) -> Self {
        let mut g = Self::new(piles.len());
        g.tree[g.size..g.size + piles.len()].copy_from_slice(piles);
        for i in (1..g.size).rev() {
            g.tree[i] = g.tree[2 * i].max(g.tree[2 * i + 1]);
        }
        g.m = g.tree[1];
        g
    }

    pub fn piles(&self) -> &[u64] {
        &self.tree[self.size..]
    }

    /// Largest pile ever observed after an increase.
    pub fn max_seen(&self) -> u64 {
        self.m
    }

    pub fn current_max(&self) -> u64 {
        self.tree[1]
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    fn set(&mut self, pile: usize, v: u64) {
        let mut i = self.size + pile;
        self.tree[i] = v;
        while i > 1 {
            i /= 2;
            self.tree[i] = self.tree[2 * i].max(self.tree[2 * i + 1]);
        }
    }

    /// Lowest-index largest pile.
    fn argmax(&self) -> usize {
        let mut i = 1;
        while i < self.size {
            i = if self.tree[2 * i] >= self.tree[2 * i + 1] { 2 * i } else { 2 * i + 1 };
        }
        i - self.size
    }

    /// Applies an increaser move and updates `M`.
    pub fn increase(&mut self, mv: &IncreaserMove, c: u64) -> Result<()> {
        mv.check(c)?;
        for &(pile, d) in &mv.deltas {
            let v = self.tree[self.size + pile] + d;
            self.set(pile, v);
        }
        self.m = self.m.max(self.tree[1]);
        Ok(())
    }

    /// The decreaser's reply to `last`.
    pub fn d_move(&mut self, last: &IncreaserMove, c: u64, rng: &mut impl Rng, mode: DecreaserMode) -> Result<()> {
        last.check(c)?;
        let (random, greedy) = match mode {
            DecreaserMode::Both => (true, true),
            DecreaserMode::Alternate => (self.round.is_multiple_of(2), !self.round.is_multiple_of(2)),
        };
        if random && c > 0 {
            let mut r = rng.gen_range(0..c);
            for &(pile, d) in &last.deltas {
                if r < d {
                    self.set(pile, 0);
                    break;
                }
                r -= d;
            }
        }
        if greedy {
            let i = self.argmax();
            self.set(i, 0);
        }
        self.round += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversaryKind {
    Concentrate,
    RoundRobin,
    RandomSpread,
    Revisit,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::Concentrate,
        AdversaryKind::RoundRobin,
        AdversaryKind::RandomSpread,
        AdversaryKind::Revisit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::Concentrate => "concentrate",
            AdversaryKind::RoundRobin => "round_robin",
            AdversaryKind::RandomSpread => "random_spread",
            AdversaryKind::Revisit => "revisit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.name().replace('_', "-") == s)
    }
}

/// An oblivious increaser: it sees the round number, its own past moves and
/// its own random source, never the piles.
#[derive(Debug, Clone)]
pub struct Adversary {
    kind: AdversaryKind,
    n: usize,
    c: u64,
    /// Total pebbles this adversary has put on each pile.
    boosted: Vec<u64>,
    ranked: BTreeSet<(Reverse<u64>, usize)>,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, n: usize, c: u64) -> Self {
        Adversary {
            kind,
            n,
            c,
            boosted: Vec::new(),
            ranked: BTreeSet::new(),
        }
    }

    pub fn next_move(&mut self, round: u64, history: &[IncreaserMove], rng: &mut impl Rng) -> IncreaserMove {
        let (n, c) = (self.n, self.c);
        let mv = match self.kind {
            AdversaryKind::Concentrate => IncreaserMove::single(0, c),
            AdversaryKind::RoundRobin => IncreaserMove::single((round % n as u64) as usize, c),
            AdversaryKind::RandomSpread => {
                let mut deltas: Vec<(usize, u64)> = Vec::new();
                for _ in 0..c {
                    let p = rng.gen_range(0..n);
                    match deltas.iter_mut().find(|(q, _)| *q == p) {
                        Some((_, d)) => *d += 1,
                        None => deltas.push((p, 1)),
                    }
                }
                IncreaserMove { deltas }
            }
            AdversaryKind::Revisit => {
                if let Some(last) = history.last() {
                    if self.boosted.is_empty() {
                        self.boosted = vec![0; n];
                    }
                    for &(p, d) in &last.deltas {
                        let old = self.boosted[p];
                        if old > 0 {
                            self.ranked.remove(&(Reverse(old), p));
                        }
                        self.boosted[p] = old + d;
                        self.ranked.insert((Reverse(old + d), p));
                    }
                }
                // The 2c most boosted piles, padded with the lowest unboosted ones.
                let pool_len = (2 * c as usize).min(n);
                let mut pool: Vec<usize> = self.ranked.iter().take(pool_len).map(|&(_, p)| p).collect();
                let mut p = 0;
                while pool.len() < pool_len {
                    if self.boosted.get(p).is_none_or(|&b| b == 0) {
                        pool.push(p);
                    }
                    p += 1;
                }
                let start = (round as usize) % pool_len;
                let mut deltas: Vec<(usize, u64)> = Vec::new();
                for k in 0..c as usize {
                    let p = pool[(start + k) % pool_len];
                    match deltas.iter_mut().find(|(q, _)| *q == p) {
                        Some((_, d)) => *d += 1,
                        None => deltas.push((p, 1)),
                    }
                }
                IncreaserMove { deltas }
            }
        };
        debug_assert_eq!(mv.total(), c);
        mv
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameOutcome {
    pub max_seen: u64,
    /// Largest pile right after each increase.
    pub round_maxima: Vec<u64>,
}

/// Plays `rounds` rounds. The decreaser and the adversary draw from separate
/// streams of the same seed.
pub fn run_game(n: usize, rounds: u64, c: u64, kind: AdversaryKind, seed: u64, mode: DecreaserMode) -> GameOutcome {
    let mut state = GameState::new(n);
    let mut d_rng = Pcg32::seed_from_u64(seed);
    let mut a_rng = Pcg32::new(seed, 0xa02b_dbf7_bb3c_0a7b);
    let mut adversary = Adversary::new(kind, n, c);
    let mut history = Vec::with_capacity(rounds as usize);
    let mut round_maxima = Vec::with_capacity(rounds as usize);
    for r in 0..rounds {
        let mv = adversary.next_move(r, &history, &mut a_rng);
        state.increase(&mv, c).expect("adversary spends its budget");
        round_maxima.push(state.current_max());
        state.d_move(&mv, c, &mut d_rng, mode).expect("adversary spends its budget");
        history.push(mv);
    }
    GameOutcome {
        max_seen: state.max_seen(),
        round_maxima,
    }
}

/// One seeded game of a Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PebbleRun {
    pub seed: u64,
    pub adversary: AdversaryKind,
    pub n: usize,
    pub c: u64,
    pub rounds: u64,
    pub max_seen: u64,
}

/// Plays every `(adversary, seed)` pair in parallel. Results are ordered by
/// adversary, then seed.
pub fn monte_carlo(
    n: usize,
    rounds: u64,
    c: u64,
    adversaries: &[AdversaryKind],
    seeds: std::ops::Range<u64>,
    mode: DecreaserMode,
) -> Vec<PebbleRun> {
    let jobs: Vec<(AdversaryKind, u64)> = adversaries
        .iter()
        .flat_map(|&a| seeds.clone().map(move |s| (a, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(adversary, seed)| PebbleRun {
            seed,
            adversary,
            n,
            c,
            rounds,
            max_seen: run_game(n, rounds, c, adversary, seed, mode).max_seen,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_piles_stay_zero() {
        let mut g = GameState::new(5);
        let mut rng = Pcg32::seed_from_u64(1);
        g.d_move(&IncreaserMove::single(2, 4), 4, &mut rng, DecreaserMode::Both).unwrap();
        assert_eq!(g.piles(), &[0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn d_move_example() {
        let mut g = GameState::from_piles(&[5, 2, 7]);
        let mut rng = Pcg32::seed_from_u64(1);
        g.d_move(&IncreaserMove::single(0, 4), 4, &mut rng, DecreaserMode::Both).unwrap();
        assert_eq!(&g.piles()[..3], &[0, 2, 0]);
    }

    #[test]
    fn budget_is_checked() {
        let mut g = GameState::new(3);
        let mut rng = Pcg32::seed_from_u64(1);
        let mv = IncreaserMove {
            deltas: vec![(0, 1), (1, 1)],
        };
        assert_eq!(g.increase(&mv, 3), Err(Error::BudgetMismatch { spent: 2, budget: 3 }));
        assert_eq!(
            g.d_move(&mv, 3, &mut rng, DecreaserMode::Both),
            Err(Error::BudgetMismatch { spent: 2, budget: 3 })
        );
    }

    #[test]
    fn adversary_examples() {
        let mut rng = Pcg32::seed_from_u64(3);
        let mut a = Adversary::new(AdversaryKind::Concentrate, 10, 4);
        assert_eq!(a.next_move(17, &[], &mut rng), IncreaserMove::single(0, 4));
        let mut a = Adversary::new(AdversaryKind::RoundRobin, 10, 4);
        assert_eq!(a.next_move(13, &[], &mut rng), IncreaserMove::single(3, 4));
        let spread = |seed| {
            let mut rng = Pcg32::seed_from_u64(seed);
            let mut a = Adversary::new(AdversaryKind::RandomSpread, 1000, 4);
            (0..50).map(|r| a.next_move(r, &[], &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(spread(8), spread(8));
        assert!(spread(8).iter().all(|m| m.total() == 4));
    }

    #[test]
    fn concentrate_reaches_exactly_c() {
        for seed in 0..5 {
            let out = run_game(64, 500, 4, AdversaryKind::Concentrate, seed, DecreaserMode::Both);
            assert_eq!(out.max_seen, 4);
        }
        assert_eq!(run_game(64, 0, 4, AdversaryKind::RoundRobin, 1, DecreaserMode::Both).max_seen, 0);
    }

    #[test]
    fn seeded_replay() {
        for kind in AdversaryKind::ALL {
            let a = run_game(256, 2000, 4, kind, 42, DecreaserMode::Both);
            let b = run_game(256, 2000, 4, kind, 42, DecreaserMode::Both);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn alternate_mode_is_no_better() {
        let both = run_game(1024, 4096, 4, AdversaryKind::Revisit, 5, DecreaserMode::Both).max_seen;
        let alt = run_game(1024, 4096, 4, AdversaryKind::Revisit, 5, DecreaserMode::Alternate).max_seen;
        assert!(both <= alt, "both={both} alternate={alt}");
    }

    #[test]
    fn monte_carlo_matches_single_runs() {
        let runs = monte_carlo(128, 300, 3, &AdversaryKind::ALL, 0..4, DecreaserMode::Both);
        assert_eq!(runs.len(), 16);
        for r in &runs {
            let single = run_game(128, 300, 3, r.adversary, r.seed, DecreaserMode::Both);
            assert_eq!(r.max_seen, single.max_seen);
        }
        assert_eq!(runs[5].adversary, AdversaryKind::RoundRobin);
        assert_eq!(runs[5].seed, 1);
    }

    #[test]
    fn revisit_spends_budget_each_round() {
        let mut rng = Pcg32::seed_from_u64(0);
        let mut a = Adversary::new(AdversaryKind::Revisit, 100, 4);
        let mut hist = Vec::new();
        for r in 0..100 {
            let m = a.next_move(r, &hist, &mut rng);
            assert_eq!(m.total(), 4);
            hist.push(m);
        }
    }
}
