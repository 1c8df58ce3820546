use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;

use super::BenchError;
use crate::oracle::OracleDict;
use crate::Key;

/// Spacing of generated keys, leaving room for inserts in between.
const GAP: Key = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    /// The bucketed tail dictionary over the nested forest.
    NestedBdt,
    Randomized,
    Oracle,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::NestedBdt, Structure::Randomized, Structure::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Structure::NestedBdt => "nested-bdt",
            Structure::Randomized => "randomized",
            Structure::Oracle => "oracle",
        }
    }

    /// Only tail appends and tail deletes are supported.
    pub fn tail_only(self) -> bool {
        self == Structure::NestedBdt
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Structure::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::InvalidSpec(format!("unknown structure {s:?}")))
    }
}

/// Proportions of inserts, deletes and searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mix {
    pub insert: f64,
    pub delete: f64,
    pub search: f64,
}

impl Mix {
    pub fn new(insert: f64, delete: f64, search: f64) -> Result<Self, BenchError> {
        let parts = [insert, delete, search];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BenchError::InvalidSpec(format!("negative proportion in {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(BenchError::InvalidSpec(format!("proportions {parts:?} sum to {sum}, not 1")));
        }
        Ok(Mix { insert, delete, search })
    }

    pub fn searches_only() -> Self {
        Mix {
            insert: 0.0,
            delete: 0.0,
            search: 1.0,
        }
    }
}

impl FromStr for Mix {
    type Err = BenchError;

    /// `insert,delete,search`, e.g. `0.2,0.1,0.7`.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| BenchError::InvalidSpec(format!("mix {s:?}: {e}")))?;
        match parts[..] {
            [i, d, q] => Mix::new(i, d, q),
            _ => Err(BenchError::InvalidSpec(format!("mix {s:?} needs three proportions"))),
        }
    }
}

/// How far a search target lies from its finger, in rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceDist {
    /// Target rank uniform over the whole set.
    Uniform,
    /// `d` counts failures before the first success with probability `p`.
    Geometric(f64),
    Fixed(usize),
}

impl FromStr for DistanceDist {
    type Err = BenchError;

    /// `uniform`, `geometric:P` or `fixed:D`; parentheses also accepted.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let bad = || BenchError::InvalidSpec(format!("distance distribution {s:?}"));
        let s = s.trim();
        if s == "uniform" {
            return Ok(DistanceDist::Uniform);
        }
        let (name, arg) = s
            .split_once(':')
            .or_else(|| s.strip_suffix(')').and_then(|t| t.split_once('(')))
            .ok_or_else(bad)?;
        match name {
            "geometric" => match arg.parse::<f64>() {
                Ok(p) if p > 0.0 && p <= 1.0 => Ok(DistanceDist::Geometric(p)),
                _ => Err(bad()),
            },
            "fixed" => arg.parse().map(DistanceDist::Fixed).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DistanceDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceDist::Uniform => f.write_str("uniform"),
            DistanceDist::Geometric(p) => write!(f, "geometric:{p}"),
            DistanceDist::Fixed(d) => write!(f, "fixed:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub structure: Structure,
    /// Keys present before the first op.
    pub n: usize,
    pub mix: Mix,
    pub dist: DistanceDist,
    pub seed: u64,
    pub ops: usize,
}

/// One operation. Fingers are named by the key they hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    /// Insert above every stored key.
    Append(Key),
    /// Insert `key` right after `finger`.
    Insert { finger: Key, key: Key },
    Delete(Key),
    Search { finger: Key, key: Key },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub initial: Vec<Key>,
    pub ops: Vec<Op>,
}

fn draw_distance(dist: DistanceDist, len: usize, rng: &mut Pcg32) -> Option<usize> {
    let d = match dist {
        DistanceDist::Uniform => return None,
        DistanceDist::Fixed(d) => d,
        DistanceDist::Geometric(p) => {
            let u: f64 = rng.gen();
            ((1.0 - u).ln() / (1.0 - p).ln()).floor().min(len as f64) as usize
        }
    };
    Some(d.min(len - 1))
}

/// 0-based finger and target ranks over `len` keys.
fn draw_pair(dist: DistanceDist, len: usize, rng: &mut Pcg32) -> (usize, usize) {
    match draw_distance(dist, len, rng) {
        None => (rng.gen_range(0..len), rng.gen_range(0..len)),
        Some(d) => {
            if rng.gen::<bool>() {
                let f = rng.gen_range(0..len - d);
                (f, f + d)
            } else {
                let f = rng.gen_range(d..len);
                (f, f - d)
            }
        }
    }
}

/// Deterministic op sequence for `spec`. An oracle runs alongside so every
/// op is valid when it is reached.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Workload, BenchError> {
    Mix::new(spec.mix.insert, spec.mix.delete, spec.mix.search)?;
    if let DistanceDist::Fixed(d) = spec.dist {
        if spec.n > 0 && d >= spec.n {
            return Err(BenchError::InvalidSpec(format!("fixed distance {d} needs more than {} keys", spec.n)));
        }
    }
    let mut rng = Pcg32::seed_from_u64(spec.seed);
    let initial: Vec<Key> = (0..spec.n as Key)
        .map(|i| (i + 1) * GAP + rng.gen_range(0..GAP / 2))
        .collect();
    let mut oracle = OracleDict::from_sorted(initial.clone()).expect("generated keys increase");
    let mut ops = Vec::with_capacity(spec.ops);
    while ops.len() < spec.ops {
        let len = oracle.len();
        let u: f64 = rng.gen();
        let op = if u < spec.mix.search && len > 0 {
            let (f, t) = draw_pair(spec.dist, len, &mut rng);
            Op::Search {
                finger: oracle.keys()[f],
                key: oracle.keys()[t],
            }
        } else if (u < spec.mix.search + spec.mix.delete && len > 1) || (len > 1 && spec.mix.insert == 0.0) {
            if spec.structure.tail_only() {
                Op::Delete(oracle.max_key().expect("nonempty"))
            } else {
                Op::Delete(oracle.keys()[rng.gen_range(0..len)])
            }
        } else if spec.structure.tail_only() || len == 0 {
            Op::Append(oracle.max_key().unwrap_or(0) + 1 + rng.gen_range(0..GAP))
        } else {
            let keys = oracle.keys();
            let f = rng.gen_range(0..len);
            let lo = keys[f];
            let hi = keys.get(f + 1).copied().unwrap_or(lo + GAP);
            if hi - lo < 2 {
                continue;
            }
            Op::Insert {
                finger: lo,
                key: rng.gen_range(lo + 1..hi),
            }
        };
        match op {
            Op::Append(k) | Op::Insert { key: k, .. } => {
                oracle.insert(k).expect("fresh key");
            }
            Op::Delete(k) => oracle.delete(k).expect("stored key"),
            Op::Search { .. } => {}
        }
        ops.push(op);
    }
    Ok(Workload {
        spec: spec.clone(),
        initial,
        ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(structure: Structure, mix: Mix, dist: DistanceDist) -> WorkloadSpec {
        WorkloadSpec {
            structure,
            n: 1000,
            mix,
            dist,
            seed: 7,
            ops: 2000,
        }
    }

    #[test]
    fn fixed_distance_pairs() {
        let w = generate_workload(&spec(Structure::Randomized, Mix::searches_only(), DistanceDist::Fixed(16))).unwrap();
        let oracle = OracleDict::from_sorted(w.initial.clone()).unwrap();
        assert_eq!(w.ops.len(), 2000);
        for op in &w.ops {
            let Op::Search { finger, key } = *op else { panic!("{op:?}") };
            assert_eq!(oracle.distance(finger, key), Some(16));
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let s = spec(Structure::Randomized, Mix::new(0.3, 0.2, 0.5).unwrap(), DistanceDist::Geometric(0.05));
        assert_eq!(generate_workload(&s).unwrap(), generate_workload(&s).unwrap());
        let t = WorkloadSpec { seed: 8, ..s.clone() };
        assert_ne!(generate_workload(&s).unwrap().ops, generate_workload(&t).unwrap().ops);
    }

    #[test]
    fn bad_proportions() {
        assert!(matches!(Mix::new(0.5, 0.6, 0.2), Err(BenchError::InvalidSpec(_))));
        assert!(matches!("0.5,0.6,0.2".parse::<Mix>(), Err(BenchError::InvalidSpec(_))));
        assert!(matches!("0.5,0.5".parse::<Mix>(), Err(BenchError::InvalidSpec(_))));
        assert_eq!("0.25,0.25,0.5".parse::<Mix>().unwrap(), Mix::new(0.25, 0.25, 0.5).unwrap());
    }

    #[test]
    fn distance_parsing() {
        assert_eq!("uniform".parse::<DistanceDist>().unwrap(), DistanceDist::Uniform);
        assert_eq!("fixed:16".parse::<DistanceDist>().unwrap(), DistanceDist::Fixed(16));
        assert_eq!("geometric(0.5)".parse::<DistanceDist>().unwrap(), DistanceDist::Geometric(0.5));
        assert!("geometric:0".parse::<DistanceDist>().is_err());
        assert!("zipf:1".parse::<DistanceDist>().is_err());
    }

    #[test]
    fn tail_workloads_stay_at_the_tail() {
        let w = generate_workload(&spec(Structure::NestedBdt, Mix::new(0.4, 0.3, 0.3).unwrap(), DistanceDist::Uniform)).unwrap();
        let mut oracle = OracleDict::from_sorted(w.initial.clone()).unwrap();
        for op in &w.ops {
            match *op {
                Op::Append(k) => assert_eq!(oracle.insert(k).unwrap(), oracle.len()),
                Op::Delete(k) => {
                    assert_eq!(oracle.max_key(), Some(k));
                    oracle.delete(k).unwrap();
                }
                Op::Search { .. } => {}
                Op::Insert { .. } => panic!("general insert in a tail workload"),
            }
        }
    }
}
