use std::collections::HashMap;
use std::time::Instant;

use super::{generate_workload, BenchError, OpKind, Op, ProbeReport, ProbeRow, Structure, WorkloadSpec};
use crate::bucket::TailFingerDict;
use crate::oracle::OracleDict;
use crate::randomized::{Config, Finger, RandomizedFingerDict};
use crate::{Error, Key, Result};

/// A dictionary driven by the lockstep runner. Fingers are named by the key
/// they hold; updates return work units, searches the key found and probes.
pub trait Subject {
    fn name(&self) -> &'static str;
    fn tail_only(&self) -> bool;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn keys(&self) -> Vec<Key>;
    fn append(&mut self, key: Key) -> Result<u64>;
    fn insert_after(&mut self, finger: Key, key: Key) -> Result<u64>;
    fn delete(&mut self, key: Key) -> Result<u64>;
    fn search(&mut self, finger: Key, key: Key) -> Result<(Key, u64)>;
    /// Structural self-check.
    fn validate(&self) -> std::result::Result<(), String>;
}

pub struct TailSubject(pub TailFingerDict);

impl TailSubject {
    pub fn from_sorted(keys: &[Key]) -> Result<Self> {
        let mut dict = TailFingerDict::new();
        for &k in keys {
            dict.insert_tail(k)?;
        }
        Ok(TailSubject(dict))
    }
}

impl Subject for TailSubject {
    fn name(&self) -> &'static str {
        Structure::NestedBdt.name()
    }

    fn tail_only(&self) -> bool {
        true
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn keys(&self) -> Vec<Key> {
        self.0.keys().to_vec()
    }

    fn append(&mut self, key: Key) -> Result<u64> {
        self.0.insert_tail(key)?;
        Ok(self.0.last_work())
    }

    fn insert_after(&mut self, finger: Key, key: Key) -> Result<u64> {
        if self.0.max_key() != Some(finger) {
            return Err(Error::KeyOutOfFingerRange { finger, key });
        }
        self.append(key)
    }

    fn delete(&mut self, key: Key) -> Result<u64> {
        match self.0.max_key() {
            Some(max) if max == key => {
                self.0.delete_tail()?;
                Ok(self.0.last_work())
            }
            _ => Err(Error::KeyAbsent(key)),
        }
    }

    fn search(&mut self, finger: Key, key: Key) -> Result<(Key, u64)> {
        let rank = self.0.keys().binary_search(&finger).map_err(|_| Error::KeyAbsent(finger))?;
        let f = self.0.handle_at(rank).ok_or(Error::StaleFinger)?;
        let found = self.0.search_star(f, key)?;
        Ok((self.0.key(found.handle).ok_or(Error::StaleFinger)?, found.probes()))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        self.0.validate()
    }
}

pub struct RandomizedSubject {
    pub dict: RandomizedFingerDict,
    fingers: HashMap<Key, Finger>,
    max: Option<Key>,
}

impl RandomizedSubject {
    pub fn from_sorted(keys: &[Key], seed: u64, config: Config) -> Result<Self> {
        let dict = RandomizedFingerDict::from_sorted(keys, seed, config)?;
        let fingers = keys
            .iter()
            .map(|&k| (k, dict.find(k).expect("key just stored")))
            .collect();
        Ok(RandomizedSubject {
            dict,
            fingers,
            max: keys.last().copied(),
        })
    }

    fn finger(&self, key: Key) -> Result<Finger> {
        self.fingers.get(&key).copied().ok_or(Error::KeyAbsent(key))
    }
}

impl Subject for RandomizedSubject {
    fn name(&self) -> &'static str {
        Structure::Randomized.name()
    }

    fn tail_only(&self) -> bool {
        false
    }

    fn len(&self) -> usize {
        self.dict.len()
    }

    fn keys(&self) -> Vec<Key> {
        self.dict.keys()
    }

    fn append(&mut self, key: Key) -> Result<u64> {
        match self.max {
            None => {
                let f = self.dict.insert_first(key)?;
                self.fingers.insert(key, f);
                self.max = Some(key);
                Ok(self.dict.last_work())
            }
            Some(max) => self.insert_after(max, key),
        }
    }

    fn insert_after(&mut self, finger: Key, key: Key) -> Result<u64> {
        let f = self.dict.insert_at(self.finger(finger)?, key)?;
        self.fingers.insert(key, f);
        if self.max < Some(key) {
            self.max = Some(key);
        }
        Ok(self.dict.last_work())
    }

    fn delete(&mut self, key: Key) -> Result<u64> {
        let f = self.finger(key)?;
        self.dict.delete_at(f)?;
        self.fingers.remove(&key);
        let work = self.dict.last_work();
        if self.max == Some(key) {
            self.max = key
                .checked_sub(1)
                .and_then(|k| self.dict.predecessor(k))
                .map(|f| self.dict.key(f).expect("live finger"));
        }
        Ok(work)
    }

    fn search(&mut self, finger: Key, key: Key) -> Result<(Key, u64)> {
        let found = self.dict.finger_search(self.finger(finger)?, key)?;
        Ok((self.dict.key(found.finger)?, found.probes()))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        self.dict.validate()
    }
}

pub struct OracleSubject(pub OracleDict);

impl Subject for OracleSubject {
    fn name(&self) -> &'static str {
        Structure::Oracle.name()
    }

    fn tail_only(&self) -> bool {
        false
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn keys(&self) -> Vec<Key> {
        self.0.keys().to_vec()
    }

    fn append(&mut self, key: Key) -> Result<u64> {
        if let Some(max) = self.0.max_key().filter(|&m| m >= key) {
            return Err(Error::KeyNotGreaterThanMax { key, max });
        }
        self.0.insert(key).map(|_| 1)
    }

    fn insert_after(&mut self, _finger: Key, key: Key) -> Result<u64> {
        self.0.insert(key).map(|_| 1)
    }

    fn delete(&mut self, key: Key) -> Result<u64> {
        self.0.delete(key).map(|_| 1)
    }

    fn search(&mut self, finger: Key, key: Key) -> Result<(Key, u64)> {
        let rank = self.0.rank_of(finger).ok_or(Error::KeyAbsent(finger))?;
        let before = self.0.probe_count();
        let (r, _) = self.0.finger_search(rank, key)?;
        Ok((self.0.key_at(r).expect("rank in range"), self.0.probe_count() - before))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self.0.keys().windows(2).position(|w| w[0] >= w[1]) {
            Some(i) => Err(format!("keys out of order at {}", i + 1)),
            None => Ok(()),
        }
    }
}

/// Builds a fresh subject over the given initial keys.
pub type Factory<'a> = dyn Fn(&[Key]) -> Result<Box<dyn Subject>> + 'a;

/// Subject for `structure`, seeded with `seed` where that matters.
pub fn subject_for(structure: Structure, seed: u64) -> impl Fn(&[Key]) -> Result<Box<dyn Subject>> {
    move |keys| {
        Ok(match structure {
            Structure::NestedBdt => Box::new(TailSubject::from_sorted(keys)?) as Box<dyn Subject>,
            Structure::Randomized => Box::new(RandomizedSubject::from_sorted(keys, seed, Config::default())?),
            Structure::Oracle => Box::new(OracleSubject(OracleDict::from_sorted(keys.to_vec())?)),
        })
    }
}

enum Failure {
    Invalid(String),
    Diverged { index: usize, detail: String },
}

/// Contents are compared in full this often, and after the last op.
const CHECKPOINT: usize = 4096;

fn replay(make: &Factory<'_>, initial: &[Key], ops: &[Op], record: bool) -> std::result::Result<ProbeReport, Failure> {
    let mut subject = make(initial).map_err(|e| Failure::Invalid(format!("initial keys: {e}")))?;
    drive(&mut *subject, initial, ops, record)
}

/// `subject` must hold exactly `initial`.
fn drive(subject: &mut dyn Subject, initial: &[Key], ops: &[Op], record: bool) -> std::result::Result<ProbeReport, Failure> {
    let mut oracle = OracleDict::from_sorted(initial.to_vec()).map_err(|e| Failure::Invalid(format!("initial keys: {e}")))?;
    let name = subject.name();
    let mut report = ProbeReport::default();
    for (index, &op) in ops.iter().enumerate() {
        let invalid = |why: String| Failure::Invalid(format!("op {index} {op:?}: {why}"));
        let diverged = |detail: String| Failure::Diverged { index, detail };
        let (kind, d) = match op {
            Op::Append(k) => {
                if oracle.max_key().is_some_and(|m| m >= k) {
                    return Err(invalid("key not above the maximum".into()));
                }
                (OpKind::Append, 0)
            }
            Op::Insert { finger, key } => {
                if subject.tail_only() {
                    return Err(invalid(format!("{name} only supports tail updates")));
                }
                let Some(r) = oracle.rank_of(finger) else {
                    return Err(invalid("finger not stored".into()));
                };
                let next = oracle.key_at(r + 1);
                if key <= finger || next.is_some_and(|nk| nk <= key) {
                    return Err(invalid("key does not belong right after the finger".into()));
                }
                (OpKind::Insert, 0)
            }
            Op::Delete(k) => {
                if oracle.rank_of(k).is_none() {
                    return Err(invalid("key not stored".into()));
                }
                if subject.tail_only() && oracle.max_key() != Some(k) {
                    return Err(invalid(format!("{name} only deletes the maximum")));
                }
                (OpKind::Delete, 0)
            }
            Op::Search { finger, key } => match oracle.distance(finger, key) {
                Some(d) => (OpKind::Search, d),
                None => return Err(invalid("finger or target not stored".into())),
            },
        };
        let start = Instant::now();
        let outcome = match op {
            Op::Append(k) => subject.append(k),
            Op::Insert { finger, key } => subject.insert_after(finger, key),
            Op::Delete(k) => subject.delete(k),
            Op::Search { finger, key } => match subject.search(finger, key) {
                Ok((found, _)) if found != key => {
                    return Err(diverged(format!("search for {key} from {finger} returned {found}")));
                }
                r => r.map(|(_, probes)| probes),
            },
        };
        let wall_nanos = start.elapsed().as_nanos() as u64;
        let probes = outcome.map_err(|e| diverged(format!("{op:?} failed: {e}")))?;
        match op {
            Op::Append(k) | Op::Insert { key: k, .. } => {
                oracle.insert(k).expect("checked above");
            }
            Op::Delete(k) => oracle.delete(k).expect("checked above"),
            Op::Search { .. } => {}
        }
        if subject.len() != oracle.len() {
            return Err(diverged(format!("{} keys stored, oracle holds {}", subject.len(), oracle.len())));
        }
        if (index + 1) % CHECKPOINT == 0 || index + 1 == ops.len() {
            let keys = subject.keys();
            if keys != oracle.keys() {
                let at = keys.iter().zip(oracle.keys()).position(|(a, b)| a != b).unwrap_or(keys.len().min(oracle.len()));
                return Err(diverged(format!("contents differ at rank {}", at + 1)));
            }
        }
        if record {
            report.rows.push(ProbeRow {
                structure: name,
                n: initial.len(),
                d,
                probes,
                wall_nanos,
                op_kind: kind,
            });
        }
    }
    Ok(report)
}

/// Replays allowed while shrinking a diverging prefix.
const SHRINK_BUDGET: usize = 256;

/// Removes chunks of ops, halving the chunk size, while the rest still
/// diverges.
fn shrink(make: &Factory<'_>, initial: &[Key], mut ops: Vec<Op>) -> Vec<Op> {
    let mut budget = SHRINK_BUDGET;
    let mut chunk = ops.len() / 2;
    while chunk > 0 && budget > 0 {
        let mut i = 0;
        while i < ops.len() && budget > 0 {
            let mut candidate = ops[..i].to_vec();
            candidate.extend_from_slice(&ops[(i + chunk).min(ops.len())..]);
            budget -= 1;
            if matches!(replay(make, initial, &candidate, false), Err(Failure::Diverged { .. })) {
                ops = candidate;
            } else {
                i += chunk;
            }
        }
        chunk /= 2;
    }
    ops
}

/// Runs `ops` against subjects built by `make` with an oracle in lockstep.
/// A divergence is reported with a shrunk op sequence that still diverges.
pub fn run_ops_with(make: &Factory<'_>, initial: &[Key], ops: &[Op], seed: u64) -> std::result::Result<ProbeReport, BenchError> {
    match replay(make, initial, ops, true) {
        Ok(report) => Ok(report),
        Err(Failure::Invalid(why)) => Err(BenchError::InvalidSpec(why)),
        Err(Failure::Diverged { index, detail }) => Err(BenchError::DivergenceDetected {
            op_index: index,
            seed,
            detail,
            prefix: shrink(make, initial, ops[..=index].to_vec()),
        }),
    }
}

/// Like [`run_ops_with`] on a subject the caller keeps, without shrinking.
pub fn run_ops_on(subject: &mut dyn Subject, initial: &[Key], ops: &[Op], seed: u64) -> std::result::Result<ProbeReport, BenchError> {
    if subject.keys() != initial {
        return Err(BenchError::InvalidSpec("subject does not hold the initial keys".into()));
    }
    drive(subject, initial, ops, true).map_err(|f| match f {
        Failure::Invalid(why) => BenchError::InvalidSpec(why),
        Failure::Diverged { index, detail } => BenchError::DivergenceDetected {
            op_index: index,
            seed,
            detail,
            prefix: ops[..=index].to_vec(),
        },
    })
}

pub fn run_ops(structure: Structure, initial: &[Key], ops: &[Op], seed: u64) -> std::result::Result<ProbeReport, BenchError> {
    run_ops_with(&subject_for(structure, seed), initial, ops, seed)
}

pub fn run_workload(spec: &WorkloadSpec) -> std::result::Result<ProbeReport, BenchError> {
    let w = generate_workload(spec)?;
    run_ops(spec.structure, &w.initial, &w.ops, spec.seed)
}
