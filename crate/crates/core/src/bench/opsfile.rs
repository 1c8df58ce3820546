//! Text replay format, one op per line:
//!
//! ```text
//! A <key>                 append above the maximum
//! I <finger-key> <key>    insert key right after the finger
//! D <key>                 delete
//! S <finger-key> <key>    finger search
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write;

use super::{BenchError, Op};
use crate::Key;

pub fn parse_ops(text: &str) -> Result<Vec<Op>, BenchError> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: &str| BenchError::InvalidSpec(format!("line {}: {why}: {line:?}", i + 1));
        let mut words = line.split_whitespace();
        let tag = words.next().unwrap_or_default();
        let args = words
            .map(|w| w.parse::<Key>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("keys must be unsigned integers"))?;
        let op = match (tag, &args[..]) {
            ("A", &[k]) => Op::Append(k),
            ("I", &[finger, key]) => Op::Insert { finger, key },
            ("D", &[k]) => Op::Delete(k),
            ("S", &[finger, key]) => Op::Search { finger, key },
            ("A" | "I" | "D" | "S", _) => return Err(bad("wrong number of keys")),
            _ => return Err(bad("unknown op")),
        };
        ops.push(op);
    }
    Ok(ops)
}

pub fn format_ops(ops: &[Op]) -> String {
    let mut out = String::new();
    for op in ops {
        match op {
            Op::Append(k) => writeln!(out, "A {k}"),
            Op::Insert { finger, key } => writeln!(out, "I {finger} {key}"),
            Op::Delete(k) => writeln!(out, "D {k}"),
            Op::Search { finger, key } => writeln!(out, "S {finger} {key}"),
        }
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ops = vec![
            Op::Append(5),
            Op::Insert { finger: 5, key: 7 },
            Op::Search { finger: 7, key: 5 },
            Op::Delete(7),
        ];
        let text = format_ops(&ops);
        assert_eq!(text, "A 5\nI 5 7\nS 7 5\nD 7\n");
        assert_eq!(parse_ops(&text).unwrap(), ops);
    }

    #[test]
    fn comments_and_errors() {
        assert_eq!(parse_ops("# setup\n\nA 1\n  A 2  \n").unwrap(), vec![Op::Append(1), Op::Append(2)]);
        assert!(matches!(parse_ops("A 1 2"), Err(BenchError::InvalidSpec(_))));
        assert!(matches!(parse_ops("X 1"), Err(BenchError::InvalidSpec(_))));
        assert!(matches!(parse_ops("S 1 -2"), Err(BenchError::InvalidSpec(_))));
    }
}
