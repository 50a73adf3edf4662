//! Plain-text instance fixtures.
//!
//! ```text
//! n p
//! <n lines of n characters 0/1: admissibility, row = man>
//! <n lines of n decimals: x, row = man>
//! <n lines of n decimals: y, row = man>
//! ```
//!
//! Decimals carry 17 significant digits, which round-trips every `f64`.

use std::fmt::Write;

use super::DenseInstance;
use crate::error::{Error, Result};

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_instance(inst: &DenseInstance) -> String {
    let n = inst.n();
    let mut out = String::new();
    writeln!(out, "{} {}", n, sig17(inst.p())).unwrap();
    for m in 0..n {
        out.extend((0..n).map(|w| if inst.admissible(m, w) { '1' } else { '0' }));
        out.push('\n');
    }
    for score in [DenseInstance::x, DenseInstance::y] {
        for m in 0..n {
            let row: Vec<String> = (0..n).map(|w| sig17(score(inst, m, w))).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    out
}

pub fn read_instance(text: &str) -> Result<DenseInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, msg: String| Error::Parse { line, msg };

    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input".into()))?;
    let mut head = header.split_whitespace();
    let n: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(hl, "expected `n p`".into()))?;
    let p: f64 = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(hl, "expected `n p`".into()))?;
    if n == 0 {
        return Err(perr(hl, "n must be positive".into()));
    }

    let mut adm = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hl, "missing admissibility rows".into()))?;
        let row: Vec<bool> = l
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(perr(ln, format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(perr(ln, format!("expected {n} entries, got {}", row.len())));
        }
        adm.push(row);
    }

    let mut read_matrix = |what: &str| -> Result<Vec<Vec<f64>>> {
        (0..n)
            .map(|_| {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| perr(hl, format!("missing {what} rows")))?;
                let row: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|e| perr(ln, format!("{t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if row.len() != n {
                    return Err(perr(ln, format!("expected {n} entries, got {}", row.len())));
                }
                Ok(row)
            })
            .collect()
    };
    let x = read_matrix("x")?;
    let y = read_matrix("y")?;
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing data".into()));
    }
    DenseInstance::from_matrices(p, adm, x, y).map_err(|e| match e {
        Error::InvalidParameter(msg) => perr(hl, msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_dense;
    use crate::rng::StreamSpec;
    use proptest::prelude::*;

    #[test]
    fn small_fixture_parses() {
        let text = "2 1\n10\n11\n0.1 0.2\n0.4 0.3\n0.5 0.6\n0.7 0.8\n";
        let inst = read_instance(text).unwrap();
        assert!(inst.admissible(0, 0) && !inst.admissible(0, 1));
        assert_eq!(inst.x(1, 1), 0.3);
        assert_eq!(inst.y(1, 0), 0.7);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_instance("").is_err());
        assert!(read_instance("2 1\n10\n1x\n").is_err());
        assert!(read_instance("1 1\n1\n0.5\n").is_err());
        assert!(read_instance("1 1\n1\n0.5\n0.5\n0.5\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(n in 1usize..8, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let inst = generate_dense(n, p, StreamSpec::new(seed, 0)).unwrap();
            let back = read_instance(&write_instance(&inst)).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
