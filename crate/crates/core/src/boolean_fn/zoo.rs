//! Named functions and the string ids used by configs and the CLI.
//!
//! Ids: `or:n`, `and:n`, `parity:n`, `maj3`, `itmaj:k`, `dictator:n:i`
//! (bit `i` is 1-based) and `dense:<path>` (one value per line, `2^n` lines,
//! in table-index order).

use std::path::Path;

use super::{BooleanFunction, Node};
use crate::{Error, Result};

pub const ZOO_IDS: &[&str] = &[
    "or:<n>",
    "and:<n>",
    "parity:<n>",
    "maj3",
    "itmaj:<k>",
    "dictator:<n>:<i>",
    "dense:<path>",
];

fn vars(n: usize, offset: usize) -> Vec<Node> {
    (offset..offset + n).map(Node::Var).collect()
}

fn gate_or_leaf(n: usize, gate: fn(Vec<Node>) -> Node) -> Node {
    if n == 1 {
        Node::Var(0)
    } else {
        gate(vars(n, 0))
    }
}

pub fn or(n: usize) -> BooleanFunction {
    assert!(n >= 1);
    BooleanFunction::composite(gate_or_leaf(n, Node::Or))
        .expect("well-formed OR")
        .with_id(format!("or:{n}"))
}

pub fn and(n: usize) -> BooleanFunction {
    assert!(n >= 1);
    BooleanFunction::composite(gate_or_leaf(n, Node::And))
        .expect("well-formed AND")
        .with_id(format!("and:{n}"))
}

pub fn maj3() -> BooleanFunction {
    BooleanFunction::composite(Node::Maj3(vars(3, 0)))
        .expect("well-formed MAJ3")
        .with_id("maj3")
}

/// Circuit of iterated 3-majority of depth `k` on `3^k` bits, variables in
/// leaf order.
pub fn itmaj_node(k: u32) -> Node {
    fn build(k: u32, offset: usize) -> Node {
        if k == 0 {
            return Node::Var(offset);
        }
        let width = 3usize.pow(k - 1);
        Node::Maj3((0..3).map(|j| build(k - 1, offset + j * width)).collect())
    }
    build(k, 0)
}

pub fn itmaj(k: u32) -> BooleanFunction {
    BooleanFunction::composite(itmaj_node(k))
        .expect("well-formed iterated majority")
        .with_id(format!("itmaj:{k}"))
}

pub fn parity(n: usize) -> BooleanFunction {
    let table = (0..1usize << n)
        .map(|x| {
            let minus = n - x.count_ones() as usize;
            if minus.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    BooleanFunction::dense(n, table)
        .expect("parity table")
        .with_id(format!("parity:{n}"))
}

/// `f(x) = x_i` on `n` bits (`i` 0-based).
pub fn dictator(n: usize, i: usize) -> Result<BooleanFunction> {
    if i >= n {
        return Err(Error::invalid(format!("dictator bit {i} out of range for {n} bits")));
    }
    let table = (0..1usize << n)
        .map(|x| if x >> i & 1 == 1 { 1.0 } else { -1.0 })
        .collect();
    Ok(BooleanFunction::dense(n, table)?.with_id(format!("dictator:{n}:{}", i + 1)))
}

/// Reads a table file: one value per line, blank lines ignored.
pub fn load_dense(path: &Path) -> Result<BooleanFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut table = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::invalid(format!("{}:{}: not a number: {line:?}", path.display(), lineno + 1))
        })?;
        table.push(v);
    }
    if !table.len().is_power_of_two() || table.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: {} values is not 2^n with n >= 1",
            path.display(),
            table.len()
        )));
    }
    let n = table.len().trailing_zeros() as usize;
    Ok(BooleanFunction::dense(n, table)?.with_id(format!("dense:{}", path.display())))
}

fn parse_arg<T: std::str::FromStr>(id: &str, s: Option<&str>) -> Result<T> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid(format!("malformed function id {id:?}")))
}

/// Resolves a function id.
pub fn from_id(id: &str) -> Result<BooleanFunction> {
    if let Some(path) = id.strip_prefix("dense:") {
        return load_dense(Path::new(path));
    }
    let mut parts = id.split(':');
    let head = parts.next().unwrap_or_default();
    let f = match head {
        "or" | "and" | "parity" => {
            let n: usize = parse_arg(id, parts.next())?;
            if n == 0 || n > 24 && head == "parity" {
                return Err(Error::invalid(format!("unsupported size in {id:?}")));
            }
            match head {
                "or" => or(n),
                "and" => and(n),
                _ => parity(n),
            }
        }
        "maj3" => maj3(),
        "itmaj" => {
            let k: u32 = parse_arg(id, parts.next())?;
            if k > 12 {
                return Err(Error::invalid(format!("itmaj depth {k} too large")));
            }
            itmaj(k)
        }
        "dictator" => {
            let n: usize = parse_arg(id, parts.next())?;
            let i: usize = parse_arg(id, parts.next())?;
            if i == 0 || n == 0 || n > 24 {
                return Err(Error::invalid(format!("malformed function id {id:?}")));
            }
            dictator(n, i - 1)?
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown function id {id:?}; valid ids: {}",
                ZOO_IDS.join(", ")
            )))
        }
    };
    if parts.next().is_some() {
        return Err(Error::invalid(format!("malformed function id {id:?}")));
    }
    Ok(f)
}
