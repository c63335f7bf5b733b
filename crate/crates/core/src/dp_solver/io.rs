//! Plain-text dump of a solved lattice: a commented header, then one CSV row
//! per point with 1-based directions (0 where nothing is read).

use std::io::{BufRead, Write};

use super::{Lattice, LatticeField, Policy, Solution, SolveReport, NO_DIRECTION};
use crate::{Error, Result};

pub fn write_field<W: Write>(mut w: W, s: &Solution) -> Result<()> {
    let l = s.field.lattice;
    writeln!(w, "# n={}", l.n())?;
    writeln!(w, "# level={}", l.level())?;
    writeln!(w, "# function={}", s.field.function_id)?;
    let coords: Vec<String> = (1..=l.n()).map(|i| format!("x{i}")).collect();
    writeln!(w, "index,{},value,direction", coords.join(","))?;
    let mut line = String::new();
    for idx in 0..l.len() {
        line.clear();
        line.push_str(&idx.to_string());
        for x in l.point(idx) {
            line.push_str(&format!(",{x}"));
        }
        let dir = s.policy.direction(idx).map_or(0, |d| d + 1);
        line.push_str(&format!(",{:.16e},{dir}", s.field.value(idx)));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn header<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix("# "))
        .and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix('='))
        .ok_or_else(|| Error::invalid(format!("field dump is missing the `{key}` header")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("field dump: bad {what} `{s}`")))
}

pub fn read_field<R: BufRead>(r: R) -> Result<Solution> {
    let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().map(String::as_str);
    let n: usize = parse(header(it.next(), "n")?, "dimension")?;
    let level: u32 = parse(header(it.next(), "level")?, "level")?;
    let function_id = header(it.next(), "function")?.to_string();
    let lattice = Lattice::new(n, level)?;
    it.next()
        .ok_or_else(|| Error::invalid("field dump is missing the column header"))?;
    let mut values = vec![f64::NAN; lattice.len()];
    let mut directions = vec![NO_DIRECTION; lattice.len()];
    let mut rows = 0;
    for line in it.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != n + 3 {
            return Err(Error::invalid(format!("field dump: malformed row `{line}`")));
        }
        let idx: usize = parse(cols[0], "index")?;
        if idx >= lattice.len() {
            return Err(Error::invalid(format!("field dump: index {idx} out of range")));
        }
        values[idx] = parse(cols[n + 1], "value")?;
        let dir: usize = parse(cols[n + 2], "direction")?;
        if dir > n {
            return Err(Error::invalid(format!("field dump: direction {dir} out of range")));
        }
        directions[idx] = if dir == 0 { NO_DIRECTION } else { (dir - 1) as u8 };
        rows += 1;
    }
    if rows != lattice.len() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(format!(
            "field dump has {rows} rows, expected {}",
            lattice.len()
        )));
    }
    Ok(Solution {
        field: LatticeField::new(lattice, function_id, values)?,
        policy: Policy::new(lattice, directions)?,
        report: SolveReport::default(),
    })
}
