//! Plain-text point-set (`delone-v1`) and map (`map-v1`) files.
//!
//! ```text
//! # delone-v1 d=2 denom=1
//! 0 0
//! 0 1
//! ```
//!
//! Lines hold integer numerators over the header denominator, sorted
//! lexicographically on output, LF-terminated.

use std::fmt::Write as _;
use std::path::Path;

use crate::distortion::BijectionTable;
use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, PointSet};

pub const POINTS_MAGIC: &str = "# delone-v1";
pub const MAP_MAGIC: &str = "# map-v1";

pub fn write_points(set: &PointSet) -> String {
    let mut out = String::with_capacity(16 * set.len() + 32);
    let _ = writeln!(out, "{POINTS_MAGIC} d=2 denom={}", set.denom());
    for p in set.numerators() {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    out
}

fn header_value<'a>(fields: &[&'a str], key: &str, line: usize) -> Result<&'a str> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::parse(line, format!("header lacks {key}=")))
}

fn parse_positive(s: &str, what: &str, line: usize) -> Result<i64> {
    match s.parse::<i64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::parse(line, format!("{what} must be a positive integer, got '{s}'"))),
    }
}

fn parse_ints<const N: usize>(line: &str, no: usize) -> Result<[i64; N]> {
    let mut out = [0i64; N];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| Error::parse(no, format!("expected {N} integers")))?;
        *slot = tok
            .parse()
            .map_err(|_| Error::parse(no, format!("'{tok}' is not an integer")))?;
    }
    if it.next().is_some() {
        return Err(Error::parse(no, format!("expected {N} integers")));
    }
    Ok(out)
}

/// Non-blank body lines with their 1-based line numbers.
fn body(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_points(text: &str) -> Result<PointSet> {
    let head = text.lines().next().unwrap_or("");
    let rest = head
        .strip_prefix(POINTS_MAGIC)
        .ok_or_else(|| Error::parse(1, format!("missing '{POINTS_MAGIC}' header")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if header_value(&fields, "d", 1)? != "2" {
        return Err(Error::parse(1, "only d=2 is supported"));
    }
    let denom = parse_positive(header_value(&fields, "denom", 1)?, "denom", 1)?;
    let mut pts = Vec::new();
    for (no, line) in body(text) {
        let [x, y] = parse_ints::<2>(line, no)?;
        pts.push(LatticePoint::new(x, y));
    }
    PointSet::new(denom, pts).map_err(|e| Error::parse(0, e.to_string()))
}

pub fn write_map(f: &BijectionTable) -> String {
    let mut out = String::with_capacity(24 * f.len() + 48);
    let _ = writeln!(
        out,
        "{MAP_MAGIC} denom_src={} denom_tgt={}",
        f.source().denom(),
        f.target().denom()
    );
    for (x, u) in f.pairs() {
        let _ = writeln!(out, "{} {} {} {}", x.x, x.y, u.x, u.y);
    }
    out
}

pub fn parse_map(text: &str) -> Result<BijectionTable> {
    let head = text.lines().next().unwrap_or("");
    let rest = head
        .strip_prefix(MAP_MAGIC)
        .ok_or_else(|| Error::parse(1, format!("missing '{MAP_MAGIC}' header")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let ds = parse_positive(header_value(&fields, "denom_src", 1)?, "denom_src", 1)?;
    let dt = parse_positive(header_value(&fields, "denom_tgt", 1)?, "denom_tgt", 1)?;
    let mut pairs = Vec::new();
    for (no, line) in body(text) {
        let [x, y, u, v] = parse_ints::<4>(line, no)?;
        pairs.push((LatticePoint::new(x, y), LatticePoint::new(u, v)));
    }
    BijectionTable::new(ds, dt, pairs)
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    parse_points(&std::fs::read_to_string(path)?)
}

pub fn read_map(path: &Path) -> Result<BijectionTable> {
    parse_map(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip() {
        let set = PointSet::new(
            4,
            vec![LatticePoint::new(3, -1), LatticePoint::new(-2, 5), LatticePoint::new(0, 0)],
        )
        .unwrap();
        let text = write_points(&set);
        assert_eq!(text, "# delone-v1 d=2 denom=4\n-2 5\n0 0\n3 -1\n");
        assert_eq!(parse_points(&text).unwrap(), set);
    }

    #[test]
    fn points_reject_bad_input() {
        assert!(parse_points("0 0\n").is_err());
        assert!(parse_points("# delone-v1 d=2 denom=0\n").is_err());
        assert!(parse_points("# delone-v1 d=3 denom=1\n").is_err());
        assert!(parse_points("# delone-v1 d=2 denom=1\n1 x\n").is_err());
        assert!(parse_points("# delone-v1 d=2 denom=1\n1 2 3\n").is_err());
        assert!(matches!(
            parse_points("# delone-v1 d=2 denom=1\n1 2\n1 2\n"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_points("").is_err());
    }

    #[test]
    fn map_round_trip() {
        let text = "# map-v1 denom_src=1 denom_tgt=2\n0 0 1 1\n1 0 3 1\n";
        let f = parse_map(text).unwrap();
        assert_eq!(write_map(&f), text);
        assert!(parse_map("# map-v1 denom_src=1 denom_tgt=1\n0 0 1 1\n1 0 1 1\n").is_err());
        assert!(parse_map("# map-v1 denom_src=1\n").is_err());
    }
}
