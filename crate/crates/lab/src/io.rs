//! Plain-text set, function and checkpoint files.
//!
//! A set file starts with a `d N` line followed by `N` rows of `d` integers.
//! A function file starts with `d M` followed by `M` rows of `d` integers and
//! one real value. A checkpoint is a set file followed by `key value` lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use isocap_core::{LatticeFunction, LatticePoint, LatticeSet};

use crate::error::{LabError, Result};

/// Lines that carry content, numbered from one. Blank lines are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_field<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| LabError::format(line, format!("cannot parse {what} from `{tok}`")))
}

fn parse_header(line: Option<(usize, &str)>) -> Result<(usize, usize)> {
    let (no, text) = line.ok_or_else(|| LabError::format(1, "missing `d count` header"))?;
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(LabError::format(no, "header must be `d count`"));
    }
    Ok((parse_field(no, toks[0], "dimension")?, parse_field(no, toks[1], "count")?))
}

fn parse_point(no: usize, toks: &[&str]) -> Result<LatticePoint> {
    let coords = toks
        .iter()
        .map(|t| parse_field::<i32>(no, t, "coordinate"))
        .collect::<Result<Vec<_>>>()?;
    LatticePoint::new(&coords).map_err(|e| LabError::format(no, e.to_string()))
}

fn parse_set_rows<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<LatticeSet> {
    let (d, n) = parse_header(lines.next())?;
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let (no, text) = lines
            .next()
            .ok_or_else(|| LabError::format(k + 2, format!("expected {n} points, found {k}")))?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != d {
            return Err(LabError::format(no, format!("expected {d} coordinates, found {}", toks.len())));
        }
        pts.push(parse_point(no, &toks)?);
    }
    LatticeSet::new(d, pts).map_err(|e| LabError::format(0, e.to_string()))
}

pub fn parse_set(text: &str) -> Result<LatticeSet> {
    let mut lines = content_lines(text);
    let set = parse_set_rows(&mut lines)?;
    if let Some((no, _)) = lines.next() {
        return Err(LabError::format(no, format!("more than {} points", set.len())));
    }
    Ok(set)
}

pub fn format_set(x: &LatticeSet) -> String {
    let mut s = format!("{} {}\n", x.dim(), x.len());
    for q in x.iter() {
        push_coords(&mut s, q);
        s.push('\n');
    }
    s
}

fn push_coords(s: &mut String, q: &LatticePoint) {
    for (k, c) in q.coords().iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{c}");
    }
}

pub fn parse_function(text: &str) -> Result<LatticeFunction> {
    let mut lines = content_lines(text);
    let (d, m) = parse_header(lines.next())?;
    let mut entries = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for k in 0..m {
        let (no, text) = lines
            .next()
            .ok_or_else(|| LabError::format(k + 2, format!("expected {m} entries, found {k}")))?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != d + 1 {
            return Err(LabError::format(no, format!("expected {} fields, found {}", d + 1, toks.len())));
        }
        let q = parse_point(no, &toks[..d])?;
        if !seen.insert(q) {
            return Err(LabError::format(no, format!("duplicate point {q}")));
        }
        let v: f64 = parse_field(no, toks[d], "value")?;
        entries.push((q, v));
    }
    if let Some((no, _)) = lines.next() {
        return Err(LabError::format(no, format!("more than {m} entries")));
    }
    LatticeFunction::from_entries(d, entries).map_err(|e| LabError::format(0, e.to_string()))
}

/// Writes the nonzero entries; values use the shortest round-tripping form.
pub fn format_function(u: &LatticeFunction) -> String {
    let entries: Vec<(LatticePoint, f64)> = u.nonzero().collect();
    let mut s = format!("{} {}\n", u.dim(), entries.len());
    for (q, v) in &entries {
        push_coords(&mut s, q);
        let _ = writeln!(s, " {v:?}");
    }
    s
}

/// A saved optimizer state: the set plus what produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub set: LatticeSet,
    pub objective: String,
    pub value: f64,
    pub seed: u64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

pub fn format_checkpoint(c: &Checkpoint) -> String {
    let mut s = format_set(&c.set);
    let _ = writeln!(s, "objective {}", c.objective);
    let _ = writeln!(s, "value {:?}", c.value);
    let _ = writeln!(s, "seed {}", c.seed);
    let _ = writeln!(s, "evaluations {}", c.evaluations);
    let _ = writeln!(s, "budget_exhausted {}", c.budget_exhausted);
    s
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = content_lines(text);
    let set = parse_set_rows(&mut lines)?;
    let mut meta = std::collections::HashMap::new();
    for (no, line) in lines {
        let (k, v) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| LabError::format(no, "expected `key value`"))?;
        if meta.insert(k.to_owned(), (no, v.trim().to_owned())).is_some() {
            return Err(LabError::format(no, format!("repeated key `{k}`")));
        }
    }
    let mut take = |key: &str| {
        meta.remove(key)
            .ok_or_else(|| LabError::format(0, format!("missing metadata `{key}`")))
    };
    let objective = take("objective")?.1;
    let (no, v) = take("value")?;
    let value = parse_field(no, &v, "value")?;
    let (no, v) = take("seed")?;
    let seed = parse_field(no, &v, "seed")?;
    let (no, v) = take("evaluations")?;
    let evaluations = parse_field(no, &v, "evaluations")?;
    let (no, v) = take("budget_exhausted")?;
    let budget_exhausted = parse_field(no, &v, "flag")?;
    if let Some((k, (no, _))) = meta.into_iter().next() {
        return Err(LabError::format(no, format!("unknown metadata `{k}`")));
    }
    Ok(Checkpoint {
        set,
        objective,
        value,
        seed,
        evaluations,
        budget_exhausted,
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn read_set(path: &Path) -> Result<LatticeSet> {
    parse_set(&read_to_string(path)?)
}

pub fn read_function(path: &Path) -> Result<LatticeFunction> {
    parse_function(&read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_round_trip() {
        let x = LatticeSet::from_coords(&[&[0, 0, 0], &[1, -2, 3]]).unwrap();
        assert_eq!(parse_set(&format_set(&x)).unwrap(), x);
    }

    #[test]
    fn set_reader_rejects_bad_input() {
        assert!(parse_set("").is_err());
        assert!(parse_set("3 2\n0 0 0\n").is_err());
        assert!(parse_set("3 1\n0 0 0\n1 1 1\n").is_err());
        assert!(parse_set("3 2\n0 0 0\n0 0 0\n").is_err());
        assert!(parse_set("3 1\n0 0\n").is_err());
        assert!(parse_set("3 1\n0 x 0\n").is_err());
        assert!(parse_set("9 1\n0 0 0 0 0 0 0 0 0\n").is_err());
    }

    #[test]
    fn function_round_trip_is_exact() {
        let u = LatticeFunction::from_entries(
            2,
            [
                (LatticePoint::new(&[0, 0]).unwrap(), 1.0),
                (LatticePoint::new(&[1, 0]).unwrap(), 0.1 + 0.2),
                (LatticePoint::new(&[-3, 2]).unwrap(), 1e-17),
            ],
        )
        .unwrap();
        let v = parse_function(&format_function(&u)).unwrap();
        assert_eq!(u.nonzero().collect::<Vec<_>>(), v.nonzero().collect::<Vec<_>>());
        assert!(parse_function("2 1\n0 0 1.0\n0 0 2.0\n").is_err());
        assert!(parse_function("2 2\n0 0 1.0\n0 0 2.0\n").is_err());
        assert!(parse_function("2 1\n0 0\n").is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let c = Checkpoint {
            set: LatticeSet::from_coords(&[&[0, 0], &[0, 1]]).unwrap(),
            objective: "capacity p=2".into(),
            value: 3.25,
            seed: 7,
            evaluations: 12,
            budget_exhausted: false,
        };
        assert_eq!(parse_checkpoint(&format_checkpoint(&c)).unwrap(), c);
        let text = format_checkpoint(&c).replace("seed 7\n", "");
        assert!(parse_checkpoint(&text).is_err());
    }
}
