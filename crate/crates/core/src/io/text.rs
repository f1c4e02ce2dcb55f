//! Whitespace-separated text tables: HKL amplitude lists (`h k l F`) and
//! background profiles (`stol f_bg`). `#` starts a comment; blank lines are
//! skipped. Writers use shortest round-trip float formatting, so a written
//! table reloads bit-exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{BackgroundProfile, Miller, StructureFactorTable};

/// Yields `(line_number, fields)` for every non-blank, non-comment line.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = line.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_amplitude(path: &Path, line: usize, what: &str, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what} {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what} {field:?} is not finite")));
    }
    if v < 0.0 {
        return Err(parse_err(path, line, format!("{what} {v} is negative")));
    }
    Ok(v)
}

/// Structure-factor table with `default_f = 0`; the config supplies the
/// real default.
pub fn load_hkl(path: impl AsRef<Path>) -> Result<StructureFactorTable> {
    let path = path.as_ref();
    parse_hkl(path, &read(path)?)
}

pub(crate) fn parse_hkl(path: &Path, text: &str) -> Result<StructureFactorTable> {
    let mut entries: HashMap<Miller, f64> = HashMap::new();
    for (line, fields) in records(text) {
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line,
                format!("expected 4 fields `h k l F`, found {}", fields.len()),
            ));
        }
        let mut idx = [0i32; 3];
        for (slot, (name, field)) in idx.iter_mut().zip(["h", "k", "l"].iter().zip(&fields)) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("{name} {field:?} is not an integer")))?;
        }
        let f = parse_amplitude(path, line, "amplitude", fields[3])?;
        let key = (idx[0], idx[1], idx[2]);
        if entries.insert(key, f).is_some() {
            log::warn!("{}:{line}: duplicate reflection {key:?}, keeping the later value", path.display());
        }
    }
    StructureFactorTable::new(entries, 0.0)
}

/// Writes `h k l F` lines, sorted by Miller triple.
pub fn write_hkl(table: &StructureFactorTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut keys: Vec<_> = table.entries().iter().collect();
    keys.sort_by_key(|(k, _)| **k);
    let mut out = String::from("# h k l F\n");
    for ((h, k, l), f) in keys {
        writeln!(out, "{h} {k} {l} {f}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_background(path: impl AsRef<Path>) -> Result<BackgroundProfile> {
    let path = path.as_ref();
    parse_background(path, &read(path)?)
}

pub(crate) fn parse_background(path: &Path, text: &str) -> Result<BackgroundProfile> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    let mut last_line = 0;
    for (line, fields) in records(text) {
        last_line = line;
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 fields `stol f_bg`, found {}", fields.len()),
            ));
        }
        let stol = parse_amplitude(path, line, "stol", fields[0])?;
        let f = parse_amplitude(path, line, "amplitude", fields[1])?;
        if let Some((prev_line, prev_stol)) = prev {
            if stol <= prev_stol {
                return Err(parse_err(
                    path,
                    line,
                    format!(
                        "stol {stol} on line {line} does not exceed stol {prev_stol} on line {prev_line}; \
                         values must strictly increase"
                    ),
                ));
            }
        }
        prev = Some((line, stol));
        points.push((stol, f));
    }
    if points.len() < 2 {
        return Err(parse_err(
            path,
            last_line,
            format!("a background profile needs at least 2 points, found {}", points.len()),
        ));
    }
    BackgroundProfile::new(points).map_err(|e| parse_err(path, last_line, e.to_string()))
}

pub fn write_background(profile: &BackgroundProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("# stol f_bg\n");
    for (s, f) in profile.points() {
        writeln!(out, "{s} {f}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.hkl")
    }

    #[test]
    fn single_reflection() {
        let t = parse_hkl(p(), "1 0 0 50.0\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.lookup_f(1.0, 0.0, 0.0), 50.0);
    }

    #[test]
    fn comments_only_is_empty() {
        let t = parse_hkl(p(), "# nothing\n\n   # here\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn duplicate_last_wins() {
        let t = parse_hkl(p(), "1 1 1 5\n1 1 1 9 # again\n").unwrap();
        assert_eq!(t.lookup_f(1.0, 1.0, 1.0), 9.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("1 0 0 5\n1.5 0 0 3\n", 2),
            ("\n\n1 0 0 -3\n", 3),
            ("1 0 0\n", 1),
            ("1 0 0 x\n", 1),
        ] {
            match parse_hkl(p(), text).unwrap_err() {
                Error::Parse { line: l, .. } => assert_eq!(l, line, "{text:?}"),
                other => panic!("{other}"),
            }
        }
    }

    #[test]
    fn two_point_background() {
        let b = parse_background(p(), "0 10\n0.5 2").unwrap();
        assert_eq!(b.points(), &[(0.0, 10.0), (0.5, 2.0)]);
    }

    #[test]
    fn single_point_rejected() {
        assert!(matches!(parse_background(p(), "0 10\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn non_monotone_names_both_lines() {
        let err = parse_background(p(), "0 10\n0.3 5\n# c\n0.2 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        assert!(msg.contains("line 4") && msg.contains("line 2"), "{msg}");
    }
}
