//! Textual input formats: rationals, polynomials, points, window chains,
//! and the two set-file layouts.
//!
//! Set file: UTF-8, first line `#N=<int>`, then one decimal member per
//! line, values in [1, N]. Grid-set file: first line `#k=<int> #M=<int>`,
//! then one comma-separated k-tuple per line. Both tolerate blank lines
//! and CRLF endings.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use polyrec_core::torus::TorusPoint;
use polyrec_core::{DenseSet, Error, GridSet, Polynomial, Rat, Result};

/// Parses `a/b` or a bare integer into an exact rational.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let trimmed = text.trim();
    let (num_text, den_text) = match trimmed.split_once('/') {
        Some((n, d)) => (n, d),
        None => (trimmed, "1"),
    };
    let numer = BigInt::from_str(num_text.trim())
        .map_err(|_| Error::Parse(format!("bad rational numerator in '{trimmed}'")))?;
    let denom = BigInt::from_str(den_text.trim())
        .map_err(|_| Error::Parse(format!("bad rational denominator in '{trimmed}'")))?;
    if denom == BigInt::from(0) {
        return Err(Error::Parse(format!("zero denominator in '{trimmed}'")));
    }
    Ok(Rat::new(numer, denom))
}

/// Parses a comma-separated list of rationals.
pub fn parse_rat_list(text: &str) -> Result<Vec<Rat>> {
    text.split(',').map(parse_rat).collect()
}

/// Parses a comma-separated rational tuple into a torus point.
pub fn parse_point(text: &str) -> Result<TorusPoint> {
    TorusPoint::new(parse_rat_list(text)?)
}

/// Parses comma-separated coefficients `c1,c2,...` of n, n^2, ...
/// A zero or missing leading coefficient is a configuration error here,
/// not a library contract breach.
pub fn parse_poly(text: &str) -> Result<Polynomial> {
    let coeffs: Vec<i64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad polynomial coefficient '{}'", t.trim())))
        })
        .collect::<Result<_>>()?;
    Polynomial::new(coeffs).map_err(|e| Error::Parse(format!("bad polynomial: {e}")))
}

/// Parses a window chain `l1:m1,l2:m2,...` into (start, length) pairs.
pub fn parse_windows(text: &str) -> Result<Vec<(BigInt, BigInt)>> {
    text.split(',')
        .map(|pair| {
            let (l, m) = pair
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("window '{pair}' is not 'start:length'")))?;
            let start = BigInt::from_str(l.trim())
                .map_err(|_| Error::Parse(format!("bad window start '{}'", l.trim())))?;
            let length = BigInt::from_str(m.trim())
                .map_err(|_| Error::Parse(format!("bad window length '{}'", m.trim())))?;
            Ok((start, length))
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read '{}': {e}", path.display())))
}

/// Loads a 1-D set file.
pub fn read_dense_set(path: &Path) -> Result<DenseSet> {
    let text = read_text(path)?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("set file is empty".into()))?;
    let n: u64 = header
        .strip_prefix("#N=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("set file header '{header}' is not '#N=<int>'")))?;
    let members: Vec<u64> = lines
        .map(|l| {
            l.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad set member '{l}'")))
        })
        .collect::<Result<_>>()?;
    DenseSet::from_members(n, &members)
}

/// Loads a k-dimensional grid-set file.
pub fn read_grid_set(path: &Path) -> Result<GridSet> {
    let text = read_text(path)?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("grid-set file is empty".into()))?;
    let mut k: Option<usize> = None;
    let mut m: Option<u64> = None;
    for field in header.split_whitespace() {
        if let Some(v) = field.strip_prefix("#k=") {
            k = v.parse().ok();
        } else if let Some(v) = field.strip_prefix("#M=") {
            m = v.parse().ok();
        }
    }
    let (k, m) = match (k, m) {
        (Some(k), Some(m)) => (k, m),
        _ => {
            return Err(Error::Parse(format!(
                "grid-set header '{header}' is not '#k=<int> #M=<int>'"
            )))
        }
    };
    let members: Vec<Vec<i64>> = lines
        .map(|l| {
            let tuple: Vec<i64> = l
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad grid coordinate '{}'", t.trim())))
                })
                .collect::<Result<_>>()?;
            if tuple.len() != k {
                return Err(Error::Parse(format!(
                    "grid tuple '{l}' has {} coordinates, expected {k}",
                    tuple.len()
                )));
            }
            Ok(tuple)
        })
        .collect::<Result<_>>()?;
    GridSet::from_members(k, m, &members)
}

/// Renders a grid set in the grid-set file layout (members in row order).
pub fn grid_set_text(b: &GridSet) -> String {
    let mut out = format!("#k={} #M={}\n", b.dimension(), b.side());
    for member in b.members() {
        let row: Vec<String> = member.iter().map(|c| c.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
