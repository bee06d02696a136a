//! Plain-text file formats: decompositions (canonical and the
//! triple-of-matrices layout used by public collections), restriction
//! files, simulation profiles, and whitespace matrix files.
//!
//! Canonical decomposition format, byte-exact:
//!
//! ```text
//! n m p r ring          ring in {z2, z2^K, int}
//! <A factor: n*m integers, row-major>
//! <B factor: m*p integers, row-major>
//! <C factor: p*n integers, k-major (coefficient of output C[i][k] at
//!  position k*n+i)>
//! <blank line between blocks>
//! ...
//! ```

use std::path::Path;

use num_bigint::BigInt;

use crate::builtin;
use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::Error;
use crate::executor;
use crate::matrix::Matrix;
use crate::plan::ExecutionPlan;
use crate::ring::Ring;
use crate::shape::Shape;
use crate::simulator::{SimLevel, SimProfile};
use crate::structure::{Objective, StructuredRestriction};

pub fn write_decomposition(dec: &Decomposition) -> String {
    let mut out = String::new();
    let s = dec.shape;
    out.push_str(&format!(
        "{} {} {} {} {}\n",
        s.n,
        s.m,
        s.p,
        dec.rank(),
        dec.ring.token()
    ));
    for (i, t) in dec.terms().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for f in [&t.a, &t.b, &t.c] {
            let line: Vec<String> = f.entries().iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

fn content_lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn parse_ints(line: &str, expect: usize, what: &str) -> Result<Vec<BigInt>, Error> {
    let vals: Result<Vec<BigInt>, _> = line.split_whitespace().map(str::parse::<BigInt>).collect();
    let vals = vals.map_err(|e| Error::Parse(format!("{what}: {e}")))?;
    if vals.len() != expect {
        return Err(Error::Parse(format!(
            "{what}: expected {expect} integers, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

pub fn parse_decomposition(text: &str) -> Result<Decomposition, Error> {
    let lines = content_lines(text);
    let mut it = lines.into_iter();
    let header = it
        .next()
        .ok_or_else(|| Error::Parse("empty decomposition file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::Parse("header must be: n m p r ring".into()));
    }
    let dim = |s: &str| -> Result<usize, Error> {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad header field '{s}': {e}")))
    };
    let (n, m, p, r) = (
        dim(fields[0])?,
        dim(fields[1])?,
        dim(fields[2])?,
        dim(fields[3])?,
    );
    let ring = Ring::parse_token(fields[4])?;
    let shape = Shape::new(n, m, p)?;
    let mut terms = Vec::with_capacity(r);
    for t in 0..r {
        let mut fac = Vec::with_capacity(3);
        for (rows, cols, name) in [(n, m, "A factor"), (m, p, "B factor"), (p, n, "C factor")] {
            let line = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {name} of term {t}")))?;
            fac.push(Matrix::from_vec(
                rows,
                cols,
                parse_ints(line, rows * cols, name)?,
            )?);
        }
        let c = fac.pop().unwrap();
        let b = fac.pop().unwrap();
        let a = fac.pop().unwrap();
        terms.push(RankOneTerm { a, b, c });
    }
    if it.next().is_some() {
        return Err(Error::Parse("trailing content after final term".into()));
    }
    Decomposition::new(shape, ring, terms)
}

/// Reader for the triple-of-matrices layout used by public decomposition
/// collections: after an `n m p r [ring]` header, three integer matrices
/// follow with one line per row and one column per term: the first is
/// (n*m) x r over the a coefficients (row-major), the second (m*p) x r
/// over the b coefficients, the third (n*p) x r over the output
/// coefficients in row-major C[i][k] order (transposed into the k-major
/// convention on read).
pub fn parse_triple_matrix(text: &str) -> Result<Decomposition, Error> {
    let lines = content_lines(text);
    let mut it = lines.into_iter();
    let header = it
        .next()
        .ok_or_else(|| Error::Parse("empty decomposition file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 && fields.len() != 5 {
        return Err(Error::Parse("header must be: n m p r [ring]".into()));
    }
    let dim = |s: &str| -> Result<usize, Error> {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad header field '{s}': {e}")))
    };
    let (n, m, p, r) = (
        dim(fields[0])?,
        dim(fields[1])?,
        dim(fields[2])?,
        dim(fields[3])?,
    );
    let ring = if fields.len() == 5 {
        Ring::parse_token(fields[4])?
    } else {
        Ring::Integer
    };
    let shape = Shape::new(n, m, p)?;
    let mut read_block = |rows: usize, what: &str| -> Result<Vec<Vec<BigInt>>, Error> {
        (0..rows)
            .map(|row| {
                let line = it
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing row {row} of {what}")))?;
                parse_ints(line, r, what)
            })
            .collect()
    };
    let ablock = read_block(n * m, "first factor matrix")?;
    let bblock = read_block(m * p, "second factor matrix")?;
    let cblock = read_block(n * p, "third factor matrix")?;
    let mut terms = Vec::with_capacity(r);
    for t in 0..r {
        let a = Matrix::from_vec(n, m, ablock.iter().map(|row| row[t].clone()).collect())?;
        let b = Matrix::from_vec(m, p, bblock.iter().map(|row| row[t].clone()).collect())?;
        // rows are C[i][k] row-major; storage is k-major
        let mut c = Matrix::zero(p, n);
        for i in 0..n {
            for k in 0..p {
                *c.at_mut(k, i) = cblock[i * p + k][t].clone();
            }
        }
        terms.push(RankOneTerm { a, b, c });
    }
    Decomposition::new(shape, ring, terms)
}

/// Restriction file: first line is the base shape `n m p`, then one block
/// per line as `s n_i m_i p_i`. Comments (#) and blank lines are ignored.
pub fn write_restriction(r: &StructuredRestriction) -> String {
    let mut out = format!("{} {} {}\n", r.base.n, r.base.m, r.base.p);
    for (shape, mult) in r.all_blocks() {
        out.push_str(&format!("{} {} {} {}\n", mult, shape.n, shape.m, shape.p));
    }
    out
}

pub fn parse_restriction(text: &str) -> Result<StructuredRestriction, Error> {
    let lines = content_lines(text);
    let mut it = lines.into_iter();
    let header = it
        .next()
        .ok_or_else(|| Error::Parse("empty restriction file".into()))?;
    let nums: Result<Vec<usize>, _> = header.split_whitespace().map(str::parse).collect();
    let nums = nums.map_err(|e| Error::Parse(format!("bad base shape: {e}")))?;
    if nums.len() != 3 {
        return Err(Error::Parse("restriction header must be: n m p".into()));
    }
    let base = Shape::new(nums[0], nums[1], nums[2])?;
    let mut blocks = Vec::new();
    for line in it {
        let nums: Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
        let nums = nums.map_err(|e| Error::Parse(format!("bad block line '{line}': {e}")))?;
        if nums.len() != 4 {
            return Err(Error::Parse(format!(
                "block line must be: s n m p (got '{line}')"
            )));
        }
        blocks.push((
            Shape::new(nums[1] as usize, nums[2] as usize, nums[3] as usize)?,
            nums[0],
        ));
    }
    Ok(StructuredRestriction::from_blocks(
        base,
        &blocks.iter().map(|&(s, m)| (s, m)).collect::<Vec<_>>(),
    ))
}

/// Matrix file: first line `rows cols`, then entries in row-major order
/// separated by whitespace (line breaks anywhere).
pub fn parse_matrix(text: &str) -> Result<Matrix<BigInt>, Error> {
    let mut tokens = text.split_whitespace();
    let rows: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad row count: {e}")))?;
    let cols: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("missing column count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad column count: {e}")))?;
    let entries: Result<Vec<BigInt>, _> = tokens.map(str::parse).collect();
    let entries = entries.map_err(|e| Error::Parse(format!("bad matrix entry: {e}")))?;
    Matrix::from_vec(rows, cols, entries)
}

pub fn write_matrix(m: &Matrix<BigInt>) -> String {
    let mut out = format!("{} {}\n", m.rows, m.cols);
    for r in 0..m.rows {
        let line: Vec<String> = (0..m.cols).map(|c| m.at(r, c).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Loads a decomposition from a path (canonical format, with the
/// triple-of-matrices layout as a fallback) or from a `builtin:` name.
pub fn load_decomposition(spec: &str, base_dir: &Path) -> Result<Decomposition, Error> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return builtin::by_name(name)
            .ok_or_else(|| Error::Parse(format!("unknown builtin decomposition '{name}'")));
    }
    let path = base_dir.join(spec);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_decomposition(&text)
        .or_else(|first_err| parse_triple_matrix(&text).map_err(|_| first_err))
}

/// Profile file: one level per line, `cutover kind spec A`, highest
/// cutover first by convention though any order is accepted.
///
/// ```text
/// 10000 restriction r666_117_18.rest 691
/// 35 plan builtin:winograd -
/// 1 standard - -
/// ```
///
/// Kinds: `standard`; `scheme` (decomposition executed term by term);
/// `plan` (decomposition with structure analysis applied); `restriction`
/// (census file with a declared addition count, simulation only).
pub fn parse_profile(name: &str, text: &str, base_dir: &Path) -> Result<SimProfile, Error> {
    let mut levels = Vec::new();
    for line in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "profile line must be: cutover kind spec A (got '{line}')"
            )));
        }
        let cutover: u64 = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("bad cutover '{}': {e}", fields[0])))?;
        let level = match fields[1] {
            "standard" => SimLevel::Standard,
            "scheme" => {
                let dec = load_decomposition(fields[2], base_dir)?;
                SimLevel::Plan(Box::new(ExecutionPlan::for_scheme(&dec)?))
            }
            "plan" => {
                let dec = load_decomposition(fields[2], base_dir)?;
                SimLevel::Plan(Box::new(ExecutionPlan::structured(
                    &dec,
                    Objective::Exponent,
                )?))
            }
            "restriction" => {
                let path = base_dir.join(fields[2]);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                let restriction = parse_restriction(&text)?;
                let additions: u64 = fields[3]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad addition count: {e}")))?;
                SimLevel::Declared {
                    restriction,
                    additions,
                }
            }
            other => return Err(Error::Parse(format!("unknown profile kind '{other}'"))),
        };
        levels.push((cutover, level));
    }
    SimProfile::new(name, levels)
}

/// Converts a simulation profile into an executable schedule; declared
/// levels have no linear-phase programs and cannot run.
pub fn executable_schedule(profile: &SimProfile) -> Result<executor::Schedule, Error> {
    let mut levels = Vec::new();
    for (cutover, level) in profile.levels() {
        let level = match level {
            SimLevel::Standard => executor::Level::Standard,
            SimLevel::Plan(plan) => executor::Level::Plan((**plan).clone()),
            SimLevel::Declared { .. } => {
                return Err(Error::Unsupported(
                    "declared-restriction profile levels are simulation-only".into(),
                ))
            }
        };
        let cutover = usize::try_from(*cutover)
            .map_err(|_| Error::Structural("cutover exceeds addressable size".into()))?;
        levels.push((cutover, level));
    }
    executor::Schedule::new(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        for (_, dec) in builtin::all() {
            let text = write_decomposition(&dec);
            let parsed = parse_decomposition(&text).unwrap();
            assert_eq!(parsed, dec);
            assert_eq!(write_decomposition(&parsed), text);
        }
    }

    #[test]
    fn parse_tolerates_blank_lines_and_comments() {
        let text = "# strassen\n\n".to_string() + &write_decomposition(&builtin::strassen());
        assert_eq!(parse_decomposition(&text).unwrap(), builtin::strassen());
    }

    #[test]
    fn triple_matrix_layout_maps_to_the_same_scheme() {
        let dec = builtin::strassen();
        // build the column layout by hand from the canonical scheme
        let (n, m, p, r) = (2, 2, 2, dec.rank());
        let mut lines = vec![format!("{n} {m} {p} {r}")];
        for x in 0..n * m {
            let row: Vec<String> = dec
                .terms()
                .iter()
                .map(|t| t.a.entries()[x].to_string())
                .collect();
            lines.push(row.join(" "));
        }
        for y in 0..m * p {
            let row: Vec<String> = dec
                .terms()
                .iter()
                .map(|t| t.b.entries()[y].to_string())
                .collect();
            lines.push(row.join(" "));
        }
        for i in 0..n {
            for k in 0..p {
                let row: Vec<String> = dec
                    .terms()
                    .iter()
                    .map(|t| t.c.at(k, i).to_string())
                    .collect();
                lines.push(row.join(" "));
            }
        }
        let parsed = parse_triple_matrix(&lines.join("\n")).unwrap();
        assert_eq!(parsed, dec);
    }

    #[test]
    fn restriction_round_trip() {
        let r = StructuredRestriction::from_blocks(
            Shape::of(6, 6, 6),
            &[(Shape::of(1, 1, 1), 117), (Shape::of(1, 1, 2), 18)],
        );
        let text = write_restriction(&r);
        let parsed = parse_restriction(&text).unwrap();
        assert_eq!(parsed.base, r.base);
        assert_eq!(parsed.blocks, r.blocks);
        assert_eq!(parsed.singletons, r.singletons);
    }

    #[test]
    fn matrix_round_trip() {
        let m = Matrix::from_i64s(2, 3, &[1, -2, 3, 0, 5, -6]).unwrap();
        let text = write_matrix(&m);
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_decomposition("").is_err());
        assert!(parse_decomposition("2 2 2 1 int\n1 0 0 1\n1 0 0 1\n").is_err());
        assert!(parse_decomposition("2 2 2 1 gf3\n1 0 0 1\n1 0 0 1\n1 0 0 1\n").is_err());
        assert!(parse_restriction("6 6\n").is_err());
        assert!(parse_matrix("2 2\n1 2 3").is_err());
    }
}
