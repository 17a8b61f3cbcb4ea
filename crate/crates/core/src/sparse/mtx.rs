//! Coordinate-format Matrix Market exchange (real, 1-based indices).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::{Error, Result};

/// Writes `a` in coordinate form. With `symmetric` only the lower triangle is
/// written and the header carries the `symmetric` marker.
pub fn write_matrix_market<W: Write>(mut w: W, a: &CsrMatrix, symmetric: bool) -> Result<()> {
    if symmetric && !a.is_square() {
        return Err(Error::InvalidMatrix("symmetric marker on a rectangular matrix".into()));
    }
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let stored = if symmetric { a.lower_triangle() } else { a.clone() };
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), stored.nnz())?;
    for i in 0..stored.n_rows() {
        let (c, v) = stored.row(i);
        for (&j, &x) in c.iter().zip(v) {
            writeln!(w, "{} {} {:.17e}", i + 1, j + 1, x)?;
        }
    }
    Ok(())
}

/// Reads a coordinate-format matrix; `symmetric` files are mirrored.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse { line: 1, msg: "missing MatrixMarket header".into() });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Unsupported(format!("{} storage", fields[2])));
    }
    if !matches!(fields[3], "real" | "integer") {
        return Err(Error::Unsupported(format!("{} fields", fields[3])));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Unsupported(format!("{other} symmetry"))),
    };

    let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.into() };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(parse_err(ln, "size line needs three integers"));
                }
                let v: Vec<usize> = tok
                    .iter()
                    .map(|s| s.parse().map_err(|_| parse_err(ln, "bad integer")))
                    .collect::<Result<_>>()?;
                size = Some((v[0], v[1], v[2]));
                triplets.reserve(if symmetric { 2 * v[2] } else { v[2] });
            }
            Some((m, n, _)) => {
                if tok.len() != 3 {
                    return Err(parse_err(ln, "entry needs row, column and value"));
                }
                let i: usize = tok[0].parse().map_err(|_| parse_err(ln, "bad row index"))?;
                let j: usize = tok[1].parse().map_err(|_| parse_err(ln, "bad column index"))?;
                let v: f64 = tok[2].parse().map_err(|_| parse_err(ln, "bad value"))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(ln, "index out of range"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or(Error::Parse { line: 1, msg: "missing size line".into() })?;
    let entries = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if entries != nnz {
        return Err(Error::Parse {
            line: 2,
            msg: format!("expected {nnz} entries, found {entries}"),
        });
    }
    CsrMatrix::from_triplets(m, n, &triplets)
}

pub fn save_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix, symmetric: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(&mut w, a, symmetric)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}
