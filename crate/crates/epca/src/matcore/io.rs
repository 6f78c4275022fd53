//! CSV (dense) and MatrixMarket coordinate (sparse) readers and writers.
//! Values are written in the shortest form that parses back to the same
//! f64, so write-then-read round-trips are bit exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DenseMatrix, SparseMatrix};
use crate::error::{Error, Result};

pub fn read_csv(path: &Path, has_header: bool) -> Result<DenseMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 && has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("{tok:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::DegenerateInput("empty CSV".into()));
    }
    let cols = rows[0].len();
    DenseMatrix::new(rows.len(), cols, rows.into_iter().flatten().collect())
}

pub fn write_csv(path: &Path, m: &DenseMatrix, header: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        let names: Vec<String> = (1..=m.ncols()).map(|j| format!("c{j}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    for i in 0..m.nrows() {
        let fields: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// MatrixMarket coordinate format, 1-based indices. `real general`,
/// `real symmetric`, and `pattern` variants are accepted on read.
pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| Error::DegenerateInput("empty MatrixMarket file".into()))?;
    let first = first?;
    let header: Vec<String> = first.split_whitespace().map(|s| s.to_lowercase()).collect();
    if header.len() < 4 || header[0] != "%%matrixmarket" || header[1] != "matrix" {
        return Err(Error::Parse {
            line: first_no + 1,
            message: "expected '%%MatrixMarket matrix coordinate ...' banner".into(),
        });
    }
    if header[2] != "coordinate" {
        return Err(Error::Parse {
            line: first_no + 1,
            message: format!("unsupported format {:?}", header[2]),
        });
    }
    let pattern = header[3] == "pattern";
    let symmetric = header.get(4).is_some_and(|s| s == "symmetric");

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut stored = 0usize;
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_usize = |tok: &str| {
            tok.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("{tok:?}: {e}"),
            })
        };
        if dims.is_none() {
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected 'rows cols nnz'".into(),
                });
            }
            dims = Some((parse_usize(toks[0])?, parse_usize(toks[1])?, parse_usize(toks[2])?));
            continue;
        }
        let expected = if pattern { 2 } else { 3 };
        if toks.len() != expected {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {expected} fields, found {}", toks.len()),
            });
        }
        let i = parse_usize(toks[0])?;
        let j = parse_usize(toks[1])?;
        if i == 0 || j == 0 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "MatrixMarket indices are 1-based".into(),
            });
        }
        let v = if pattern {
            1.0
        } else {
            toks[2].parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("{:?}: {e}", toks[2]),
            })?
        };
        stored += 1;
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    let (rows, cols, nnz) = dims.ok_or_else(|| Error::DegenerateInput("missing size line".into()))?;
    if stored != nnz {
        return Err(Error::DegenerateInput(format!(
            "declared {nnz} entries, found {stored}"
        )));
    }
    SparseMatrix::new(rows, cols, triplets)
}

pub fn write_matrix_market(path: &Path, m: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for &(i, j, v) in m.triplets() {
        writeln!(w, "{} {} {v}", i + 1, j + 1)?;
    }
    w.flush()?;
    Ok(())
}
