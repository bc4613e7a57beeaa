//! Matrix Market (coordinate, real) and plain-text coordinate files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, MatrixMarketError, Result};
use crate::sparse::SparseMatrix;

/// Parses Matrix Market text. Symmetric files are expanded to the full
/// pattern; the result is flagged symmetric whenever it is exactly so.
pub fn parse_matrix_market(text: &str) -> std::result::Result<SparseMatrix, MatrixMarketError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (hline, header) = lines.next().ok_or(MatrixMarketError::Header {
        line: 1,
        reason: "empty file".into(),
    })?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let bad_header = |reason: &str| MatrixMarketError::Header {
        line: hline,
        reason: reason.into(),
    };
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(bad_header("expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(bad_header("only `matrix coordinate` objects are supported"));
    }
    if tokens[3] != "real" {
        return Err(MatrixMarketError::Field {
            line: hline,
            field: tokens[3].clone(),
        });
    }
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(bad_header(&format!("unsupported symmetry `{other}`"))),
    };

    let mut content = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = content.next().ok_or(MatrixMarketError::Size { line: hline + 1 })?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| MatrixMarketError::Size { line: sline })?;
    let [n_rows, n_cols, nnz] = dims[..] else {
        return Err(MatrixMarketError::Size { line: sline });
    };
    if symmetric && n_rows != n_cols {
        return Err(MatrixMarketError::Size { line: sline });
    }

    let mut trip = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut found = 0;
    for (line, l) in content {
        let mut it = l.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(MatrixMarketError::Entry { line });
        };
        let (Ok(i), Ok(j), Ok(v)) = (i.parse::<usize>(), j.parse::<usize>(), v.parse::<f64>())
        else {
            return Err(MatrixMarketError::Entry { line });
        };
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(MatrixMarketError::IndexOutOfBounds {
                line,
                row: i,
                col: j,
                n_rows,
                n_cols,
            });
        }
        found += 1;
        trip.push((i - 1, j - 1, v));
        if symmetric && i != j {
            trip.push((j - 1, i - 1, v));
        }
    }
    if found != nnz {
        return Err(MatrixMarketError::EntryCount {
            expected: nnz,
            found,
        });
    }
    let m = SparseMatrix::from_triplets(n_rows, n_cols, &trip).map_err(|e| {
        MatrixMarketError::Header {
            line: hline,
            reason: e.to_string(),
        }
    })?;
    Ok(if m.is_bitwise_symmetric() {
        m.into_symmetric().expect("checked symmetric")
    } else {
        m
    })
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text).map_err(|source| Error::MatrixMarket {
        path: path.to_path_buf(),
        source,
    })
}

/// Formats a matrix; symmetric matrices store their lower triangle only.
/// Values are written with the shortest representation that reads back to
/// the same bits.
pub fn format_matrix_market(a: &SparseMatrix) -> String {
    let sym = a.is_symmetric();
    let entries: Vec<(usize, usize, f64)> = (0..a.n_rows())
        .flat_map(|i| a.row(i).map(move |(j, v)| (i, j, v)))
        .filter(|&(i, j, _)| !sym || j <= i)
        .collect();
    let mut out = String::new();
    let kind = if sym { "symmetric" } else { "general" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(a)).map_err(|e| Error::io(path, e))
}

/// Reads exactly `n_nodes` lines of `x y z`; blank lines are ignored.
pub fn read_coordinates(path: impl AsRef<Path>, n_nodes: usize) -> Result<Vec<[f64; 3]>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, reason: String| Error::Coordinates {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut out = Vec::with_capacity(n_nodes);
    for (k, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(k + 1, format!("{e}")))?;
        let [x, y, z] = vals[..] else {
            return Err(err(k + 1, format!("expected 3 values, found {}", vals.len())));
        };
        out.push([x, y, z]);
    }
    if out.len() != n_nodes {
        return Err(err(
            text.lines().count(),
            format!("expected {n_nodes} nodes, found {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn write_coordinates(path: impl AsRef<Path>, coords: &[[f64; 3]]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(coords.len() * 40);
    for c in coords {
        let _ = writeln!(out, "{:e} {:e} {:e}", c[0], c[1], c[2]);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Number of lines that are neither blank nor comments; handy for sizing a
/// coordinate file before reading it.
pub fn count_data_lines(path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
        .count())
}
