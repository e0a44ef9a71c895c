//! Matrix Market (coordinate and array) and headerless CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CurError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    MarketCoordinate,
    MarketArray,
    Csv,
}

impl MatrixFormat {
    /// Guess from the file extension; anything but `.csv` is treated as
    /// Matrix Market array.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::MarketArray,
        }
    }
}

/// Reads a matrix file, returning the matrix and the detected format.
pub fn read_matrix(path: &Path) -> Result<(DenseMatrix, MatrixFormat)> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text)
}

/// Writes `a` in `format`.
pub fn write_matrix(path: &Path, a: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    fs::write(path, format_matrix(a, format))?;
    Ok(())
}

pub fn parse_matrix(text: &str) -> Result<(DenseMatrix, MatrixFormat)> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_market(text)
    } else {
        Ok((parse_csv(text)?, MatrixFormat::Csv))
    }
}

pub fn format_matrix(a: &DenseMatrix, format: MatrixFormat) -> String {
    let mut out = String::new();
    match format {
        MatrixFormat::Csv => {
            for i in 0..a.rows() {
                for j in 0..a.cols() {
                    if j > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{:.16e}", a[(i, j)]);
                }
                out.push('\n');
            }
        }
        MatrixFormat::MarketArray => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(out, "{} {}", a.rows(), a.cols());
            for x in a.as_slice() {
                let _ = writeln!(out, "{x:.16e}");
            }
        }
        MatrixFormat::MarketCoordinate => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            let nnz = a.as_slice().iter().filter(|x| **x != 0.0).count();
            let _ = writeln!(out, "{} {} {}", a.rows(), a.cols(), nnz);
            for j in 0..a.cols() {
                for (i, x) in a.col(j).iter().enumerate() {
                    if *x != 0.0 {
                        let _ = writeln!(out, "{} {} {x:.16e}", i + 1, j + 1);
                    }
                }
            }
        }
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> CurError {
    CurError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: '{tok}'")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(x)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("not a non-negative integer: '{tok}'")))
}

#[derive(PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_market(text: &str) -> Result<(DenseMatrix, MatrixFormat)> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
    let (_, header) = lines.next().expect("caller checked the banner");
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[1] != "matrix" {
        return Err(parse_err(1, "malformed Matrix Market banner"));
    }
    let format = match fields[2].as_str() {
        "coordinate" => MatrixFormat::MarketCoordinate,
        "array" => MatrixFormat::MarketArray,
        other => return Err(parse_err(1, format!("unsupported storage '{other}'"))),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let sym = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| parse_usize(t, size_line))
        .collect::<Result<_>>()?;
    let (m, n) = match (format, dims.as_slice()) {
        (MatrixFormat::MarketArray, [m, n]) => (*m, *n),
        (MatrixFormat::MarketCoordinate, [m, n, _]) => (*m, *n),
        _ => return Err(parse_err(size_line, "bad size line")),
    };
    if sym != Symmetry::General && m != n {
        return Err(parse_err(
            size_line,
            "symmetric storage needs a square matrix",
        ));
    }
    let mut a = DenseMatrix::zeros(m, n);

    match format {
        MatrixFormat::MarketArray => {
            // Column-major; symmetric storage lists the lower triangle only.
            let mut slots = Vec::new();
            for j in 0..n {
                let start = match sym {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                slots.extend((start..m).map(|i| (i, j)));
            }
            let mut values = Vec::with_capacity(slots.len());
            for (ln, l) in body {
                for tok in l.split_whitespace() {
                    values.push((parse_num(tok, ln)?, ln));
                }
            }
            if values.len() != slots.len() {
                return Err(parse_err(
                    size_line,
                    format!("expected {} values, found {}", slots.len(), values.len()),
                ));
            }
            for ((i, j), (x, _)) in slots.into_iter().zip(values) {
                place(&mut a, i, j, x, &sym);
            }
        }
        MatrixFormat::MarketCoordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (ln, l) in body {
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(ln, "expected 'row col value'"));
                }
                let i = parse_usize(toks[0], ln)?;
                let j = parse_usize(toks[1], ln)?;
                if i == 0 || i > m || j == 0 || j > n {
                    return Err(parse_err(ln, format!("entry ({i}, {j}) outside {m}x{n}")));
                }
                place(&mut a, i - 1, j - 1, parse_num(toks[2], ln)?, &sym);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(
                    size_line,
                    format!("expected {nnz} entries, found {seen}"),
                ));
            }
        }
        MatrixFormat::Csv => unreachable!(),
    }
    Ok((a, format))
}

fn place(a: &mut DenseMatrix, i: usize, j: usize, x: f64, sym: &Symmetry) {
    a[(i, j)] = x;
    if i != j {
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => a[(j, i)] = x,
            Symmetry::Skew => a[(j, i)] = -x,
        }
    }
}

fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_num(t.trim(), n + 1))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    n + 1,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "empty matrix"));
    }
    DenseMatrix::from_rows(&rows)
}
