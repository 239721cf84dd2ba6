use crate::scalar::ComplexScalar;
use ndarray::Array2;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatrixMarketError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: unsupported matrix type: {0}", .reason)]
    Unsupported { path: String, reason: String },
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

/// Read a Matrix Market file (dense `array` or sparse `coordinate`,
/// real/integer/complex, any symmetry) into a dense matrix.
pub fn read_matrix_market<C: ComplexScalar>(path: &Path) -> Result<Array2<C>, MatrixMarketError> {
    let display = path.display().to_string();
    let io_err = |source| MatrixMarketError::Io {
        path: display.clone(),
        source,
    };
    let bad = |line: usize, reason: String| MatrixMarketError::Malformed {
        path: display.clone(),
        line,
        reason,
    };

    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut lines = reader.lines().enumerate();

    let (_, banner) = lines
        .next()
        .ok_or_else(|| bad(1, "empty file".into()))
        .and_then(|(i, r)| r.map(|l| (i, l)).map_err(io_err))?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad(1, format!("not a MatrixMarket banner: {banner}")));
    }
    let format = match tokens[2].as_str() {
        "array" => Format::Array,
        "coordinate" => Format::Coordinate,
        other => {
            return Err(MatrixMarketError::Unsupported {
                path: display,
                reason: format!("format {other}"),
            })
        }
    };
    let field = match tokens[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        other => {
            return Err(MatrixMarketError::Unsupported {
                path: display,
                reason: format!("field {other}"),
            })
        }
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => {
            return Err(MatrixMarketError::Unsupported {
                path: display,
                reason: format!("symmetry {other}"),
            })
        }
    };

    // size line: first non-comment line after the banner
    let mut size_line = None;
    for (i, line) in lines.by_ref() {
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((i + 1, trimmed.to_string()));
        break;
    }
    let (size_no, size_line) = size_line.ok_or_else(|| bad(0, "missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(size_no, format!("bad size line: {e}")))?;
    let expected_sizes = if format == Format::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(bad(size_no, format!("expected {expected_sizes} size fields")));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    let mut out = Array2::<C>::zeros((rows, cols));

    let parse_value = |parts: &[&str], line_no: usize| -> Result<C, MatrixMarketError> {
        match field {
            Field::Real | Field::Integer => {
                if parts.len() != 1 {
                    return Err(bad(line_no, "expected one value".into()));
                }
                let v: f64 = parts[0]
                    .parse()
                    .map_err(|e| bad(line_no, format!("bad value: {e}")))?;
                Ok(C::complex(v, 0.0))
            }
            Field::Complex => {
                if parts.len() != 2 {
                    return Err(bad(line_no, "expected re and im".into()));
                }
                let re: f64 = parts[0]
                    .parse()
                    .map_err(|e| bad(line_no, format!("bad re: {e}")))?;
                let im: f64 = parts[1]
                    .parse()
                    .map_err(|e| bad(line_no, format!("bad im: {e}")))?;
                Ok(C::complex(re, im))
            }
        }
    };

    let mirror = |out: &mut Array2<C>, i: usize, j: usize, v: C| {
        if i != j {
            out[(j, i)] = match symmetry {
                Symmetry::General => return,
                Symmetry::Symmetric => v,
                Symmetry::SkewSymmetric => -v,
                Symmetry::Hermitian => v.conj(),
            };
        }
    };

    match format {
        Format::Coordinate => {
            let nnz = sizes[2];
            let mut seen = 0usize;
            for (i, line) in lines {
                let line = line.map_err(io_err)?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let line_no = i + 1;
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                if parts.len() < 3 {
                    return Err(bad(line_no, "expected: row col value".into()));
                }
                let r: usize = parts[0]
                    .parse()
                    .map_err(|e| bad(line_no, format!("bad row: {e}")))?;
                let c: usize = parts[1]
                    .parse()
                    .map_err(|e| bad(line_no, format!("bad col: {e}")))?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(bad(line_no, format!("index ({r}, {c}) out of bounds")));
                }
                let v = parse_value(&parts[2..], line_no)?;
                out[(r - 1, c - 1)] = v;
                mirror(&mut out, r - 1, c - 1, v);
                seen += 1;
            }
            if seen != nnz {
                return Err(bad(size_no, format!("expected {nnz} entries, found {seen}")));
            }
        }
        Format::Array => {
            // column-major scan; symmetric variants store the lower triangle
            let mut coords: Vec<(usize, usize)> = Vec::new();
            for j in 0..cols {
                for i in 0..rows {
                    if symmetry == Symmetry::General || i >= j {
                        coords.push((i, j));
                    }
                }
            }
            let mut next = 0usize;
            for (i, line) in lines {
                let line = line.map_err(io_err)?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let line_no = i + 1;
                if next >= coords.len() {
                    return Err(bad(line_no, "more values than matrix entries".into()));
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                let v = parse_value(&parts, line_no)?;
                let (r, c) = coords[next];
                out[(r, c)] = v;
                mirror(&mut out, r, c, v);
                next += 1;
            }
            if next != coords.len() {
                return Err(bad(
                    0,
                    format!("expected {} values, found {next}", coords.len()),
                ));
            }
        }
    }

    Ok(out)
}
