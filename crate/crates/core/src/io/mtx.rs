use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{format_f64, read_text, write_text};
use crate::dof::{StiffnessMatrix, SYMMETRY_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<StiffnessMatrix> {
    let path = path.as_ref();
    parse_matrix_market(&read_text(path)?, path)
}

/// Parses a real Matrix Market file (`coordinate` or `array`, `general` or
/// `symmetric`). `path` only labels errors.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<StiffnessMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(
            hline,
            format!("expected '%%MatrixMarket matrix <layout> <field> <symmetry>', got '{header}'"),
        ));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(hline, format!("unsupported layout '{other}'"))),
    };
    if !matches!(words[3].as_str(), "real" | "double" | "integer") {
        return Err(err(hline, format!("unsupported field '{}', expected real", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (sline, size) = data.next().ok_or_else(|| err(hline, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| err(sline, format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(err(sline, format!("size line needs {want} integers, got '{size}'")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows != cols {
        return Err(err(sline, format!("matrix is {rows}x{cols}, not square")));
    }
    if rows == 0 {
        return Err(err(sline, "matrix is empty".into()));
    }
    let n = rows;

    let parse_value = |line: usize, t: &str| -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| err(line, format!("bad value '{t}'")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(line, format!("non-finite value '{t}'")))
        }
    };

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut origin: HashMap<(usize, usize), usize> = HashMap::new();
    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut count = 0;
            for (line, text) in data {
                let t: Vec<&str> = text.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(err(line, format!("expected 'row col value', got '{text}'")));
                }
                let index = |s: &str| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
                        _ => Err(err(line, format!("index '{s}' outside 1..={n}"))),
                    }
                };
                let (i, j) = (index(t[0])?, index(t[1])?);
                let v = parse_value(line, t[2])?;
                if symmetry == Symmetry::Symmetric && j > i {
                    return Err(err(
                        line,
                        format!("entry ({}, {}) above the diagonal in symmetric storage", i + 1, j + 1),
                    ));
                }
                if let Some(prev) = origin.insert((i, j), line) {
                    return Err(err(line, format!("entry ({}, {}) repeats line {prev}", i + 1, j + 1)));
                }
                a[(i, j)] = v;
                if symmetry == Symmetry::Symmetric {
                    a[(j, i)] = v;
                }
                count += 1;
            }
            if count != nnz {
                return Err(err(
                    sline,
                    format!("size line announces {nnz} entries, file has {count}"),
                ));
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle only
            let slots: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| {
                    let start = if symmetry == Symmetry::Symmetric { j } else { 0 };
                    (start..n).map(move |i| (i, j))
                })
                .collect();
            let mut count = 0;
            for (line, text) in data {
                for tok in text.split_whitespace() {
                    let &(i, j) = slots
                        .get(count)
                        .ok_or_else(|| err(line, format!("more than the {} values expected", slots.len())))?;
                    let v = parse_value(line, tok)?;
                    a[(i, j)] = v;
                    if symmetry == Symmetry::Symmetric {
                        a[(j, i)] = v;
                    } else {
                        origin.insert((i, j), line);
                    }
                    count += 1;
                }
            }
            if count != slots.len() {
                return Err(err(sline, format!("expected {} values, file has {count}", slots.len())));
            }
        }
    }

    if symmetry == Symmetry::General {
        let scale = a.amax();
        for j in 0..n {
            for i in j + 1..n {
                if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                    let line = origin
                        .get(&(j, i))
                        .or_else(|| origin.get(&(i, j)))
                        .copied()
                        .unwrap_or(sline);
                    return Err(err(
                        line,
                        format!(
                            "asymmetric entry ({}, {}) = {} vs ({}, {}) = {}",
                            j + 1,
                            i + 1,
                            a[(j, i)],
                            i + 1,
                            j + 1,
                            a[(i, j)]
                        ),
                    ));
                }
            }
        }
    }
    StiffnessMatrix::new(a).map_err(|e| err(sline, e.to_string()))
}

/// Symmetric coordinate format, lower triangle, non-zero entries only.
pub fn format_matrix_market(k: &StiffnessMatrix) -> String {
    let a = k.as_matrix();
    let n = k.n();
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|j| (j..n).map(move |i| (i, j)))
        .filter(|&(i, j)| a[(i, j)] != 0.0)
        .map(|(i, j)| (i, j, a[(i, j)]))
        .collect();
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(s, "{n} {n} {}", entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, format_f64(v));
    }
    s
}

pub fn write_matrix_market(k: &StiffnessMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &format_matrix_market(k))
}
