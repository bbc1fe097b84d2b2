//! Matrix Market reading and writing for dense real matrices.
//!
//! Reads `array` and `coordinate` files with `real` or `integer` fields and
//! `general`, `symmetric` or `skew-symmetric` layout. Coordinate files are
//! densified with duplicate entries summed. Writes `array real general`
//! with 17 significant digits, which round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::densecore::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is neither blank nor a comment.
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.number, t.to_string())));
        }
        Ok(None)
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry)> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if words[1] != "matrix" {
        return Err(parse_err(1, format!("unsupported object '{}'", words[1])));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(parse_err(1, format!("unknown format '{other}'"))),
    };
    match words[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" => return Err(parse_err(1, "complex unsupported")),
        "pattern" => return Err(parse_err(1, "pattern unsupported")),
        other => return Err(parse_err(1, format!("unknown field '{other}'"))),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        "hermitian" => return Err(parse_err(1, "hermitian unsupported")),
        other => return Err(parse_err(1, format!("unknown symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_dims(line: &str, number: usize, count: usize) -> Result<Vec<usize>> {
    let dims: Vec<usize> = line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(number, format!("invalid size line '{line}'")))?;
    if dims.len() != count {
        return Err(parse_err(number, format!("size line needs {count} integers")));
    }
    if dims[0] == 0 || dims[1] == 0 {
        return Err(parse_err(number, "matrix dimensions must be positive"));
    }
    Ok(dims)
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<Matrix> {
    let mut raw = reader.lines();
    let header = match raw.next() {
        Some(line) => line?,
        None => return Err(parse_err(1, "empty file")),
    };
    let (layout, symmetry) = parse_header(header.trim())?;
    let mut lines = Lines { inner: raw, number: 1 };
    let (size_no, size_line) = lines
        .next_data()?
        .ok_or_else(|| parse_err(lines.number + 1, "missing size line"))?;
    let (rows, cols, mut a, expected) = match layout {
        Layout::Array => {
            let d = parse_dims(&size_line, size_no, 2)?;
            let (r, c) = (d[0], d[1]);
            let expected = match symmetry {
                Symmetry::General => r * c,
                _ if r != c => return Err(parse_err(size_no, "symmetric layout needs a square matrix")),
                Symmetry::Symmetric => r * (r + 1) / 2,
                Symmetry::Skew => r * (r - 1) / 2,
            };
            (r, c, Matrix::zeros(r, c), expected)
        }
        Layout::Coordinate => {
            let d = parse_dims(&size_line, size_no, 3)?;
            if symmetry != Symmetry::General && d[0] != d[1] {
                return Err(parse_err(size_no, "symmetric layout needs a square matrix"));
            }
            (d[0], d[1], Matrix::zeros(d[0], d[1]), d[2])
        }
    };

    // array order: column-major over the stored part
    let mut array_pos = (0usize, 0usize);
    let first_row = |j: usize| match symmetry {
        Symmetry::General => 0,
        Symmetry::Symmetric => j,
        Symmetry::Skew => j + 1,
    };
    if layout == Layout::Array {
        array_pos = (first_row(0), 0);
    }

    let mut seen = 0usize;
    while let Some((no, line)) = lines.next_data()? {
        if seen == expected {
            return Err(parse_err(no, format!("more than {expected} entries")));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (i, j, v) = match layout {
            Layout::Array => {
                if toks.len() != 1 {
                    return Err(parse_err(no, "array entries hold one value per line"));
                }
                let (i, j) = array_pos;
                let mut next = (i + 1, j);
                if next.0 >= rows {
                    next = (first_row(j + 1), j + 1);
                }
                array_pos = next;
                (i, j, parse_value(toks[0], no)?)
            }
            Layout::Coordinate => {
                if toks.len() != 3 {
                    return Err(parse_err(no, "coordinate entries need 'row col value'"));
                }
                let idx = |t: &str, bound: usize| -> Result<usize> {
                    match t.parse::<usize>() {
                        Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                        _ => Err(parse_err(no, format!("index '{t}' out of range 1..={bound}"))),
                    }
                };
                (idx(toks[0], rows)?, idx(toks[1], cols)?, parse_value(toks[2], no)?)
            }
        };
        // array entries are unique, so assign them (keeps the sign of zero);
        // coordinate duplicates are summed
        let put = |a: &mut Matrix, i: usize, j: usize, v: f64| {
            if layout == Layout::Array {
                a[(i, j)] = v;
            } else {
                a[(i, j)] += v;
            }
        };
        put(&mut a, i, j, v);
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => put(&mut a, j, i, v),
                Symmetry::Skew => put(&mut a, j, i, -v),
            }
        } else if symmetry == Symmetry::Skew {
            return Err(parse_err(no, "skew-symmetric files cannot store diagonal entries"));
        }
        seen += 1;
    }
    if seen != expected {
        return Err(parse_err(
            lines.number + 1,
            format!("expected {expected} entries, found {seen}"),
        ));
    }
    if !a.is_finite() {
        return Err(parse_err(lines.number, "summed entries overflow"));
    }
    Ok(a)
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

pub fn write_matrix_market<W: Write>(mut w: W, a: &Matrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:.16e}", a[(i, j)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn mm_write(path: impl AsRef<Path>, a: &Matrix) -> Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), a)
}

/// Writes the non-zeros in `coordinate real general` form.
pub fn write_matrix_market_coordinate<W: Write>(mut w: W, a: &Matrix) -> Result<()> {
    let nnz = a.as_slice().iter().filter(|&&v| v != 0.0).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), nnz)?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let v = a[(i, j)];
            if v != 0.0 {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
