//! Matrix Market exchange format: coordinate and array layouts with real,
//! integer or pattern fields and general or symmetric storage.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::matrix::{DataMatrix, DenseMatrix, SparseMatrix};

/// A matrix read from disk plus what the reader noticed about it.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedMatrix {
    pub matrix: DataMatrix,
    /// Some entry was negative, which factorization will reject.
    pub has_negative: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NmfError::io(path, e))?;
    parse_matrix_market(&text, path)
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<LoadedMatrix> {
    let err = |line: usize, message: String| NmfError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(hl, format!("bad header `{header}`")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(hl, format!("unsupported layout `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(err(hl, format!("unsupported field `{other}`"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(hl, format!("unsupported symmetry `{other}`"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sl, size_line) = data.next().ok_or_else(|| err(hl, "missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| err(sl, format!("bad size `{t}`"))))
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if sizes.len() != want {
        return Err(err(sl, format!("expected {want} sizes, found {}", sizes.len())));
    }
    let (m, n) = (sizes[0], sizes[1]);
    if m == 0 || n == 0 {
        return Err(err(sl, "dimensions must be positive".into()));
    }
    if symmetric && m != n {
        return Err(err(sl, "symmetric matrix must be square".into()));
    }
    let parse_value = |line: usize, t: &str| -> Result<f64> {
        let v = match field {
            Field::Integer => t.parse::<i64>().map(|v| v as f64).map_err(|_| ()),
            _ => t.parse::<f64>().map_err(|_| ()),
        };
        match v {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err(line, format!("bad value `{t}`"))),
        }
    };
    let mut last_line = sl;
    let mut has_negative = false;

    let matrix = match layout {
        Layout::Coordinate => {
            let nnz = sizes[2];
            let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
            for _ in 0..nnz {
                let (ln, l) = data
                    .next()
                    .ok_or_else(|| err(last_line + 1, format!("expected {nnz} entries")))?;
                last_line = ln;
                let t: Vec<&str> = l.split_whitespace().collect();
                let need = if field == Field::Pattern { 2 } else { 3 };
                if t.len() != need {
                    return Err(err(ln, format!("expected {need} fields, found {}", t.len())));
                }
                let idx = |s: &str, max: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(v) if v >= 1 && v <= max => Ok(v - 1),
                        _ => Err(err(ln, format!("index `{s}` outside 1..={max}"))),
                    }
                };
                let (i, j) = (idx(t[0], m)?, idx(t[1], n)?);
                let v = if field == Field::Pattern { 1.0 } else { parse_value(ln, t[2])? };
                has_negative |= v < 0.0;
                if symmetric && i < j {
                    return Err(err(ln, "symmetric storage lists only the lower triangle".into()));
                }
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
            DataMatrix::Sparse(SparseMatrix::from_triplets(m, n, &triplets)?)
        }
        Layout::Array => {
            let mut out = DenseMatrix::zeros(m, n);
            for j in 0..n {
                let first = if symmetric { j } else { 0 };
                for i in first..m {
                    let (ln, l) = data
                        .next()
                        .ok_or_else(|| err(last_line + 1, "too few array entries".into()))?;
                    last_line = ln;
                    let t: Vec<&str> = l.split_whitespace().collect();
                    if t.len() != 1 {
                        return Err(err(ln, format!("expected 1 value, found {}", t.len())));
                    }
                    let v = parse_value(ln, t[0])?;
                    has_negative |= v < 0.0;
                    out.set(i, j, v);
                    if symmetric {
                        out.set(j, i, v);
                    }
                }
            }
            DataMatrix::Dense(out)
        }
    };
    if let Some((ln, _)) = data.next() {
        return Err(err(ln, "unexpected trailing data".into()));
    }
    Ok(LoadedMatrix { matrix, has_negative })
}

/// Sparse matrices go out in coordinate layout, dense ones in array layout,
/// with 17 significant digits so every value reads back bitwise.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &DataMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(m)).map_err(|e| NmfError::io(path, e))
}

fn format_matrix_market(m: &DataMatrix) -> String {
    let mut s = String::new();
    match m {
        DataMatrix::Sparse(sp) => {
            s.push_str("%%MatrixMarket matrix coordinate real general\n");
            let _ = writeln!(s, "{} {} {}", sp.rows(), sp.cols(), sp.nnz());
            for j in 0..sp.cols() {
                let (rows, vals) = sp.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
                }
            }
        }
        DataMatrix::Dense(d) => {
            s.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(s, "{} {}", d.rows(), d.cols());
            for v in d.values() {
                let _ = writeln!(s, "{v:.16e}");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::PortableRng;

    fn parse(text: &str) -> Result<LoadedMatrix> {
        parse_matrix_market(text, Path::new("test.mtx"))
    }

    #[test]
    fn coordinate_diagonal() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 3\n2 2 4\n").unwrap();
        assert_eq!(m.matrix.to_dense(), DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 4.0]]).unwrap());
        assert!(m.matrix.is_sparse());
        assert!(!m.has_negative);
    }

    #[test]
    fn array_is_column_major() {
        let m = parse("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m.matrix, DataMatrix::Dense(DenseMatrix::from_rows(&[[1.0, 3.0], [2.0, 4.0]]).unwrap()));
    }

    #[test]
    fn pattern_duplicates_and_symmetry() {
        let m = parse("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 3\n2 1\n2 1\n3 3\n").unwrap();
        let d = m.matrix.to_dense();
        assert_eq!(d.get(1, 0), 2.0);
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(2, 2), 1.0);
        let m = parse("%%MatrixMarket matrix array integer symmetric\n2 2\n1\n-2\n3\n").unwrap();
        assert_eq!(m.matrix.to_dense(), DenseMatrix::from_rows(&[[1.0, -2.0], [-2.0, 3.0]]).unwrap());
        assert!(m.has_negative);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line_of = |text: &str| match parse(text) {
            Err(NmfError::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line_of("%%MatrixMarket matrix sideways real general\n"), 1);
        assert_eq!(line_of("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), 3);
        assert_eq!(line_of("%%MatrixMarket matrix coordinate real general\n%x\n2 2 2\n1 1 abc\n"), 4);
        assert_eq!(line_of("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"), 4);
        assert_eq!(line_of("%%MatrixMarket matrix array real general\n1 1\n1\n2\n"), 4);
        assert_eq!(line_of("garbage\n"), 1);
    }

    #[test]
    fn sparse_round_trip() {
        let rng = PortableRng::new(21);
        let mut trips = Vec::new();
        for i in 0..20 {
            for j in 0..10 {
                if rng.uniform(1, i, j) < 0.2 {
                    trips.push((i as usize, j as usize, rng.uniform(2, i, j) * 1e3 + 1e-7));
                }
            }
        }
        let sp = SparseMatrix::from_triplets(20, 10, &trips).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market(&path, &DataMatrix::Sparse(sp.clone())).unwrap();
        let back = read_matrix_market(&path).unwrap().matrix;
        let DataMatrix::Sparse(back) = back else { panic!("expected sparse") };
        assert_eq!(back.nnz(), sp.nnz());
        assert_eq!(back.row_idx(), sp.row_idx());
        assert_eq!(back.col_ptr(), sp.col_ptr());
        assert_eq!(back.values(), sp.values());
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_matrix_market("/nonexistent/x.mtx").unwrap_err();
        assert!(e.to_string().contains("/nonexistent/x.mtx"));
    }
}
