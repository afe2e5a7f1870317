//! Dense CSV layout: a `rows,cols` header line, the two dimensions on the
//! next line, then every value in column-major order, one per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::matrix::DenseMatrix;

pub fn write_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut s = format!("rows,cols\n{},{}\n", m.rows(), m.cols());
    for v in m.values() {
        let _ = writeln!(s, "{v:.16e}");
    }
    fs::write(path, s).map_err(|e| NmfError::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NmfError::io(path, e))?;
    let err = |line: usize, message: String| NmfError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h.replace(' ', "").eq_ignore_ascii_case("rows,cols") => {}
        Some((ln, h)) => return Err(err(ln, format!("expected header `rows,cols`, found `{h}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let (ln, dims) = lines.next().ok_or_else(|| err(2, "missing dimensions".into()))?;
    let parsed: Vec<usize> = dims
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| err(ln, format!("bad dimension `{t}`"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = parsed[..] else {
        return Err(err(ln, "expected `rows,cols`".into()));
    };
    let mut values = Vec::with_capacity(rows * cols);
    let mut last = ln;
    for (ln, l) in lines {
        last = ln;
        if values.len() == rows * cols {
            return Err(err(ln, "more values than rows x cols".into()));
        }
        let v: f64 = l.parse().map_err(|_| err(ln, format!("bad value `{l}`")))?;
        values.push(v);
    }
    if values.len() != rows * cols {
        return Err(err(last + 1, format!("expected {} values, found {}", rows * cols, values.len())));
    }
    DenseMatrix::new(rows, cols, values).map_err(|e| err(ln, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::PortableRng;

    #[test]
    fn round_trip_bitwise() {
        let rng = PortableRng::new(8);
        let m = DenseMatrix::from_fn(7, 3, |i, j| rng.uniform(1, i as u64, j as u64) / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_csv(&p, &m).unwrap();
        assert_eq!(read_csv(&p).unwrap(), m);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("rows,cols\n7,3\n"));
    }

    #[test]
    fn short_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "rows,cols\n2,2\n1\n2\n3\n").unwrap();
        assert!(matches!(read_csv(&p), Err(NmfError::Parse { line: 6, .. })));
        fs::write(&p, "a,b\n").unwrap();
        assert!(matches!(read_csv(&p), Err(NmfError::Parse { line: 1, .. })));
    }
}
