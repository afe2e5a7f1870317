//! Reading and writing matrices, synthetic inputs, and padding.

mod csv;
mod mtx;

pub use csv::{read_csv, write_csv};
pub use mtx::{read_matrix_market, write_matrix_market, LoadedMatrix};

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{NmfError, Result};
use crate::matrix::{mm_a_ht, DataMatrix, DenseMatrix, SparseMatrix};
use crate::rng::{stream, PortableRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    MatrixMarket,
    Csv,
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::MatrixMarket => "mtx",
            FileFormat::Csv => "csv",
        }
    }

    /// Guesses from the file extension, defaulting to Matrix Market.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::MatrixMarket,
        }
    }
}

impl FromStr for FileFormat {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtx" | "mm" | "matrixmarket" | "matrix-market" => Ok(FileFormat::MatrixMarket),
            "csv" => Ok(FileFormat::Csv),
            _ => Err(NmfError::invalid(format!("unknown format `{s}`"))),
        }
    }
}

/// Reads a Matrix Market or CSV file, chosen by extension.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    match FileFormat::for_path(path) {
        FileFormat::Csv => {
            let m = read_csv(path)?;
            Ok(LoadedMatrix {
                has_negative: !m.is_nonnegative(),
                matrix: DataMatrix::Dense(m),
            })
        }
        FileFormat::MatrixMarket => read_matrix_market(path),
    }
}

/// Writes `W` (`m x k`) and `H` (`k x n`) into `dir`, creating it if
/// needed, and returns the two paths.
pub fn write_factors(w: &DenseMatrix, h: &DenseMatrix, dir: impl AsRef<Path>, format: FileFormat) -> Result<[PathBuf; 2]> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| NmfError::io(dir, e))?;
    let wp = dir.join(format!("W.{}", format.extension()));
    let hp = dir.join(format!("H.{}", format.extension()));
    for (p, m) in [(&wp, w), (&hp, h)] {
        match format {
            FileFormat::Csv => write_csv(p, m)?,
            FileFormat::MatrixMarket => write_matrix_market(p, &DataMatrix::Dense(m.clone()))?,
        }
    }
    Ok([wp, hp])
}

/// `L R` with `L` (`m x r`) and `R` (`r x n`) uniform on `[0, 1)`.
pub fn gen_dense_lowrank(m: usize, n: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    let (left, right) = lowrank_factors(m, n, r, seed)?;
    mm_a_ht(&left, &right)
}

/// The two factors [`gen_dense_lowrank`] multiplies.
pub fn lowrank_factors(m: usize, n: usize, r: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    if m == 0 || n == 0 || r == 0 || r > m.min(n) {
        return Err(NmfError::invalid(format!("rank {r} is not in 1..=min({m}, {n})")));
    }
    let rng = PortableRng::new(seed);
    let left = DenseMatrix::from_fn(m, r, |i, l| rng.uniform(stream::LOWRANK_LEFT, i as u64, l as u64));
    let right = DenseMatrix::from_fn(r, n, |l, j| rng.uniform(stream::LOWRANK_RIGHT, l as u64, j as u64));
    Ok((left, right))
}

/// Each entry present independently with probability `density`, values
/// uniform on `(0, 1]`.
pub fn gen_sparse_uniform(m: usize, n: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(NmfError::invalid(format!("density {density} not in (0, 1]")));
    }
    if m == 0 || n == 0 {
        return Err(NmfError::invalid("dimensions must be at least 1"));
    }
    let rng = PortableRng::new(seed);
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    col_ptr.push(0);
    for j in 0..n as u64 {
        for i in 0..m as u64 {
            if rng.uniform(stream::SPARSE_PATTERN, i, j) < density {
                row_idx.push(i as usize);
                values.push(1.0 - rng.uniform(stream::SPARSE_VALUE, i, j));
            }
        }
        col_ptr.push(row_idx.len());
    }
    SparseMatrix::new(m, n, col_ptr, row_idx, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaddedMatrix {
    pub matrix: DataMatrix,
    pub original_rows: usize,
    pub original_cols: usize,
}

/// Appends zero rows and columns until `p` divides both dimensions.
pub fn pad_to_grid(m: &DataMatrix, p: usize) -> Result<PaddedMatrix> {
    if p == 0 {
        return Err(NmfError::invalid("p must be at least 1"));
    }
    let up = |x: usize| x.div_ceil(p) * p;
    let (r, c) = (m.rows(), m.cols());
    let matrix = if up(r) == r && up(c) == c { m.clone() } else { m.padded(up(r), up(c)) };
    Ok(PaddedMatrix {
        matrix,
        original_rows: r,
        original_cols: c,
    })
}
