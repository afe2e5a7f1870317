//! Alternating-updating nonnegative matrix factorization (AU-NMF).
//!
//! The crate provides the shared matrix kernels, three local update
//! computations (multiplicative update, HALS, block principal pivoting), a
//! sequential driver, an in-process SPMD communicator with instrumented
//! collectives, the naive 1D and communication-optimal 2D parallel schemes,
//! an alpha-beta-gamma cost model, and matrix I/O plus synthetic generators.

pub mod comm;
pub mod cost;
pub mod dist;
pub mod error;
pub mod io;
pub mod matrix;
pub mod nls;
pub mod rng;
pub mod seq;
pub mod trace;

pub use error::{NmfError, Result};
pub use matrix::{DataMatrix, DenseMatrix, GramMatrix, SparseMatrix};
pub use nls::Algorithm;
pub use seq::{aunmf_run, NmfConfig, NmfRun};
pub use trace::{Breakdown, IterationTrace};
