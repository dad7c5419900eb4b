//! Sparse-recovery laboratory: Orthogonal Matching Pursuit, exact restricted
//! isometry constants, and checkers for the sharp support-recovery condition
//! `δ_{K+1} < 1/√(K+1)` with `min_{i∈Ω}|x_i| > 2ε/(1 − √(K+1)·δ_{K+1})`.
//!
//! Module map:
//!
//! * [`linalg`]: dense kernels (Householder least squares, projections,
//!   Jacobi eigenvalues).
//! * [`sensing`]: instance generation for `y = Ax + v`.
//! * [`rip`]: exact RIC enumeration and the condition checks.
//! * [`omp`]: the solver with its trace and proof diagnostics.
//! * [`experiments`]: seeded Monte Carlo harnesses and the sharpness probe.
//! * [`io`]: text file formats shared by the CLI.

pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod omp;
pub mod rip;
pub mod sensing;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use omp::{omp_run, OmpResult, StopReason, StopRule};
pub use rip::{exact_ric, ConditionVerdict, RicReport};
pub use sensing::{ProblemInstance, SparseSignal};
