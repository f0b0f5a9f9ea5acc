//! Exact toolkit for odd continued fractions (OCF).
//!
//! The crate provides arbitrary-precision arithmetic in real quadratic
//! fields, OCF/RCF/grotesque expansions with periodic-point detection,
//! the matrix parametrization of purely periodic points by words of
//! building blocks, enumeration and lattice-point counting of the matrix
//! sets behind desk-scale counting experiments, elementary analytic
//! estimates (totient sums, Kloosterman sums, modular hyperbolas,
//! invariant-measure masses) and equidistribution reports.
//!
//! All predicates on exact values (comparisons, floors, branch selection,
//! interval membership) are integer computations; floating point is used
//! only for reported lengths, main terms and residuals.

pub mod analytic;
pub mod arith;
pub mod cf;
pub mod enumerate;
pub mod equidist;
pub mod matword;
pub mod qfield;

pub use cf::{CfError, Digit, ExpansionResult, Word};
pub use enumerate::{
    EnumError, EnumParams, QiRecord, RecordRow, ReductionReport, TripleCounts, WordCounts,
};
pub use equidist::{CorollaryReport, DiscrepancyReport, EquidistError, Grid2D, WindowReport};
pub use matword::{CongruenceClass, Mat2, MatError};
pub use qfield::{QfError, Qi, Value};
