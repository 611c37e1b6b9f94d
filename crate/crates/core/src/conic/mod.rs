//! Declarative conic-program builder and solver bridge.
//!
//! Problems are assembled from scalar variables, affine expressions, and
//! matrix-valued expressions over them. Supported cones: zero (equalities),
//! nonnegative orthant, PSD (real symmetric, or complex Hermitian via the
//! doubled real embedding), and the exponential cone. Solved by Clarabel.

mod builder;
mod expr;
mod solve;

pub use builder::{Field, ProblemBuilder, Sense};
pub use expr::{CLinExpr, ExprMatrix, LinExpr, VarIdx};
pub use solve::{SolveOpts, SolveReport, SolveStatus, SolverReal};
