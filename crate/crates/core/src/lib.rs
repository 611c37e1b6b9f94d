//! Quantifying nonlocality of bipartite quantum channels and of their
//! decoherent (classical) actions.
//!
//! The crate provides dense Choi-matrix calculus, local/nonsignaling
//! polytope linear programming, a conic modelling layer over Clarabel, the
//! symmetric-extension hierarchy with decoherent-action strengthenings, NPA
//! moment matrices, the three protocol optimizers (Bell functionals on
//! channels, state interconversion, assisted codes), a seesaw lower-bounder
//! for local operations with shared randomness, and stochastic-matrix
//! simulation from shared entanglement.
//!
//! All numerics are generic over the scalar type ([`Real`], implemented for
//! `f32`/`f64`); the aliases below fix f64 for everyday use.

pub mod chan;
pub mod conic;
pub mod error;
pub mod hierarchy;
pub mod mat;
pub mod npa;
pub mod polytope;
pub mod scalar;
pub mod shape;

pub use error::{Error, Result};
pub use scalar::Real;

/// f64 complex matrix.
pub type Mat = mat::ComplexMatrix<f64>;
/// f64 Choi matrix.
pub type Choi = chan::ChoiMatrix<f64>;
/// f64 density matrix.
pub type Density = chan::DensityMatrix<f64>;
/// f64 conditional distribution.
pub type Dist = polytope::CondDist<f64>;
