//! Localization, counting, and certification of eigenvalues of analytic
//! matrix-valued functions.

pub mod cheb;
pub mod cli;
pub mod counting;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linear;
pub mod matfun;
pub mod problems;
pub mod pseudo;
pub mod refine;
pub mod special;

pub use error::{Error, Result};
pub use matfun::{Domain, MatFun, ScalarTerm, Term};
