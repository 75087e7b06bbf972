//! Quasi-free representations over a finite weighted ground space, the
//! particle-density operators they induce, and the point processes those
//! densities generate.
//!
//! The crate builds concrete Fock-space realizations of five representation
//! families (two fermionic, three bosonic), computes vacuum correlation
//! measures by normal-ordering recursions, checks them against closed-form
//! kernel predictions (determinant, permanent, hafnian, regularized
//! determinant), and samples the matching point processes.

pub mod error;
pub mod linalg;

pub mod fock;
pub mod ground;
pub mod matfn;
pub mod moments;
pub mod rep;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, RMat};
pub use num_complex::Complex64 as C64;
