//! Error taxonomy shared across the crate.
//!
//! Three classes matter downstream: `Domain` (caller passed structurally
//! incompatible arguments), `Validation` (data failed a mathematical
//! constraint gate), `Capacity` (a guard or truncation bound was exceeded).
//! The CLI maps `Domain`/`Validation` to exit code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity error: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
