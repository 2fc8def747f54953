//! von Neumann–Jordan type constants of `n` vectors in `l_d^p`.

pub mod analyzer;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod functional;
pub mod hadamard;
pub mod optimizer;
pub mod space;

pub use error::{Error, Result};
