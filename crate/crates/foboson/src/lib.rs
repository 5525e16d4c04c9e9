//! Explicit calculus for bosonization charts on complex elliptic curves.
//!
//! The crate has four computational layers and a CLI on top:
//!
//! - [`arith`] — exact integer/rational data attached to a coprime pair
//!   `(n, k)`: negative continued fractions, convergents, subquotient slopes,
//!   index partitions, the endomorphism-dimension identity, and
//!   determinant-line-bundle degrees.
//! - [`elliptic`] — numerical evaluation of the odd theta function, its
//!   logarithmic derivative `zeta`, and the cyclic coefficient entering the
//!   bracket, with lattice reduction and quasi-periodicity handled exactly.
//! - [`bracket`] — the explicit Poisson bracket on a chart of `n` distinct
//!   points and `n` nonzero values: bivector matrix assembly, Jacobiator
//!   tests (analytic and finite-difference), the log-canonical change of
//!   variables, and lattice-invariance checks.
//! - [`dgchain`] — exact rational verification of the chain-level bivector
//!   algebra: the two chain representatives, their homotopies, the
//!   composition-map diagram, and truncation compatibility.
//! - [`cli`] — the `foboson` command-line front end with JSON reports.
//!
//! A narrative guide with runnable snippets lives in `book/`; its code
//! blocks are compiled and run as doc-tests of this crate.

pub mod arith;
pub mod bracket;
pub mod cli;
pub mod dgchain;
pub mod elliptic;
mod error;
pub mod guide;

pub use error::{Error, Result};

// Scalar types used throughout the public API.
pub use num::complex::Complex64;
pub use num::{BigInt, BigRational};
