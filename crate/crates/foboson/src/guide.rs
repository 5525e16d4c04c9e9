//! The chapters of the guide in `book/` are included here verbatim, so
//! every Rust code block in the book compiles and runs under
//! `cargo test --doc`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/continued-fractions.md")]
pub mod continued_fractions {}

#[doc = include_str!("../../../book/src/theta-functions.md")]
pub mod theta_functions {}

#[doc = include_str!("../../../book/src/bracket.md")]
pub mod bracket_chapter {}

#[doc = include_str!("../../../book/src/chain-level.md")]
pub mod chain_level {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
