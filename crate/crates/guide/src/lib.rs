//! The guide's chapters, compiled as doc-tests.
//!
//! mdBook renders `book/` for reading, but it cannot run the embedded Rust
//! snippets as tests. Including each chapter here as module documentation
//! lets `cargo test --doc` compile and execute every snippet, so the book
//! cannot drift from the library. One module per chapter keeps test
//! failures attributable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/traps.md")]
pub mod traps {}

#[doc = include_str!("../../../book/src/vibrational-dfs.md")]
pub mod vibrational_dfs {}

#[doc = include_str!("../../../book/src/gate-fidelity.md")]
pub mod gate_fidelity {}

#[doc = include_str!("../../../book/src/ramsey-dephasing.md")]
pub mod ramsey_dephasing {}

#[doc = include_str!("../../../book/src/magic-depths.md")]
pub mod magic_depths {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
