//! Executable companion to the book under `book/`.
//!
//! mdbook renders the chapters; this crate feeds the same Markdown through
//! rustdoc so `cargo test` compiles and runs every Rust snippet in them.
//! One module per chapter keeps test failures attributable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/states-and-operators.md")]
pub mod states_and_operators {}

#[doc = include_str!("../../../book/src/observables-and-alignment.md")]
pub mod observables_and_alignment {}

#[doc = include_str!("../../../book/src/abl-rule.md")]
pub mod abl_rule {}

#[doc = include_str!("../../../book/src/protocols-and-readiness.md")]
pub mod protocols_and_readiness {}

#[doc = include_str!("../../../book/src/monte-carlo-oracle.md")]
pub mod monte_carlo_oracle {}

#[doc = include_str!("../../../book/src/scenarios-and-cli.md")]
pub mod scenarios_and_cli {}
