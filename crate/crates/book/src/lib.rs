//! Compiles every Rust listing of the guide as a doc-test.
//!
//! One module per chapter, so a failing listing points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/network.md")]
pub mod network {}
#[doc = include_str!("../../../book/src/radio.md")]
pub mod radio {}
#[doc = include_str!("../../../book/src/election.md")]
pub mod election {}
#[doc = include_str!("../../../book/src/backbone.md")]
pub mod backbone {}
#[doc = include_str!("../../../book/src/rounds.md")]
pub mod rounds {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
