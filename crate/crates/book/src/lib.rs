//! Each chapter of the guide is attached to a module here so that
//! `cargo test --doc -p chaoslink-book` runs its Rust listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/dcsk.md")]
pub mod dcsk {}
#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/links.md")]
pub mod links {}
#[doc = include_str!("../../../book/src/average_ber.md")]
pub mod average_ber {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
