//! The user guide, embedded chapter by chapter so that every code example
//! in `book/` compiles and runs under `cargo test`. The rendered version
//! builds with `mdbook build book` from the repository root.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/lattices.md")]
pub mod lattices {}

#[doc = include_str!("../../../book/src/mappings.md")]
pub mod mappings {}

#[doc = include_str!("../../../book/src/symmetry-domains.md")]
pub mod symmetry_domains {}

#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}

#[doc = include_str!("../../../book/src/currents.md")]
pub mod currents {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/theorems.md")]
pub mod theorems {}

#[doc = include_str!("../../../book/src/lat-format.md")]
pub mod lat_format {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
