//! Quantum radial codes: construction, analysis, syndrome circuits, noisy
//! simulation and windowed BP+OSD decoding.

pub mod analysis;
pub mod circuits;
pub mod classical;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod noise;
pub mod quantum;
pub mod seeds;

pub use error::{Error, Result};

// The guide's code blocks run as doctests, one module per chapter so a
// failure points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/radial-codes.md")]
    mod radial_codes {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
