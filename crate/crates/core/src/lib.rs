//! Mutually unbiased bases for systems of one to three qutrits.
//!
//! The crate builds the complete sets of mutually unbiased bases in dimensions
//! 3, 9 and 27 from finite-field arithmetic, evaluates qutrit gate
//! decompositions of those bases, simulates the corresponding projective
//! measurements, and reconstructs density matrices from the outcome
//! probabilities. A Gell-Mann expectation-value reconstruction is included as
//! the measurement-count baseline, and an entanglement census classifies the
//! bases of multi-qutrit sets.
//!
//! Module map:
//!
//! - [`gf`]: arithmetic and trace in GF(3), GF(9), GF(27)
//! - [`cxla`]: small dense complex linear algebra
//! - [`mub`]: field construction and unbiasedness checks
//! - [`gates`]: F, R, X gates, decomposition words and table verification
//! - [`tomo`]: measurement simulation and state reconstruction
//! - [`ent`]: Schmidt ranks and basis entanglement census

pub mod cxla;
pub mod ent;
pub mod error;
pub mod gates;
pub mod gf;
pub mod io;
pub mod mub;
pub mod tomo;

pub use error::{Error, Result};
