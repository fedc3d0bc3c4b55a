//! Quantitative polynomial-recurrence machinery for finite integer sets.
//!
//! The crate computes recurrence profiles `n -> |A ∩ (A + P(n))|` and their
//! ε-optimal return-time sets, evaluates the exponential sums and shear
//! algebra behind them, decides membership in rational major boxes and
//! annuli, integrates Fourier mass over box regions, builds lattice-smooth
//! cutoffs and the associated three-part decomposition, and constructs the
//! dimension-lifted and periodic counterexample sets.
//!
//! Everything is deterministic: exact rational/big-integer arithmetic ahead
//! of every float conversion, fixed summation orders, and seeded generators.
//! The crate is `no_std` + `alloc`; IO lives in the companion CLI crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod arcs;
pub mod construct;
pub mod error;
pub mod fft;
pub mod grid;
pub mod poly;
pub mod profile;
pub mod set;
pub mod smooth;
pub mod spectral;
pub mod torus;
pub mod weyl;

pub use error::{Error, Result};
pub use grid::GridSet;
pub use poly::Polynomial;
pub use set::DenseSet;
pub use torus::{Rat, TorusPoint};
