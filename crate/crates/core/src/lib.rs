//! Discrete wave maps on the light cone with sphere-valued boundary data.
//!
//! In null coordinates `(u, v) = (t + x, t - x)` the lattice field
//! `Y(m, n) ∈ S^d` is built from its two characteristic boundaries by the
//! reflection recursion
//!
//! ```text
//! Y(m+1, n+1) = R_{Y(m+1, n) + Y(m, n+1)} Y(m, n)
//! ```
//!
//! where `R_Q` reflects across the line spanned by `Q`. With heat Markov
//! chains as boundary data the recursion preserves the law of every
//! staircase path, which is what the verification suites in [`analysis`]
//! check empirically.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{AmbientVector, SpherePoint};
pub use sampling::{BoundaryPair, HeatChainParams, RngStream};
pub use solver::{DiscreteField, ForcingGrid, InterpolatedField};
