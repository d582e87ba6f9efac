//! Seeded matching of correlated Gaussian Wigner matrices when an adversary
//! has rewritten a principal minor of each observation.
//!
//! The pipeline runs in stages: noise re-injection and spectral cleaning
//! ([`preprocess`]), a seeded message-passing iteration with a spectral
//! round-to-round update ([`spectral`], [`amp`]), a linear assignment from the
//! final iterates ([`assign`]) and a neighborhood-count refinement
//! ([`refine`]). [`pipeline`] wires them together.

pub mod amp;
pub mod assign;
pub mod denoiser;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod quadrature;
pub mod refine;
pub mod rng;
pub mod selftest;
pub mod spectral;

pub use error::{Error, Result};
