//! Unrolled decomposition of a feature-difference field `D` into a change
//! component `C` and a nuisance component `N`.
//!
//! The crate contains the numerical kernels (Haar subbands, patch-wise
//! singular-value entropy, the unrolled solver and its losses), residual
//! contraction diagnostics, a seeded synthetic-data generator and a
//! finite-difference fitter for desk-scale parameter counts.

pub mod convergence;
pub mod error;
pub mod field;
pub mod fit;
pub mod icdm;
pub mod model;
pub mod objective;
pub mod pufd;
pub mod report;
pub mod rng;
pub mod svd;
pub mod sve;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use field::{FeatureField, Matrix, PatchLayout, PlaneField};
pub use model::{Group, Model, Sample};
