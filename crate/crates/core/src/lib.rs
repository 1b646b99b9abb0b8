//! Bayesian flow networks over protein residue frames.
//!
//! Four modalities share one discrete-time engine:
//!
//! * [`gmm_flow`]: Gaussian-mixture flow for periodic torsion angles (ψ, χ1..χ4)
//! * [`matrix_fisher`]: isotropic Matrix Fisher flow for residue orientations on SO(3)
//! * [`gaussian_flow`]: Euclidean flow for residue centroids
//! * [`categorical_flow`]: discrete flow over the 20 amino-acid types
//!
//! [`engine`] composes them into the joint training loss and the sampling loop
//! around any [`denoiser::Denoiser`].

pub mod categorical_flow;
pub mod config;
pub mod denoiser;
pub mod engine;
pub mod error;
pub mod gaussian_flow;
pub mod geometry;
pub mod gmm_flow;
pub mod ingest;
pub mod matrix_fisher;
pub mod metrics;
pub mod trajectory;

pub use error::{Error, Result};
