//! Pseudo-Bayesian inference for discretely observed continuous-time Markov
//! chains.
//!
//! The sampler in [`posterior`] targets a pseudo-likelihood that couples the
//! transition matrix `P` to a biorthogonal spectral decomposition of the
//! generator `L`, so that every posterior draw carries both an unconstrained
//! estimate of `P` and a valid generator. [`riva`] provides the exact-likelihood
//! Metropolis–Hastings baseline used for comparison.

pub mod spectral;
pub mod rng;
pub mod sim;
pub mod diffusion;
pub mod posterior;
pub mod riva;
pub mod diagnostics;
pub mod io;
