//! Pseudospectral laboratory for the Klein-Gordon-Poisson system, its
//! Madelung hydrodynamic form (the relativistic quantum hydrodynamic
//! system), the hyperbolic-elliptic fixed-point solver, and the empirical
//! study of the semiclassical, non-relativistic, and combined limits.
//!
//! Everything lives on a periodic torus with fast-Fourier differentiation;
//! the unbounded-domain decay condition of the continuum problem is emulated
//! by mean-zero potentials.

pub mod config;
pub mod error;
pub mod experiment;
pub mod kg;
pub mod limits;
pub mod madelung;
pub mod rqhd;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
