//! Periodic-grid fields with fast-Fourier differentiation, Poisson
//! inversion, dealiasing, and Sobolev norms.

mod field;
mod grid;
mod ops;
pub mod snapshot;

pub use field::{ComplexField, RealField, VectorField};
pub use grid::{SpectralGrid, DEFAULT_COMPAT_TOL, TWO_PI};
pub use ops::{
    gradient_plus_constant, grid_of, inverse_gradient, solve_poisson, solve_poisson_projected,
    solve_poisson_with_tol, PoissonSolution,
};
